"""The linguistic-complexity metric suite.

Computes, for any text span (raw text, a turn, or a whole dialogue): lexical
richness (TTR family, moving-average TTR, rated polysemy mean), discourse
connective counts, syntactic complexity (sentence length, clauses per
sentence), cohesion (adjacent-sentence content/verb overlap, tense
repetition, repeated-lemma ratios), and semantic measures (age-of-acquisition,
CEFR and familiarity means, concept density, a composite narrativity score).

Conventions used throughout:

* absent is ``None``, never 0 — a rated mean with zero lexicon coverage is
  absent, not zero, and JSON serializes it as ``null``;
* ratio metrics are always within [0, 1];
* adjacent-pair overlap divides by the *second* sentence's lemma set, and
  pairs with an empty denominator are excluded from the mean;
* tense repetition excludes verbless pairs from its denominator;
* sentence length averages over sentences that contain at least one
  word/number token, so it is >= 1 whenever defined;
* ``lda_1_all_sent`` in per-segment records is always ``null``: it would
  need a trained topic model, which this package deliberately excludes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Optional, Sequence, Union

from .ingest import Dialogue, Turn
from .lexicons import ConnectiveLexicon, RatedLexicon, ResourceBundle
from .textcore import (
    CONTENT_POS,
    Pos,
    Sentence,
    Tense,
    Token,
    TokenKind,
    analyze,
    detect_tense,
)

Span = Union[str, Turn, Dialogue]

_POS_FILTERS = {"noun": Pos.NOUN, "verb": Pos.VERB, "adj": Pos.ADJ}


def _words(tokens: Sequence[Token]) -> list[Token]:
    return [t for t in tokens if t.kind is TokenKind.WORD]


def _mean(values: Sequence[float]) -> Optional[float]:
    return sum(values) / len(values) if values else None


def ttr(tokens: Sequence[Token], pos_filter: Optional[Pos] = None) -> Optional[float]:
    """Distinct lowercased types over total word tokens, optionally
    restricted to one POS class. Empty subset -> None."""
    words = _words(tokens)
    if pos_filter is not None:
        words = [t for t in words if t.pos is pos_filter]
    if not words:
        return None
    return len({t.lower for t in words}) / len(words)


def lemma_ttr(tokens: Sequence[Token], n: int = 1) -> Optional[float]:
    """Distinct lemma n-grams over total lemma n-grams (word tokens)."""
    lemmas = [t.lemma for t in _words(tokens)]
    if len(lemmas) < n:
        return None
    grams = [tuple(lemmas[i : i + n]) for i in range(len(lemmas) - n + 1)]
    return len(set(grams)) / len(grams)


def mattr(tokens: Sequence[Token], window: int = 50) -> Optional[float]:
    """Mean TTR over every contiguous window of word tokens (stride 1);
    shorter texts fall back to plain TTR."""
    if window < 1:
        raise ValueError("window must be >= 1")
    words = [t.lower for t in _words(tokens)]
    if not words:
        return None
    if len(words) < window:
        return len(set(words)) / len(words)
    total = 0.0
    count = 0
    for i in range(len(words) - window + 1):
        chunk = words[i : i + window]
        total += len(set(chunk)) / window
        count += 1
    return total / count


def rated_mean(tokens: Sequence[Token], lex: RatedLexicon) -> tuple[Optional[float], float]:
    """Mean lexicon rating over word tokens whose lemma is rated, plus the
    coverage ratio. Unknown words are skipped, never imputed."""
    words = _words(tokens)
    if not words:
        return None, 0.0
    ratings = [r for r in (lex.lookup(t.lemma) for t in words) if r is not None]
    coverage = len(ratings) / len(words)
    if not ratings:
        return None, 0.0
    return sum(ratings) / len(ratings), coverage


@dataclass(frozen=True)
class ConnectiveCounts:
    total: int = 0
    additive: int = 0
    adversative: int = 0
    causal: int = 0


def count_connectives(tokens: Sequence[Token], lex: ConnectiveLexicon) -> ConnectiveCounts:
    """Longest-match-first scan over the lowercased token sequence; each
    matched span is consumed once, so multiword connectives do not also
    count their sub-words."""
    lowers = [t.lower for t in tokens]
    counts = {name: 0 for name in lex.classes}
    i = 0
    n = len(lowers)
    while i < n:
        matched = False
        for span in range(min(lex.max_words, n - i), 0, -1):
            phrase = " ".join(lowers[i : i + span])
            cls = lex.class_of(phrase)
            if cls is not None:
                counts[cls] += 1
                i += span
                matched = True
                break
        if not matched:
            i += 1
    return ConnectiveCounts(total=sum(counts.values()), **counts)


def _sentence_word_count(sentence: Sentence) -> int:
    return sum(1 for t in sentence.tokens if t.kind is not TokenKind.PUNCT)


def mean_sentence_length(sentences: Sequence[Sentence]) -> Optional[float]:
    """Mean word+number tokens per sentence; punctuation-only sentences are
    skipped so the value is >= 1 whenever defined."""
    counts = [c for c in map(_sentence_word_count, sentences) if c > 0]
    return _mean(counts)


def _clause_count(sentence: Sentence) -> int:
    groups = 0
    in_group = False
    for tok in sentence.tokens:
        if tok.pos is Pos.VERB:
            if not in_group:
                groups += 1
                in_group = True
        else:
            in_group = False
    return max(1, groups)


def mean_clauses_per_sentence(sentences: Sequence[Sentence]) -> Optional[float]:
    """Clauses approximated as maximal runs of verb-tagged tokens, floored
    at one per sentence."""
    if not sentences:
        return None
    return _mean([_clause_count(s) for s in sentences])


def _lemma_set(sentence: Sentence, klass: str) -> set[str]:
    if klass == "all":
        return {t.lemma for t in sentence.tokens if t.kind is TokenKind.WORD}
    if klass == "verb":
        return {t.lemma for t in sentence.tokens if t.pos is Pos.VERB}
    if klass == "content":
        return {t.lemma for t in sentence.tokens if t.pos in CONTENT_POS}
    raise ValueError(f"unknown overlap class {klass!r}")


def adjacent_overlap(sentences: Sequence[Sentence], klass: str = "content") -> Optional[float]:
    """Mean over adjacent sentence pairs of |lemmas(s_i) & lemmas(s_i+1)| /
    |lemmas(s_i+1)|, restricted to the class. Absent below two sentences."""
    if len(sentences) < 2:
        return None
    ratios = []
    for a, b in zip(sentences, sentences[1:]):
        denom = _lemma_set(b, klass)
        if not denom:
            continue
        ratios.append(len(_lemma_set(a, klass) & denom) / len(denom))
    return _mean(ratios)


def verb_tense_repetition(sentences: Sequence[Sentence]) -> Optional[float]:
    """Share of adjacent pairs with equal, non-absent tense; verbless pairs
    leave the denominator."""
    if len(sentences) < 2:
        return None
    tenses = [detect_tense(s) for s in sentences]
    eligible = 0
    matches = 0
    for a, b in zip(tenses, tenses[1:]):
        if a is Tense.NONE or b is Tense.NONE:
            continue
        eligible += 1
        if a is b:
            matches += 1
    if eligible == 0:
        return None
    return matches / eligible


def concept_density(sentences: Sequence[Sentence]) -> Optional[float]:
    """Mean distinct content lemmas per sentence."""
    if not sentences:
        return None
    return _mean([len(_lemma_set(s, "content")) for s in sentences])


def repeated_lemma_ratios(sentences: Sequence[Sentence]) -> dict[str, Optional[float]]:
    """Fraction of content (and content+pronoun) tokens whose lemma already
    occurred earlier in the span."""
    tokens = [t for s in sentences for t in s.tokens]

    def ratio(include_pronouns: bool) -> Optional[float]:
        seen: set[str] = set()
        repeats = 0
        total = 0
        for tok in tokens:
            if tok.pos in CONTENT_POS or (include_pronouns and tok.pos is Pos.PRON):
                total += 1
                if tok.lemma in seen:
                    repeats += 1
                seen.add(tok.lemma)
        return repeats / total if total else None

    return {
        "repeated_content_lemmas": ratio(False),
        "repeated_content_and_pronoun_lemmas": ratio(True),
    }


#: Default normalization bounds for the narrativity components.
NARRATIVITY_BOUNDS = {
    "pronoun_noun_ratio": (0.0, 1.0),
    "vtr": (0.0, 1.0),
    "vo_adj": (0.0, 1.0),
}


def narrativity(
    components: dict[str, Optional[float]],
    bounds: Optional[dict[str, tuple[float, float]]] = None,
) -> Optional[float]:
    """Mean of min-max-normalized narrative signals (pronoun/noun ratio,
    tense repetition, adjacent verb overlap). Normalized values are clamped
    to [0, 1]; the bounds come from a calibration config. This composite is
    this package's own definition and is config-overridable."""
    if bounds is None:
        bounds = NARRATIVITY_BOUNDS
    normalized = []
    for name, value in components.items():
        if value is None:
            continue
        lo, hi = bounds.get(name, (0.0, 1.0))
        if hi <= lo:
            normalized.append(0.5)
        else:
            normalized.append(min(1.0, max(0.0, (value - lo) / (hi - lo))))
    return _mean(normalized)


@dataclass
class ComplexityProfile:
    """One record with every suite metric for a text span. ``None`` means
    the metric is undefined on this span (absent, not zero)."""

    length: int = 0
    ttr: Optional[float] = None
    noun_ttr: Optional[float] = None
    verb_ttr: Optional[float] = None
    adj_ttr: Optional[float] = None
    lemma_ttr: Optional[float] = None
    bigram_lemma_ttr: Optional[float] = None
    trigram_lemma_ttr: Optional[float] = None
    mattr: Optional[float] = None
    mpoly: Optional[float] = None
    tdc: int = 0
    acf: int = 0
    adcf: int = 0
    cacf: int = 0
    msl: Optional[float] = None
    mcps: Optional[float] = None
    cwo_adj: Optional[float] = None
    vo_adj: Optional[float] = None
    vtr: Optional[float] = None
    aoa: Optional[float] = None
    cefr: Optional[float] = None
    mfam: Optional[float] = None
    cd: Optional[float] = None
    narrativity: Optional[float] = None
    repeated_content_lemmas: Optional[float] = None
    repeated_content_and_pronoun_lemmas: Optional[float] = None
    adjacent_overlap_all_sent: Optional[float] = None
    coverage: dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            out[f.name] = getattr(self, f.name)
        return out


#: The 0-1 cohesion family averaged by the composite: the lemma TTRs,
#: adjacent-sentence overlaps, repeated-lemma ratios and tense repetition.
COHESION_COMPONENTS = (
    "ttr",
    "lemma_ttr",
    "bigram_lemma_ttr",
    "trigram_lemma_ttr",
    "adjacent_overlap_all_sent",
    "repeated_content_lemmas",
    "repeated_content_and_pronoun_lemmas",
    "vtr",
    "vo_adj",
    "cwo_adj",
)


@dataclass(frozen=True)
class CohesionComposite:
    value: Optional[float]
    components: dict[str, float]
    complete: bool


def cohesion_composite(
    profile: ComplexityProfile,
    component_names: Sequence[str] = COHESION_COMPONENTS,
) -> CohesionComposite:
    """Arithmetic mean of the (already 0-1) cohesion components. Absent
    components are excluded with the denominator adjusted, and the result is
    flagged incomplete."""
    present: dict[str, float] = {}
    missing = False
    for name in component_names:
        value = getattr(profile, name)
        if value is None:
            missing = True
        else:
            present[name] = value
    value = _mean(list(present.values()))
    return CohesionComposite(value=value, components=present, complete=not missing)


def _span_chunks(span: Span) -> list[str]:
    if isinstance(span, str):
        return [span]
    if isinstance(span, Turn):
        return [span.utterance]
    if isinstance(span, Dialogue):
        return [t.utterance for t in span.turns]
    raise TypeError(f"cannot profile {type(span).__name__}")


def _analyze_chunks(chunks: Sequence[str]) -> tuple[list[Token], list[Sentence]]:
    # Sentence boundaries never cross chunk (turn) edges.
    tokens: list[Token] = []
    sentences: list[Sentence] = []
    for chunk in chunks:
        for sent in analyze(chunk):
            sentences.append(Sentence(tokens=sent.tokens, index=len(sentences)))
            tokens.extend(sent.tokens)
    return tokens, sentences


def profile(span: Span, resources: ResourceBundle, mattr_window: int = 50) -> ComplexityProfile:
    """Run the full metric suite over a text span. Deterministic; resource
    errors are the only errors it can raise."""
    tokens, sentences = _analyze_chunks(_span_chunks(span))
    words = _words(tokens)
    prof = ComplexityProfile(length=sum(1 for t in tokens if t.kind is not TokenKind.PUNCT))
    if not tokens:
        prof.coverage = {name: 0.0 for name in ("aoa", "cefr", "mfam", "mpoly")}
        return prof

    prof.ttr = ttr(tokens)
    prof.noun_ttr = ttr(tokens, Pos.NOUN)
    prof.verb_ttr = ttr(tokens, Pos.VERB)
    prof.adj_ttr = ttr(tokens, Pos.ADJ)
    prof.lemma_ttr = lemma_ttr(tokens, 1)
    prof.bigram_lemma_ttr = lemma_ttr(tokens, 2)
    prof.trigram_lemma_ttr = lemma_ttr(tokens, 3)
    prof.mattr = mattr(tokens, mattr_window)

    prof.mpoly, cov_poly = rated_mean(tokens, resources.polysemy)
    prof.aoa, cov_aoa = rated_mean(tokens, resources.aoa)
    prof.cefr, cov_cefr = rated_mean(tokens, resources.cefr)
    prof.mfam, cov_fam = rated_mean(tokens, resources.familiarity)
    prof.coverage = {"aoa": cov_aoa, "cefr": cov_cefr, "mfam": cov_fam, "mpoly": cov_poly}

    conn = count_connectives(tokens, resources.connectives)
    prof.tdc, prof.acf, prof.adcf, prof.cacf = (
        conn.total,
        conn.additive,
        conn.adversative,
        conn.causal,
    )

    prof.msl = mean_sentence_length(sentences)
    prof.mcps = mean_clauses_per_sentence(sentences)
    prof.cwo_adj = adjacent_overlap(sentences, "content")
    prof.vo_adj = adjacent_overlap(sentences, "verb")
    prof.adjacent_overlap_all_sent = adjacent_overlap(sentences, "all")
    prof.vtr = verb_tense_repetition(sentences)
    prof.cd = concept_density(sentences)
    reps = repeated_lemma_ratios(sentences)
    prof.repeated_content_lemmas = reps["repeated_content_lemmas"]
    prof.repeated_content_and_pronoun_lemmas = reps["repeated_content_and_pronoun_lemmas"]

    nouns = sum(1 for t in words if t.pos is Pos.NOUN)
    pronouns = sum(1 for t in words if t.pos is Pos.PRON)
    pn_ratio = pronouns / nouns if nouns else None
    prof.narrativity = narrativity(
        {"pronoun_noun_ratio": pn_ratio, "vtr": prof.vtr, "vo_adj": prof.vo_adj}
    )
    return prof


def _segment_record(chunks: Sequence[str]) -> dict:
    tokens, sentences = _analyze_chunks(chunks)
    reps = repeated_lemma_ratios(sentences)
    return {
        "noun_ttr": ttr(tokens, Pos.NOUN),
        "verb_ttr": ttr(tokens, Pos.VERB),
        "adj_ttr": ttr(tokens, Pos.ADJ),
        "lemma_ttr": lemma_ttr(tokens, 1),
        "bigram_lemma_ttr": lemma_ttr(tokens, 2),
        "trigram_lemma_ttr": lemma_ttr(tokens, 3),
        "adjacent_overlap_all_sent": adjacent_overlap(sentences, "all"),
        "lda_1_all_sent": None,  # needs a trained topic model; out of scope
        "repeated_content_lemmas": reps["repeated_content_lemmas"],
        "repeated_content_and_pronoun_lemmas": reps["repeated_content_and_pronoun_lemmas"],
    }


def dialogue_meta(
    dialogue: Dialogue,
    resources: ResourceBundle,
    segment_window: int = 3,
    precomputed: Optional[ComplexityProfile] = None,
) -> dict:
    """Build the per-dialogue ``meta`` block: whole-dialogue stats plus one
    per-segment record for each sliding window of ``segment_window``
    consecutive turns (a single segment when the dialogue is shorter).
    Existing unknown meta keys on the dialogue are preserved."""
    prof = precomputed if precomputed is not None else profile(dialogue, resources)
    texts = [t.utterance for t in dialogue.turns]
    if len(texts) <= segment_window:
        windows = [texts]
    else:
        windows = [texts[i : i + segment_window] for i in range(len(texts) - segment_window + 1)]
    meta = dict(dialogue.meta or {})
    meta.update(
        {
            "length": prof.length,
            "ttr": {"noun": prof.noun_ttr, "verb": prof.verb_ttr, "adj": prof.adj_ttr},
            "type_token_ratios": [_segment_record(w) for w in windows],
            "coverage": prof.coverage,
        }
    )
    return meta


#: Column order for the flat CSV export consumed by the aggregator.
PROFILE_COLUMNS = (
    "length",
    "ttr",
    "noun_ttr",
    "verb_ttr",
    "adj_ttr",
    "lemma_ttr",
    "bigram_lemma_ttr",
    "trigram_lemma_ttr",
    "mattr",
    "mpoly",
    "tdc",
    "acf",
    "adcf",
    "cacf",
    "msl",
    "mcps",
    "cwo_adj",
    "vo_adj",
    "vtr",
    "aoa",
    "cefr",
    "mfam",
    "cd",
    "narrativity",
    "repeated_content_lemmas",
    "repeated_content_and_pronoun_lemmas",
    "adjacent_overlap_all_sent",
)


def profile_row(span_id: str, prof: ComplexityProfile) -> dict:
    """Flatten a profile into one CSV row (absent values stay empty)."""
    row = {"span_id": span_id}
    for name in PROFILE_COLUMNS:
        value = getattr(prof, name)
        row[name] = "" if value is None else value
    return row
