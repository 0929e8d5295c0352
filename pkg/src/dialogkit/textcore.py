"""Deterministic text primitives: tokenization, sentence splitting, coarse
part-of-speech tagging, lemmatization and verb-tense detection.

Everything here is a pure function over immutable values. The tag and lemma
tables are plain TSV resources (see ``lexicons`` for the column layouts), so
results are bit-reproducible across runs and machines. The tagger is a
lexicon-plus-suffix heuristic over a coarse 9-tag set, not a statistical
model; it trades tag-level accuracy for determinism and zero model
dependencies.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from importlib.resources import files
from typing import Iterable, Optional, Sequence


class TokenKind(str, Enum):
    WORD = "word"
    NUMBER = "number"
    PUNCT = "punctuation"


class Pos(str, Enum):
    NOUN = "NOUN"
    VERB = "VERB"
    ADJ = "ADJ"
    ADV = "ADV"
    PRON = "PRON"
    DET = "DET"
    CONJ = "CONJ"
    OTHER = "OTHER"
    PUNCT = "PUNCT"


class Tense(str, Enum):
    PAST = "past"
    PRESENT = "present"
    NONE = "none"


#: POS classes counted as content words.
CONTENT_POS = frozenset({Pos.NOUN, Pos.VERB, Pos.ADJ, Pos.ADV})


@dataclass(frozen=True)
class Token:
    """One token. ``gap`` is the raw text between the previous token and this
    one, so joining ``gap + surface`` over a token list reconstructs the
    original string (see :func:`detokenize`)."""

    surface: str
    lower: str
    kind: TokenKind
    pos: Pos
    lemma: str
    gap: str = ""

    @property
    def is_word(self) -> bool:
        return self.kind is TokenKind.WORD


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    index: int

    def words(self) -> list[Token]:
        return [t for t in self.tokens if t.kind is not TokenKind.PUNCT]

    def text(self) -> str:
        return detokenize(self.tokens).strip()


# Words split on whitespace; punctuation is detached into single-character
# tokens; apostrophe contractions stay attached to the head word.
_WORD = r"[^\W\d_]+(?:['’][^\W\d_]+)*"
_NUMBER = r"\d+(?:\.\d+)?"
_TOKEN_RE = re.compile(rf"{_WORD}|{_NUMBER}|\S")

_TERMINATORS = {".", "!", "?"}
_VOWELS = "aeiou"

_DATA = files("dialogkit") / "data"


def _read_lines(name: str) -> list[str]:
    text = (_DATA / name).read_text(encoding="utf-8")
    return [ln for ln in text.splitlines() if ln and not ln.startswith("#")]


@lru_cache(maxsize=None)
def _tag_table() -> tuple[dict[str, Pos], dict[str, Pos]]:
    closed: dict[str, Pos] = {}
    opened: dict[str, Pos] = {}
    for name, table in (("tagger_closed.tsv", closed), ("tagger_open.tsv", opened)):
        for ln in _read_lines(name):
            word, tag = ln.split("\t")
            table[word] = Pos[tag]
    return closed, opened


@lru_cache(maxsize=None)
def _lemma_exceptions() -> dict[tuple[str, Pos], str]:
    table = {}
    for ln in _read_lines("lemma_exceptions.tsv"):
        form, tag, lemma = ln.split("\t")
        table[(form, Pos[tag])] = lemma
    return table


@lru_cache(maxsize=None)
def _past_forms() -> frozenset[str]:
    return frozenset(_read_lines("past_forms.txt"))


@lru_cache(maxsize=None)
def default_abbreviations() -> frozenset[str]:
    """Abbreviations shipped with the package (period after them never splits)."""
    return frozenset(_read_lines("abbreviations.txt"))


def _classify(surface: str) -> TokenKind:
    if _NUMBER_RE.fullmatch(surface):
        return TokenKind.NUMBER
    if any(ch.isalpha() for ch in surface):
        return TokenKind.WORD
    return TokenKind.PUNCT


_NUMBER_RE = re.compile(_NUMBER)


def tokenize_with_tail(text: str) -> tuple[list[Token], str]:
    """Tokenize and also return the trailing gap after the last token.

    ``detokenize(tokens, tail)`` is the exact inverse for any input.
    """
    tokens: list[Token] = []
    last = 0
    for m in _TOKEN_RE.finditer(text):
        surface = m.group()
        kind = _classify(surface)
        lower = surface.lower()
        pos = Pos.PUNCT if kind is TokenKind.PUNCT else Pos.OTHER
        tokens.append(
            Token(surface=surface, lower=lower, kind=kind, pos=pos,
                  lemma=lower, gap=text[last:m.start()])
        )
        last = m.end()
    return tokens, text[last:]


def tokenize(text: str) -> list[Token]:
    """Split text into tokens; empty input yields an empty list."""
    return tokenize_with_tail(text)[0]


def detokenize(tokens: Iterable[Token], tail: str = "") -> str:
    return "".join(t.gap + t.surface for t in tokens) + tail


_SUFFIX_RULES: tuple[tuple[str, Pos], ...] = (
    ("ly", Pos.ADV),
    ("ing", Pos.VERB),
    ("ed", Pos.VERB),
    ("tion", Pos.NOUN),
    ("sion", Pos.NOUN),
    ("ness", Pos.NOUN),
    ("ment", Pos.NOUN),
    ("ity", Pos.NOUN),
    ("ous", Pos.ADJ),
    ("ful", Pos.ADJ),
    ("ive", Pos.ADJ),
    ("able", Pos.ADJ),
    ("ible", Pos.ADJ),
)


def _tag_word(lower: str) -> Pos:
    closed, opened = _tag_table()
    tag = closed.get(lower)
    if tag is not None:
        return tag
    tag = opened.get(lower)
    if tag is not None:
        return tag
    for suffix, pos in _SUFFIX_RULES:
        if lower.endswith(suffix) and len(lower) >= len(suffix) + 3:
            return pos
    return Pos.NOUN


def pos_tag(tokens: Sequence[Token]) -> list[Token]:
    """Assign one coarse tag per token.

    Priority: closed-class lookup, open-class lookup, suffix rule, then NOUN
    for unknown words. Punctuation keeps PUNCT; numbers tag OTHER.
    """
    out = []
    for tok in tokens:
        if tok.kind is TokenKind.PUNCT:
            out.append(replace(tok, pos=Pos.PUNCT))
        elif tok.kind is TokenKind.NUMBER:
            out.append(replace(tok, pos=Pos.OTHER))
        else:
            out.append(replace(tok, pos=_tag_word(tok.lower)))
    return out


def _undouble(stem: str) -> Optional[str]:
    # stopped -> stopp -> stop; doubled l/s/z is usually genuine (call, miss)
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] in "bdgkmnprt":
        return stem[:-1]
    return None


def _restore_e(stem: str) -> str:
    # mak -> make, rid -> ride; only for short CVC stems to avoid open -> opene
    if (
        len(stem) == 3
        and stem[-1] not in _VOWELS + "wxy"
        and stem[-2] in _VOWELS
        and stem[-3] not in _VOWELS
    ):
        return stem + "e"
    if stem.endswith(("c", "g", "v", "u", "z")) and len(stem) >= 3:
        return stem + "e"
    if stem.endswith("s") and not stem.endswith("ss") and len(stem) >= 3:
        return stem + "e"
    return stem


def _strip_verbal(lower: str, suffix: str) -> str:
    stem = lower[: -len(suffix)]
    undoubled = _undouble(stem)
    if undoubled is not None:
        return undoubled
    return _restore_e(stem)


_ES_AFTER = ("sses", "xes", "zes", "ches", "shes", "oes")


def lemmatize(token: Token) -> str:
    """Lemma for a tagged token: irregular table first, then suffix stripping.

    Idempotent on its own outputs; non-word tokens lemmatize to their
    lowercased surface.
    """
    lower = token.lower
    if token.kind is not TokenKind.WORD:
        return lower
    exc = _lemma_exceptions().get((lower, token.pos))
    if exc is not None:
        return exc
    pos = token.pos
    if pos is Pos.NOUN:
        if lower.endswith("ies") and len(lower) > 4:
            return lower[:-3] + "y"
        if lower.endswith(_ES_AFTER):
            return lower[:-2]
        if lower.endswith("s") and not lower.endswith(("ss", "us", "is")) and len(lower) > 3:
            return lower[:-1]
    elif pos is Pos.VERB:
        if lower.endswith("ies") and len(lower) > 4:
            return lower[:-3] + "y"
        if lower.endswith("ied") and len(lower) > 4:
            return lower[:-3] + "y"
        if lower.endswith("ed") and not lower.endswith("eed") and len(lower) > 3:
            return _strip_verbal(lower, "ed")
        if lower.endswith("ing") and len(lower) > 5:
            return _strip_verbal(lower, "ing")
        if lower.endswith(_ES_AFTER):
            return lower[:-2]
        if lower.endswith("s") and not lower.endswith("ss") and len(lower) > 3:
            return lower[:-1]
    elif pos in (Pos.ADJ, Pos.ADV):
        if lower.endswith("ier") and len(lower) > 4:
            return lower[:-3] + "y"
        if lower.endswith("iest") and len(lower) > 5:
            return lower[:-4] + "y"
        if lower.endswith("er") and len(lower) > 4:
            return _strip_verbal(lower, "er")
        if lower.endswith("est") and len(lower) > 5:
            return _strip_verbal(lower, "est")
    return lower


def lemmatize_tokens(tokens: Sequence[Token]) -> list[Token]:
    return [replace(t, lemma=lemmatize(t)) for t in tokens]


def split_token_sentences(
    tokens: Sequence[Token],
    abbreviations: Optional[frozenset[str]] = None,
) -> list[Sentence]:
    """Partition a token stream into sentences.

    A boundary sits after ``.``, ``!`` or ``?`` when the next token starts a
    new whitespace-separated word (or the stream ends); lowercase transcript
    text still splits. A period following a known abbreviation never splits,
    and a terminator run (``?!``) only breaks after its last character. The
    sentences partition the input exactly: no token is dropped or duplicated.
    """
    if abbreviations is None:
        abbreviations = default_abbreviations()
    sentences: list[Sentence] = []
    start = 0
    n = len(tokens)
    for i, tok in enumerate(tokens):
        if tok.kind is not TokenKind.PUNCT or tok.surface not in _TERMINATORS:
            continue
        if i + 1 < n and tokens[i + 1].surface in _TERMINATORS:
            continue  # boundary goes after the last terminator in a run
        if tok.surface == ".":
            j = i - 1
            while j >= start and tokens[j].kind is TokenKind.PUNCT:
                j -= 1
            if j >= start and tokens[j].kind is TokenKind.WORD and tokens[j].lower in abbreviations:
                continue
        if i + 1 < n:
            nxt = tokens[i + 1]
            if nxt.kind is TokenKind.PUNCT or nxt.gap == "" or nxt.gap.strip() != "":
                continue
        sentences.append(Sentence(tokens=tuple(tokens[start : i + 1]), index=len(sentences)))
        start = i + 1
    if start < n:
        sentences.append(Sentence(tokens=tuple(tokens[start:]), index=len(sentences)))
    return sentences


def split_sentences(text: str, abbreviations: Optional[frozenset[str]] = None) -> list[Sentence]:
    """Sentence-split raw text (tokens inside are untagged)."""
    return split_token_sentences(tokenize(text), abbreviations)


def analyze(text: str, abbreviations: Optional[frozenset[str]] = None) -> list[Sentence]:
    """Full pipeline: tokenize, tag, lemmatize, sentence-split."""
    tokens = lemmatize_tokens(pos_tag(tokenize(text)))
    return split_token_sentences(tokens, abbreviations)


def _is_past_form(lower: str) -> bool:
    if lower in _past_forms():
        return True
    return lower.endswith("ed") and not lower.endswith("eed") and len(lower) > 3


def detect_tense(sentence: Sentence) -> Tense:
    """Past if any verb shows past morphology, else present if any verb, else none.

    Future auxiliaries count as present: the two-way split is all the
    adjacent-sentence tense-match metric needs.
    """
    verbs = [t for t in sentence.tokens if t.pos is Pos.VERB]
    if not verbs:
        return Tense.NONE
    if any(_is_past_form(v.lower) for v in verbs):
        return Tense.PAST
    return Tense.PRESENT
