"""Preference-pair construction, quality filters, iteration slicing,
level-targeted candidate reranking, and preference-objective evaluation.

The reward math here is evaluation-side only: it scores already-computed
token log-probabilities (odds-ratio and contrastive objectives), it never
updates parameters. The level estimator is a lexicon-mean stand-in for a
trained regressor, kept behind a small interface so a learned model can be
swapped in.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Mapping, Optional, Sequence

from .dialogue import DegeneracyConfig, is_degenerate
from .errors import SchemaError
from .ingest import Dialogue
from .lexicons import CefrLevel, RatedLexicon
from .textcore import lemmatize_tokens, pos_tag, tokenize, TokenKind

#: Probability clamp keeping odds finite.
EPSILON = 1e-7


# --- continuation prompts and pair building ----------------------------------

def extract_continuation_prompt(
    dialogue: Dialogue,
    round_index: int,
    speaker_format: str = "{speaker}:",
) -> str:
    """One round (two turns) plus the next-speaker prefix.

    The next speaker is the speaker of the round's first turn (round-robin),
    rendered with ``speaker_format``.
    """
    first = 2 * round_index
    if round_index < 0 or first + 1 >= len(dialogue.turns):
        raise ValueError(
            f"round {round_index} out of range for {len(dialogue.turns)}-turn dialogue"
        )
    a, b = dialogue.turns[first], dialogue.turns[first + 1]
    prefix = speaker_format.format(speaker=a.speaker)
    return (
        f"{speaker_format.format(speaker=a.speaker)} {a.utterance}\n"
        f"{speaker_format.format(speaker=b.speaker)} {b.utterance}\n"
        f"{prefix}"
    )


@dataclass(frozen=True)
class PreferencePair:
    prompt: str
    chosen: str
    rejected: str
    filters: Mapping[str, bool] = field(default_factory=dict)
    iteration: Optional[int] = None


@dataclass(frozen=True)
class Rejection:
    prompt: str
    chosen: str
    rejected: str
    filters: Mapping[str, bool]
    failed_rules: tuple[str, ...]


@dataclass(frozen=True)
class PairFilterConfig:
    copy_jaccard_threshold: float = 0.8
    prompt_ngram: int = 8
    degeneracy: DegeneracyConfig = DegeneracyConfig()


def _token_set(text: str) -> set[str]:
    return set(text.casefold().split())


def token_jaccard(a: str, b: str) -> float:
    sa, sb = _token_set(a), _token_set(b)
    if not sa and not sb:
        return 1.0
    union = sa | sb
    return len(sa & sb) / len(union)


def _shares_ngram(source: str, candidate: str, n: int) -> bool:
    src_words = source.casefold().split()
    cand = " " + " ".join(candidate.casefold().split()) + " "
    for i in range(len(src_words) - n + 1):
        gram = " " + " ".join(src_words[i : i + n]) + " "
        if gram in cand:
            return True
    return False


def build_pair(
    prompt: str,
    student_text: str,
    teacher_text: str,
    cfg: PairFilterConfig = PairFilterConfig(),
) -> PreferencePair | Rejection:
    """Assemble one preference pair (teacher chosen over student) if it
    passes the quality filters: the teacher output is not degenerate, does
    not copy the student (token Jaccard below threshold), and reproduces no
    long n-gram of the prompt verbatim. Failures come back as a Rejection
    naming the rules, for the reject log."""
    verdict = is_degenerate(teacher_text, cfg.degeneracy)
    filters = {
        "teacher_not_degenerate": not verdict.degenerate,
        "not_student_copy": token_jaccard(teacher_text, student_text)
        < cfg.copy_jaccard_threshold,
        "not_prompt_copy": not _shares_ngram(prompt, teacher_text, cfg.prompt_ngram),
    }
    failed = tuple(name for name, ok in filters.items() if not ok)
    if failed:
        return Rejection(
            prompt=prompt,
            chosen=teacher_text,
            rejected=student_text,
            filters=filters,
            failed_rules=failed,
        )
    return PreferencePair(
        prompt=prompt, chosen=teacher_text, rejected=student_text, filters=filters
    )


def slice_iterations(
    pairs: Sequence[PreferencePair], k: int = 5, seed: int = 0
) -> list[list[PreferencePair]]:
    """Deterministic seeded shuffle then round-robin into k disjoint slices
    whose sizes differ by at most one; each pair is stamped with its slice
    index."""
    if k < 1:
        raise ValueError("k must be >= 1")
    import random

    order = list(pairs)
    random.Random(seed).shuffle(order)
    slices: list[list[PreferencePair]] = [[] for _ in range(k)]
    for i, pair in enumerate(order):
        slices[i % k].append(replace(pair, iteration=i % k))
    return slices


# --- level prediction and reranking -------------------------------------------

@dataclass(frozen=True)
class CefrPrediction:
    level: CefrLevel
    coverage: float
    low_confidence: bool


def predict_cefr_level(text: str, cefr_lexicon: RatedLexicon) -> CefrPrediction:
    """Lexicon-mean level estimate: mean coded level of covered word lemmas,
    rounded half-up into 1..6. Zero coverage falls back to the lowest level
    with ``low_confidence`` set."""
    tokens = lemmatize_tokens(pos_tag(tokenize(text)))
    words = [t for t in tokens if t.kind is TokenKind.WORD]
    ratings = [r for r in (cefr_lexicon.lookup(t.lemma) for t in words) if r is not None]
    if not ratings:
        return CefrPrediction(level=CefrLevel.A1, coverage=0.0, low_confidence=True)
    mean = sum(ratings) / len(ratings)
    coded = int(math.floor(mean + 0.5))
    return CefrPrediction(
        level=CefrLevel.from_numeric(coded),
        coverage=len(ratings) / len(words),
        low_confidence=False,
    )


@dataclass(frozen=True)
class Candidate:
    text: str
    original_rank: int
    predicted_level: CefrLevel
    score: float = 0.0
    selected: bool = False


def rerank(
    candidates: Sequence[Candidate],
    target: CefrLevel,
    alpha: float = 1.0,
    beta: float = 1.0,
) -> list[Candidate]:
    """Order candidates by ``alpha * (1 - rank/(k-1)) - beta * |level -
    target|`` (the rank term is 1 for a single candidate), ties broken by
    the lower original rank; the top candidate is marked selected."""
    if not candidates:
        raise ValueError("empty candidate list")
    k = len(candidates)
    scored = []
    for cand in candidates:
        rank_term = 1.0 if k == 1 else 1.0 - cand.original_rank / (k - 1)
        penalty = abs(cand.predicted_level.numeric - target.numeric)
        scored.append(replace(cand, score=alpha * rank_term - beta * penalty, selected=False))
    scored.sort(key=lambda c: (-c.score, c.original_rank))
    scored[0] = replace(scored[0], selected=True)
    return scored


# --- preference-objective evaluation -------------------------------------------

@dataclass(frozen=True)
class ScoredSequence:
    token_logprobs: tuple[float, ...]

    def __post_init__(self):
        if not self.token_logprobs:
            raise ValueError("a scored sequence needs at least one token")
        if any(not math.isfinite(lp) for lp in self.token_logprobs):
            raise ValueError("token logprobs must be finite")

    @property
    def length(self) -> int:
        return len(self.token_logprobs)


def sequence_loglik(seq: ScoredSequence, normalize: bool = False) -> float:
    total = sum(seq.token_logprobs)
    return total / seq.length if normalize else total


def _softplus(x: float) -> float:
    # numerically stable -log(sigmoid(-x)) = softplus(x)
    return max(x, 0.0) + math.log1p(math.exp(-abs(x)))


def _log_odds(p: float) -> float:
    p = min(max(p, EPSILON), 1.0 - EPSILON)
    return math.log(p) - math.log1p(-p)


@dataclass(frozen=True)
class OrpoTerms:
    log_odds_ratio: float
    or_loss: float
    reward_chosen: float
    reward_rejected: float
    margin: float


def orpo_terms(chosen: ScoredSequence, rejected: ScoredSequence) -> OrpoTerms:
    """Odds-ratio preference terms over length-normalized likelihoods.

    ``p = exp(loglik/length)`` clamped away from {0, 1}; the loss is
    ``-log sigmoid(log odds(p_c) - log odds(p_r))``; rewards are the
    normalized logliks and the margin their difference.
    """
    reward_c = sequence_loglik(chosen, normalize=True)
    reward_r = sequence_loglik(rejected, normalize=True)
    log_odds_ratio = _log_odds(math.exp(reward_c)) - _log_odds(math.exp(reward_r))
    return OrpoTerms(
        log_odds_ratio=log_odds_ratio,
        or_loss=_softplus(-log_odds_ratio),
        reward_chosen=reward_c,
        reward_rejected=reward_r,
        margin=reward_c - reward_r,
    )


@dataclass(frozen=True)
class CpoTerms:
    cpo_loss: float
    preference_loss: float
    nll: float
    reward_chosen: float
    reward_rejected: float
    margin: float


def cpo_terms(chosen: ScoredSequence, rejected: ScoredSequence, beta: float = 0.1) -> CpoTerms:
    """Contrastive preference terms: rewards are ``beta *`` the unnormalized
    sequence logliks; the loss adds the chosen sequence's mean-token NLL to
    the preference term ``-log sigmoid(reward margin)``."""
    reward_c = beta * sequence_loglik(chosen)
    reward_r = beta * sequence_loglik(rejected)
    margin = reward_c - reward_r
    preference_loss = _softplus(-margin)
    nll = -sequence_loglik(chosen, normalize=True)
    return CpoTerms(
        cpo_loss=preference_loss + nll,
        preference_loss=preference_loss,
        nll=nll,
        reward_chosen=reward_c,
        reward_rejected=reward_r,
        margin=margin,
    )


def reward_accuracy(margins: Iterable[float]) -> Optional[float]:
    """Fraction of pairs preferring chosen; exact ties count one half."""
    total = 0
    score = 0.0
    for margin in margins:
        total += 1
        if margin > 0:
            score += 1.0
        elif margin == 0:
            score += 0.5
    return score / total if total else None


# --- file formats ---------------------------------------------------------------

def write_pairs_jsonl(pairs: Iterable[PreferencePair], out: IO[str]) -> int:
    n = 0
    for p in pairs:
        out.write(json.dumps({
            "prompt": p.prompt,
            "chosen": p.chosen,
            "rejected": p.rejected,
            "filters": dict(p.filters),
            "iteration": p.iteration,
        }, ensure_ascii=False))
        out.write("\n")
        n += 1
    return n


def read_pairs_jsonl(source: IO[str]) -> list[PreferencePair]:
    pairs = []
    for lineno, line in enumerate(source, start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON on line {lineno}: {exc}") from exc
        for key in ("prompt", "chosen", "rejected"):
            if key not in doc:
                raise SchemaError("missing key", f"$[{lineno}].{key}")
        pairs.append(PreferencePair(
            prompt=doc["prompt"],
            chosen=doc["chosen"],
            rejected=doc["rejected"],
            filters=doc.get("filters", {}),
            iteration=doc.get("iteration"),
        ))
    return pairs


def read_scored_pairs_jsonl(source: IO[str]) -> dict[str, dict[str, ScoredSequence]]:
    """Read ``{pair_id, role, token_logprobs}`` lines into
    ``pair_id -> {"chosen": ..., "rejected": ...}``."""
    table: dict[str, dict[str, ScoredSequence]] = {}
    for lineno, line in enumerate(source, start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON on line {lineno}: {exc}") from exc
        for key in ("pair_id", "role", "token_logprobs"):
            if key not in doc:
                raise SchemaError("missing key", f"$[{lineno}].{key}")
        if doc["role"] not in ("chosen", "rejected"):
            raise SchemaError(f"role must be chosen|rejected, got {doc['role']!r}",
                              f"$[{lineno}].role")
        table.setdefault(doc["pair_id"], {})[doc["role"]] = ScoredSequence(
            token_logprobs=tuple(float(x) for x in doc["token_logprobs"])
        )
    return table


def fetch_scored_sequence(
    base_url: str,
    prompt: str,
    completion: str,
    model: Optional[str] = None,
    auth_env: str = "DIALOGKIT_API_TOKEN",
    timeout: float = 60.0,
    session=None,
) -> ScoredSequence:
    """Fetch completion token logprobs from an echo-capable completions
    endpoint (``echo=true, logprobs, max_tokens=0``).

    Returns the logprobs of the completion's tokens (the prompt's are
    dropped using the returned offsets; without offsets, every non-null
    logprob after the prompt boundary is kept). Scored files can also be
    produced by any other means and fed in as JSON-Lines.
    """
    import os

    import requests

    from .errors import EndpointError

    session = session or requests.Session()
    headers = {"Content-Type": "application/json"}
    token = os.environ.get(auth_env)
    if token:
        headers["Authorization"] = f"Bearer {token}"
    payload = {
        "prompt": prompt + completion,
        "max_tokens": 0,
        "echo": True,
        "logprobs": 0,
    }
    if model:
        payload["model"] = model
    try:
        resp = session.post(base_url, json=payload, headers=headers, timeout=timeout)
    except requests.RequestException as exc:
        raise EndpointError(f"logprob endpoint {base_url} failed: {exc}") from exc
    if resp.status_code != 200:
        raise EndpointError(f"logprob endpoint {base_url} returned HTTP {resp.status_code}")
    doc = resp.json()
    try:
        lp = doc["choices"][0]["logprobs"]
        token_logprobs = lp["token_logprobs"]
        offsets = lp.get("text_offset")
    except (KeyError, IndexError, TypeError) as exc:
        raise EndpointError(f"malformed logprobs response: {doc!r}") from exc
    boundary = len(prompt)
    values = []
    for i, logprob in enumerate(token_logprobs):
        if logprob is None:
            continue
        if offsets is not None and offsets[i] < boundary:
            continue
        values.append(float(logprob))
    if not values:
        raise EndpointError("endpoint returned no completion logprobs")
    return ScoredSequence(token_logprobs=tuple(values))


def write_reward_curve_csv(rows: Iterable[Mapping[str, object]], out: IO[str]) -> int:
    """Emit ``step,reward_chosen,reward_rejected,margin,accuracy`` rows."""
    import csv

    writer = csv.DictWriter(
        out, fieldnames=["step", "reward_chosen", "reward_rejected", "margin", "accuracy"]
    )
    writer.writeheader()
    n = 0
    for row in rows:
        writer.writerow(row)
        n += 1
    return n
