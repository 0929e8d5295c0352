"""Multi-turn teacher-student dialogue simulation against pluggable text
generators.

Two generator kinds speak the same interface: an HTTP client for
chat-completions-style endpoints, and a scripted replayer that consumes a
fixture file line by line (deterministic, used for tests and offline runs).
Every generated turn is cleaned (role markers, control characters,
punctuation runs, banned phrases) and checked for degeneracy (too short,
repeated 4-grams, echo of the previous turn) with deterministic re-seeded
retries.

Timestamps are recorded only when explicitly requested so that fixed-seed
runs are byte-reproducible; when present they live in the single
``metadata.created_at`` field.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, replace
from importlib.resources import files
from pathlib import Path
from typing import Optional, Protocol, Sequence

import requests

from .errors import EndpointError, ResourceError, SchemaError

_DATA = files("dialogkit") / "data"

#: Decoding defaults for the two roles.
STUDENT_DEFAULTS = dict(
    max_new_tokens=100, do_sample=True, top_k=50, top_p=0.95, temperature=0.8,
    num_return_sequences=1,
)
TEACHER_DEFAULTS = dict(max_new_tokens=50, do_sample=False)

DEFAULT_ROLE_MARKERS = ("A", "B", "Student", "Teacher", "User", "Assistant", "Kid", "Caregiver")

DEFAULT_OPENING_QUESTION = "What do you like about summer?"


@dataclass(frozen=True)
class DecodingParams:
    max_new_tokens: int = 100
    do_sample: bool = True
    top_k: Optional[int] = None
    top_p: Optional[float] = None
    temperature: Optional[float] = None
    num_return_sequences: int = 1
    repetition_penalty: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.max_new_tokens < 1 or self.num_return_sequences < 1:
            raise ValueError("token and sequence counts must be >= 1")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.top_p is not None and not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.temperature is not None and self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if self.repetition_penalty is not None and self.repetition_penalty <= 0:
            raise ValueError("repetition_penalty must be > 0")


def student_params(**overrides) -> DecodingParams:
    return DecodingParams(**{**STUDENT_DEFAULTS, **overrides})


def teacher_params(**overrides) -> DecodingParams:
    return DecodingParams(**{**TEACHER_DEFAULTS, **overrides})


class Generator(Protocol):
    role: str
    name: str

    def generate(self, prompt: str, params: DecodingParams) -> str: ...


class ScriptedGenerator:
    """Replays responses from a list or text file, one response per line.

    Deterministic and confined to a single dialogue; raises EndpointError
    when the script is exhausted.
    """

    def __init__(self, lines: Sequence[str], role: str, name: str = "scripted"):
        self.lines = list(lines)
        self.role = role
        self.name = name
        self.cursor = 0

    @classmethod
    def from_file(cls, path: str | Path, role: str) -> "ScriptedGenerator":
        path = Path(path)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise ResourceError(f"cannot read script {path}: {exc}") from exc
        return cls(lines, role, name=path.stem)

    def generate(self, prompt: str, params: DecodingParams) -> str:
        if self.cursor >= len(self.lines):
            raise EndpointError(f"script {self.name!r} exhausted after {self.cursor} responses")
        line = self.lines[self.cursor]
        self.cursor += 1
        return line


class HttpGenerator:
    """Chat-completions-style HTTP generator.

    POSTs ``{messages, max_tokens, temperature, top_p, top_k, seed}`` to the
    endpoint; ``top_k``/``seed`` are omitted when unset. The bearer token
    comes from an environment variable, never from config files. Waits
    ``backoff * 2**attempt`` between transport retries, and ``min_interval``
    throttles request spacing per endpoint (thread-safe).
    """

    def __init__(
        self,
        base_url: str,
        role: str,
        model: Optional[str] = None,
        auth_env: str = "DIALOGKIT_API_TOKEN",
        timeout: float = 60.0,
        transport_retries: int = 2,
        backoff: float = 0.5,
        min_interval: float = 0.0,
        system_prompt: Optional[str] = None,
        session: Optional[requests.Session] = None,
    ):
        self.base_url = base_url
        self.role = role
        self.model = model
        self.name = model or base_url
        self.auth_env = auth_env
        self.timeout = timeout
        self.transport_retries = transport_retries
        self.backoff = backoff
        self.min_interval = min_interval
        self.system_prompt = system_prompt
        self.session = session or requests.Session()
        self._throttle_lock = threading.Lock()
        self._last_request = 0.0

    def _throttle(self) -> None:
        if self.min_interval <= 0:
            return
        with self._throttle_lock:
            wait = self._last_request + self.min_interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last_request = time.monotonic()

    def build_payload(self, prompt: str, params: DecodingParams) -> dict:
        messages = []
        if self.system_prompt:
            messages.append({"role": "system", "content": self.system_prompt})
        messages.append({"role": "user", "content": prompt})
        payload: dict = {
            "messages": messages,
            "max_tokens": params.max_new_tokens,
            "do_sample": params.do_sample,
            "n": params.num_return_sequences,
        }
        if self.model:
            payload["model"] = self.model
        for key, value in (
            ("temperature", params.temperature),
            ("top_p", params.top_p),
            ("top_k", params.top_k),
            ("repetition_penalty", params.repetition_penalty),
            ("seed", params.seed),
        ):
            if value is not None:
                payload[key] = value
        return payload

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.auth_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    @staticmethod
    def extract_text(doc: dict) -> str:
        try:
            choice = doc["choices"][0]
        except (KeyError, IndexError, TypeError) as exc:
            raise EndpointError(f"malformed completion response: {doc!r}") from exc
        if isinstance(choice.get("message"), dict) and "content" in choice["message"]:
            return choice["message"]["content"]
        if "text" in choice:
            return choice["text"]
        raise EndpointError(f"completion choice carries no text: {choice!r}")

    def generate(self, prompt: str, params: DecodingParams) -> str:
        payload = self.build_payload(prompt, params)
        attempts = []
        for attempt in range(self.transport_retries + 1):
            self._throttle()
            try:
                resp = self.session.post(
                    self.base_url, json=payload, headers=self._headers(), timeout=self.timeout
                )
            except requests.RequestException as exc:
                attempts.append(f"attempt {attempt + 1}: {exc}")
            else:
                if resp.status_code == 200:
                    return self.extract_text(resp.json())
                attempts.append(f"attempt {attempt + 1}: HTTP {resp.status_code}")
                if resp.status_code not in (429, 500, 502, 503, 504):
                    break
            if attempt < self.transport_retries:
                time.sleep(self.backoff * 2**attempt)
        raise EndpointError(f"endpoint {self.base_url} failed", attempts=attempts)


# --- cleaning and degeneracy -------------------------------------------------

def default_banned_phrases() -> tuple[str, ...]:
    text = (_DATA / "banned_phrases.txt").read_text(encoding="utf-8")
    return tuple(ln for ln in text.splitlines() if ln and not ln.startswith("#"))


_CONTROL_RE = re.compile(r"[\x00-\x08\x0b\x0c\x0e-\x1f\x7f]")
_PUNCT_RUN_RE = re.compile(r"([^\w\s])\1{3,}")


def clean_response(
    text: str,
    banned: Optional[Sequence[str]] = None,
    role_markers: Sequence[str] = DEFAULT_ROLE_MARKERS,
) -> str:
    """Normalize one generated response.

    Truncates at the first banned phrase, strips leading role markers,
    drops control characters, caps same-punctuation runs at three, and
    collapses whitespace. Idempotent, and never returns surrounding
    whitespace (the result may be empty).
    """
    if banned is None:
        banned = default_banned_phrases()
    cut = min((i for i in (text.find(p) for p in banned) if i >= 0), default=-1)
    if cut >= 0:
        text = text[:cut]
    marker_re = re.compile(
        r"^\s*(?:" + "|".join(re.escape(m) for m in role_markers) + r")\s*:\s*"
    )
    while True:
        stripped = marker_re.sub("", text, count=1)
        if stripped == text:
            break
        text = stripped
    text = _CONTROL_RE.sub(" ", text)
    text = _PUNCT_RUN_RE.sub(lambda m: m.group(1) * 3, text)
    return " ".join(text.split())


@dataclass(frozen=True)
class DegeneracyConfig:
    min_words: int = 3
    ngram_n: int = 4
    ngram_limit: int = 1


@dataclass(frozen=True)
class Verdict:
    degenerate: bool
    reason: Optional[str] = None


def is_degenerate(
    text: str,
    cfg: DegeneracyConfig = DegeneracyConfig(),
    previous: Optional[str] = None,
) -> Verdict:
    """Repetition/quality check for one response.

    Degenerate when the text is shorter than ``min_words`` words, repeats
    any ``ngram_n``-gram more than ``ngram_limit`` times, or case-folds
    equal to the immediately preceding turn.
    """
    words = text.split()
    if len(words) < cfg.min_words:
        return Verdict(True, "too_short")
    counts: dict[tuple[str, ...], int] = {}
    for i in range(len(words) - cfg.ngram_n + 1):
        gram = tuple(words[i : i + cfg.ngram_n])
        counts[gram] = counts.get(gram, 0) + 1
        if counts[gram] > cfg.ngram_limit:
            return Verdict(True, "repeated_ngram")
    if previous is not None and text.casefold() == previous.casefold():
        return Verdict(True, "echoes_previous")
    return Verdict(False)


@dataclass
class TurnResult:
    raw_text: str
    clean_text: str
    attempts: list[str]
    degenerate: bool
    reason: Optional[str] = None


def generate_turn(
    endpoint: Generator,
    prompt: str,
    params: DecodingParams,
    retries: int = 5,
    previous: Optional[str] = None,
    degeneracy: DegeneracyConfig = DegeneracyConfig(),
    banned: Optional[Sequence[str]] = None,
) -> TurnResult:
    """Generate, clean, and degeneracy-check one turn with retries.

    Each attempt re-seeds deterministically (``seed + attempt`` when a seed
    is set). Returns the first acceptable text, or the last attempt flagged
    degenerate; raises EndpointError with the attempt log if every attempt
    failed at the transport level.
    """
    attempts: list[str] = []
    last: Optional[tuple[str, str, Verdict]] = None
    for attempt in range(max(1, retries)):
        attempt_params = params
        if params.seed is not None:
            attempt_params = replace(params, seed=params.seed + attempt)
        try:
            raw = endpoint.generate(prompt, attempt_params)
        except EndpointError as exc:
            attempts.append(f"attempt {attempt + 1}: transport error: {exc}")
            continue
        clean = clean_response(raw, banned=banned)
        verdict = is_degenerate(clean, degeneracy, previous=previous)
        last = (raw, clean, verdict)
        if not verdict.degenerate:
            attempts.append(f"attempt {attempt + 1}: ok")
            return TurnResult(raw, clean, attempts, degenerate=False)
        attempts.append(f"attempt {attempt + 1}: degenerate ({verdict.reason})")
    if last is None:
        raise EndpointError(
            f"endpoint {getattr(endpoint, 'name', '?')!r} failed after {retries} attempts",
            attempts=attempts,
        )
    raw, clean, verdict = last
    return TurnResult(raw, clean, attempts, degenerate=True, reason=verdict.reason)


# --- dialogue orchestration ---------------------------------------------------

@dataclass
class GeneratedTurn:
    index: int
    role: str
    raw_text: str
    clean_text: str
    degenerate: bool = False


@dataclass
class GeneratedDialogue:
    metadata: dict
    turns: list[GeneratedTurn]
    transcript: str
    aborted: bool = False
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "turns": [
                {
                    "index": t.index,
                    "role": t.role,
                    "raw_text": t.raw_text,
                    "clean_text": t.clean_text,
                    "degenerate": t.degenerate,
                }
                for t in self.turns
            ],
            "transcript": self.transcript,
            "aborted": self.aborted,
            "error": self.error,
        }


def validate_generated(doc: dict) -> None:
    """Schema check for a persisted generated dialogue; raises SchemaError."""
    if not isinstance(doc, dict):
        raise SchemaError("generated dialogue must be an object")
    for key in ("metadata", "turns", "transcript"):
        if key not in doc:
            raise SchemaError("missing key", f"$.{key}")
    if not isinstance(doc["turns"], list) or not doc["turns"]:
        raise SchemaError("turns must be a non-empty array", "$.turns")
    prev_role = None
    for i, turn in enumerate(doc["turns"]):
        path = f"$.turns[{i}]"
        for key in ("index", "role", "raw_text", "clean_text"):
            if key not in turn:
                raise SchemaError("missing key", f"{path}.{key}")
        if turn["index"] != i:
            raise SchemaError(f"expected index {i}, got {turn['index']}", f"{path}.index")
        if turn["role"] == prev_role:
            raise SchemaError("roles must alternate", f"{path}.role")
        prev_role = turn["role"]


def run_dialogue(
    starter: str,
    student: Generator,
    teacher: Generator,
    n_turns: int,
    student_decoding: Optional[DecodingParams] = None,
    teacher_decoding: Optional[DecodingParams] = None,
    retries: int = 5,
    record_timestamp: bool = False,
    seed: Optional[int] = None,
) -> GeneratedDialogue:
    """Run one teacher-first dialogue of ``n_turns`` total turns.

    The teacher opens with the starter verbatim; thereafter the roles
    alternate, each prompt being the running clean transcript with the
    next role's prefix appended. An endpoint failure aborts the dialogue;
    the partial transcript is returned marked ``aborted``.
    """
    if n_turns < 2 or n_turns % 2 != 0:
        raise ValueError("n_turns must be even and >= 2")
    student_decoding = student_decoding or student_params(seed=seed)
    teacher_decoding = teacher_decoding or teacher_params(seed=seed)
    metadata = {
        "student_id": getattr(student, "name", "student"),
        "teacher_id": getattr(teacher, "name", "teacher"),
        "turns_requested": n_turns,
        "max_tokens": {
            "student": student_decoding.max_new_tokens,
            "teacher": teacher_decoding.max_new_tokens,
        },
        "seed": seed,
        "starter": starter,
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S%z") if record_timestamp else None,
    }
    turns = [GeneratedTurn(index=0, role="teacher", raw_text=starter,
                           clean_text=clean_response(starter))]
    aborted = False
    error = None
    for index in range(1, n_turns):
        role = "student" if index % 2 == 1 else "teacher"
        endpoint = student if role == "student" else teacher
        params = student_decoding if role == "student" else teacher_decoding
        transcript_lines = [f"{t.role.capitalize()}: {t.clean_text}" for t in turns]
        prompt = "\n".join(transcript_lines + [f"{role.capitalize()}:"])
        try:
            result = generate_turn(
                endpoint, prompt, params, retries=retries, previous=turns[-1].clean_text
            )
        except EndpointError as exc:
            aborted = True
            error = str(exc)
            break
        turns.append(
            GeneratedTurn(
                index=index,
                role=role,
                raw_text=result.raw_text,
                clean_text=result.clean_text,
                degenerate=result.degenerate,
            )
        )
    transcript = "\n".join(f"{t.role.capitalize()}: {t.clean_text}" for t in turns)
    return GeneratedDialogue(
        metadata=metadata, turns=turns, transcript=transcript, aborted=aborted, error=error
    )


def _safe_name(raw: str) -> str:
    return re.sub(r"[^\w.-]+", "-", raw)


def dialogue_filename(student_id: str, teacher_id: str, n_turns: int, max_tokens: int, k: int) -> str:
    return f"{_safe_name(student_id)}_{_safe_name(teacher_id)}_{n_turns}_{max_tokens}_{k}.json"


def write_generated_dialogue(dialogue: GeneratedDialogue, out_dir: str | Path, k: int) -> Path:
    """Persist one dialogue as JSON (atomic temp+rename), named
    ``<student>_<teacher>_<turns>_<len>_<k>.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = dialogue.metadata
    name = dialogue_filename(
        meta.get("student_id", "student"),
        meta.get("teacher_id", "teacher"),
        meta.get("turns_requested", len(dialogue.turns)),
        meta.get("max_tokens", {}).get("student", 0),
        k,
    )
    target = out_dir / name
    tmp = target.with_suffix(".json.tmp")
    tmp.write_text(
        json.dumps(dialogue.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    tmp.replace(target)
    return target


# --- starters and the caregiver meta-prompt -----------------------------------

def load_starters(path: Optional[str | Path] = None) -> list[str]:
    """Conversation starters: a JSON array or an object with a STARTERS key."""
    if path is None:
        text = (_DATA / "starters.json").read_text(encoding="utf-8")
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ResourceError(f"cannot read starters file {path}: {exc}") from exc
    doc = json.loads(text)
    starters = doc["STARTERS"] if isinstance(doc, dict) else doc
    if not isinstance(starters, list) or not all(isinstance(s, str) for s in starters):
        raise ResourceError("starters must be a JSON array of strings")
    return starters


_AGE_SUFFIX_RE = re.compile(r"\s*(?:years?|yrs?)\s*(?:old)?\s*$", re.IGNORECASE)


def render_meta_prompt(age_label: str, opening_question: Optional[str] = None) -> str:
    """Fill the caregiver meta-prompt template.

    The age slot drops a trailing "years" so "2-3 years" renders as
    "... that's 2-3 years old". The opening question defaults to the
    template's own.
    """
    if not age_label or not age_label.strip():
        raise ValueError("age_label must be non-empty")
    age = _AGE_SUFFIX_RE.sub("", age_label.strip()) or age_label.strip()
    opening = opening_question or DEFAULT_OPENING_QUESTION
    template = (_DATA / "meta_prompt.txt").read_text(encoding="utf-8")
    return template.replace("<INSERT AGE>", age).replace("<INSERT OPENING>", opening).strip()
