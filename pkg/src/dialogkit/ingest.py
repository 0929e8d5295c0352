"""Transcript parsing, speaker-turn segmentation, fixed-length dialogue
sampling and the dialogue JSON schema.

A turn is the maximal run of utterances from one speaker; dialogues are
sampled as the shortest prefix giving each speaker a fixed number of turns,
continuing across the whole transcript stream.
"""

from __future__ import annotations

import io
import json
import logging
import re
from dataclasses import dataclass, replace
from typing import IO, Iterable, Iterator, Optional, Sequence

from .errors import EmptyTranscriptError, SchemaError, TranscriptParseError

log = logging.getLogger(__name__)

#: Annotation markup stripped before segmentation, e.g. ``{F um}``,
#: ``[laughter]``, ``<b_aside>``. Override by passing your own list.
DEFAULT_CLEAN_PATTERNS = (
    r"\{[A-Za-z][^{}]*\}",
    r"\[[^\[\]]*\]",
    r"<[^<>]*>",
    r"\+\+?",
    r"#",
)

_PREFIXED_RE = re.compile(r"^\s*([A-Za-z][\w.-]*)\s*:\s*(.*)$")


@dataclass(frozen=True)
class Utterance:
    speaker: str
    text: str
    source_line: int = 0


@dataclass(frozen=True)
class Turn:
    speaker: str
    utterance: str
    index: int


@dataclass
class Dialogue:
    dialog_id: str
    turns: list[Turn]
    meta: Optional[dict] = None
    short: bool = False

    def speakers(self) -> list[str]:
        seen: dict[str, None] = {}
        for t in self.turns:
            seen.setdefault(t.speaker)
        return list(seen)


def clean_transcript_text(text: str, patterns: Sequence[str] = DEFAULT_CLEAN_PATTERNS) -> str:
    """Strip transcript annotation markup and collapse whitespace."""
    for pat in patterns:
        text = re.sub(pat, " ", text)
    return " ".join(text.split())


def parse_transcript(
    source: IO[str] | str,
    format: str = "two_column",
    strict: bool = False,
    clean_patterns: Sequence[str] = DEFAULT_CLEAN_PATTERNS,
) -> list[Utterance]:
    """Parse a transcript into speaker-attributed utterances.

    ``two_column`` expects ``speaker<TAB>utterance`` lines; ``prefixed``
    expects ``A: utterance``. Blank lines are skipped. Unparseable lines are
    logged with their line number and skipped, or raised in strict mode.
    An empty result raises EmptyTranscriptError.
    """
    if format not in ("two_column", "prefixed"):
        raise ValueError(f"unknown transcript format {format!r}")
    stream = io.StringIO(source) if isinstance(source, str) else source
    utterances: list[Utterance] = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        speaker: Optional[str] = None
        text = ""
        if format == "two_column":
            parts = line.split("\t", 1)
            if len(parts) == 2 and parts[0].strip():
                speaker, text = parts[0].strip(), parts[1]
        else:
            m = _PREFIXED_RE.match(line)
            if m:
                speaker, text = m.group(1), m.group(2)
        if speaker is None:
            if strict:
                raise TranscriptParseError(f"unparseable transcript line: {line!r}", line=lineno)
            log.warning("skipping unparseable transcript line %d: %r", lineno, line)
            continue
        text = clean_transcript_text(text, clean_patterns)
        if not text:
            continue
        utterances.append(Utterance(speaker=speaker, text=text, source_line=lineno))
    if not utterances:
        raise EmptyTranscriptError("transcript contains no utterances")
    return utterances


def segment_turns(utterances: Sequence[Utterance]) -> list[Turn]:
    """Merge maximal same-speaker runs into turns, joining texts with a
    single space. Output speakers alternate; order is preserved."""
    if not utterances:
        raise EmptyTranscriptError("cannot segment an empty utterance list")
    turns: list[Turn] = []
    run_speaker = utterances[0].speaker
    run_texts = [utterances[0].text]
    for utt in utterances[1:]:
        if utt.speaker == run_speaker:
            run_texts.append(utt.text)
        else:
            turns.append(Turn(speaker=run_speaker, utterance=" ".join(run_texts), index=len(turns)))
            run_speaker, run_texts = utt.speaker, [utt.text]
    turns.append(Turn(speaker=run_speaker, utterance=" ".join(run_texts), index=len(turns)))
    return turns


def sample_dialogue(
    turns: Sequence[Turn],
    per_speaker: int = 5,
    dialog_id: str = "dialog_0",
) -> Dialogue:
    """Shortest prefix in which each of the two speakers has exactly
    ``per_speaker`` turns; if the list runs out first the dialogue is
    returned as-is with ``short=True``."""
    if per_speaker < 1:
        raise ValueError("per_speaker must be >= 1")
    if not turns:
        raise EmptyTranscriptError("cannot sample from an empty turn list")
    prefix, _ = _take_dialogue(turns, per_speaker)
    return _make_dialogue(prefix, per_speaker, dialog_id)


def _take_dialogue(turns: Sequence[Turn], per_speaker: int) -> tuple[list[Turn], int]:
    counts: dict[str, int] = {}
    taken: list[Turn] = []
    for i, turn in enumerate(turns):
        taken.append(turn)
        counts[turn.speaker] = counts.get(turn.speaker, 0) + 1
        if len(counts) >= 2 and all(c >= per_speaker for c in counts.values()):
            return taken, i + 1
    return taken, len(turns)


def _make_dialogue(prefix: list[Turn], per_speaker: int, dialog_id: str) -> Dialogue:
    counts: dict[str, int] = {}
    for t in prefix:
        counts[t.speaker] = counts.get(t.speaker, 0) + 1
    short = len(counts) < 2 or any(c < per_speaker for c in counts.values())
    reindexed = [replace(t, index=i) for i, t in enumerate(prefix)]
    return Dialogue(dialog_id=dialog_id, turns=reindexed, short=short)


def iter_dialogues(
    turns: Sequence[Turn],
    per_speaker: int = 5,
    source_stem: str = "dialog",
    drop_short: bool = False,
) -> Iterator[Dialogue]:
    """Stream successive fixed-length dialogues from one segmented transcript.

    Dialogue ids are ``<source_stem>_<k>`` with k the 0-based ordinal. The
    trailing incomplete dialogue is kept with ``short=True`` unless
    ``drop_short`` is set.
    """
    if per_speaker < 1:
        raise ValueError("per_speaker must be >= 1")
    pos = 0
    k = 0
    while pos < len(turns):
        prefix, consumed = _take_dialogue(turns[pos:], per_speaker)
        dialogue = _make_dialogue(prefix, per_speaker, f"{source_stem}_{k}")
        pos += consumed
        k += 1
        if dialogue.short and drop_short:
            continue
        yield dialogue


# --- JSON schema -----------------------------------------------------------

def dialogue_to_dict(dialogue: Dialogue) -> dict:
    doc: dict = {
        "dialogID": dialogue.dialog_id,
        "turns": [{"speaker": t.speaker, "utterance": t.utterance} for t in dialogue.turns],
    }
    if dialogue.short:
        doc["short"] = True
    if dialogue.meta is not None:
        doc["meta"] = dialogue.meta
    return doc


def dialogue_from_dict(doc: dict, path: str = "$") -> Dialogue:
    if not isinstance(doc, dict):
        raise SchemaError("dialogue document must be a JSON object", path)
    if "dialogID" not in doc or not isinstance(doc["dialogID"], str) or not doc["dialogID"]:
        raise SchemaError("missing or empty dialogID", f"{path}.dialogID")
    raw_turns = doc.get("turns")
    if not isinstance(raw_turns, list) or not raw_turns:
        raise SchemaError("turns must be a non-empty array", f"{path}.turns")
    turns: list[Turn] = []
    prev_speaker: Optional[str] = None
    for i, item in enumerate(raw_turns):
        tpath = f"{path}.turns[{i}]"
        if not isinstance(item, dict):
            raise SchemaError("turn must be an object", tpath)
        speaker = item.get("speaker")
        utterance = item.get("utterance")
        if not isinstance(speaker, str) or not speaker:
            raise SchemaError("missing speaker", f"{tpath}.speaker")
        if not isinstance(utterance, str) or not utterance.strip():
            raise SchemaError("missing utterance", f"{tpath}.utterance")
        if speaker == prev_speaker:
            raise SchemaError(
                f"adjacent turns share speaker {speaker!r}", f"{tpath}.speaker"
            )
        prev_speaker = speaker
        turns.append(Turn(speaker=speaker, utterance=utterance, index=i))
    meta = doc.get("meta")
    if meta is not None and not isinstance(meta, dict):
        raise SchemaError("meta must be an object", f"{path}.meta")
    return Dialogue(
        dialog_id=doc["dialogID"],
        turns=turns,
        meta=meta,
        short=bool(doc.get("short", False)),
    )


def write_dialogue_json(dialogue: Dialogue, out: IO[str], indent: Optional[int] = 2) -> None:
    """Serialize one dialogue. Unknown meta keys round-trip verbatim and
    floats keep full precision (json emits shortest exact repr)."""
    json.dump(dialogue_to_dict(dialogue), out, indent=indent, ensure_ascii=False)
    if indent is not None:
        out.write("\n")


def read_dialogue_json(source: IO[str] | str) -> Dialogue:
    text = source if isinstance(source, str) else source.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return dialogue_from_dict(doc)


def write_dialogues_jsonl(dialogues: Iterable[Dialogue], out: IO[str]) -> int:
    n = 0
    for d in dialogues:
        out.write(json.dumps(dialogue_to_dict(d), ensure_ascii=False))
        out.write("\n")
        n += 1
    return n


def read_dialogues_jsonl(source: IO[str]) -> Iterator[Dialogue]:
    for lineno, line in enumerate(source, start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON on line {lineno}: {exc}") from exc
        yield dialogue_from_dict(doc, path=f"$[{lineno}]")
