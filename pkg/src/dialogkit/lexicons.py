"""Word-rating and connective resources for the semantic and discourse metrics.

Resource file layouts (all UTF-8 TSV, ``#`` lines are comments):

* rated lexicon:      ``word<TAB>value`` where value is a real number, or a
  CEFR label (A1..C2) for the CEFR lexicon, coded 1..6 on load;
* connective lexicon: ``class<TAB>phrase`` with class one of ``additive``,
  ``adversative``, ``causal``; phrases are 1-4 lowercase words;
* tagger tables (used by ``textcore``): ``word<TAB>POS`` and
  ``form<TAB>POS<TAB>lemma``; word lists are one entry per line.

A JSON manifest maps lexicon names to file paths (relative paths resolve
against the manifest's directory) so a whole resource bundle loads with one
flag. Lexicons are immutable after load and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib.resources import files
from pathlib import Path
from typing import Mapping, Optional

from .errors import FormatError, ResourceError


class CefrLevel(Enum):
    A1 = 1
    A2 = 2
    B1 = 3
    B2 = 4
    C1 = 5
    C2 = 6

    @property
    def numeric(self) -> int:
        return self.value

    @classmethod
    def from_numeric(cls, value: int) -> "CefrLevel":
        return cls(min(6, max(1, int(value))))


_CEFR_LABELS = {level.name: level.numeric for level in CefrLevel}

#: Ordered connective class names.
CONNECTIVE_CLASSES = ("additive", "adversative", "causal")


@dataclass(frozen=True)
class RatedLexicon:
    """word -> rating map. Keys are lowercase lemmas; units are per-lexicon
    (AoA in years, CEFR coded 1-6, familiarity/polysemy as raw scale values)."""

    name: str
    entries: Mapping[str, float]
    malformed: int = 0

    def lookup(self, word: str) -> Optional[float]:
        """Exact lowercase match; a miss returns None, never a sentinel."""
        return self.entries.get(word.strip().lower())

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class ConnectiveLexicon:
    """Disjoint phrase sets per connective class."""

    classes: Mapping[str, frozenset[str]]
    #: longest phrase length in words, for the longest-match-first scanner
    max_words: int = field(default=1)

    def class_of(self, phrase: str) -> Optional[str]:
        for name, phrases in self.classes.items():
            if phrase in phrases:
                return name
        return None


def _iter_tsv(path: Path):
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ResourceError(f"cannot read lexicon file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield lineno, line


def load_rated_lexicon(path: str | Path, name: str) -> RatedLexicon:
    """Load a ``word<TAB>value`` lexicon.

    Duplicate words keep the last occurrence. CEFR labels are coded 1-6.
    Malformed lines are counted; more than 10% malformed raises a
    FormatError naming the first offending line.
    """
    path = Path(path)
    entries: dict[str, float] = {}
    malformed = 0
    first_bad: Optional[int] = None
    total = 0
    for lineno, line in _iter_tsv(path):
        total += 1
        parts = line.split("\t")
        if len(parts) != 2:
            malformed += 1
            first_bad = first_bad if first_bad is not None else lineno
            continue
        word, raw_value = parts[0].strip().lower(), parts[1].strip()
        value: Optional[float]
        if raw_value.upper() in _CEFR_LABELS:
            value = float(_CEFR_LABELS[raw_value.upper()])
        else:
            try:
                value = float(raw_value)
            except ValueError:
                value = None
        if not word or value is None or value != value or value in (float("inf"), float("-inf")):
            malformed += 1
            first_bad = first_bad if first_bad is not None else lineno
            continue
        entries[word] = value
    if total and malformed / total > 0.10:
        raise FormatError(
            f"{path}: {malformed}/{total} malformed lines in rated lexicon {name!r}",
            line=first_bad,
        )
    return RatedLexicon(name=name, entries=entries, malformed=malformed)


def load_connectives(path: str | Path) -> ConnectiveLexicon:
    """Load a ``class<TAB>phrase`` connective table.

    Phrases normalize to lowercase single-spaced; an unknown class label or a
    phrase appearing under two classes is a format error.
    """
    path = Path(path)
    classes: dict[str, set[str]] = {name: set() for name in CONNECTIVE_CLASSES}
    seen: dict[str, str] = {}
    max_words = 1
    for lineno, line in _iter_tsv(path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"{path}: expected class<TAB>phrase", line=lineno)
        cls, phrase = parts[0].strip().lower(), " ".join(parts[1].lower().split())
        if cls not in classes:
            raise FormatError(f"{path}: unknown connective class {cls!r}", line=lineno)
        if not phrase:
            raise FormatError(f"{path}: empty phrase", line=lineno)
        if phrase in seen and seen[phrase] != cls:
            raise FormatError(
                f"{path}: phrase {phrase!r} appears in both {seen[phrase]!r} and {cls!r}",
                line=lineno,
            )
        seen[phrase] = cls
        classes[cls].add(phrase)
        max_words = max(max_words, len(phrase.split()))
    return ConnectiveLexicon(
        classes={name: frozenset(phrases) for name, phrases in classes.items()},
        max_words=max_words,
    )


@dataclass(frozen=True)
class ResourceBundle:
    """Everything the metric suite needs, loaded from one manifest."""

    aoa: RatedLexicon
    cefr: RatedLexicon
    familiarity: RatedLexicon
    polysemy: RatedLexicon
    connectives: ConnectiveLexicon

    def rated(self, name: str) -> RatedLexicon:
        lex = getattr(self, name, None)
        if not isinstance(lex, RatedLexicon):
            raise ResourceError(f"no rated lexicon named {name!r} in bundle")
        return lex


_RATED_KEYS = ("aoa", "cefr", "familiarity", "polysemy")


def load_bundle(manifest_path: str | Path) -> ResourceBundle:
    """Load the resource bundle described by a JSON manifest.

    The manifest maps lexicon names (aoa, cefr, familiarity, polysemy,
    connectives) to TSV paths. Missing keys or unreadable files raise a
    ResourceError naming the key.
    """
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ResourceError(f"cannot read manifest {manifest_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest {manifest_path} is not valid JSON: {exc}") from exc

    def resolve(key: str) -> Path:
        if key not in manifest:
            raise ResourceError(f"manifest {manifest_path} is missing key {key!r}")
        p = Path(manifest[key])
        return p if p.is_absolute() else manifest_path.parent / p

    rated = {}
    for key in _RATED_KEYS:
        p = resolve(key)
        if not p.exists():
            raise ResourceError(f"manifest key {key!r} points to missing file {p}")
        rated[key] = load_rated_lexicon(p, key)
    conn_path = resolve("connectives")
    if not conn_path.exists():
        raise ResourceError(f"manifest key 'connectives' points to missing file {conn_path}")
    return ResourceBundle(connectives=load_connectives(conn_path), **rated)


def default_manifest_path() -> Path:
    """Path of the demonstration bundle shipped with the package."""
    return Path(str(files("dialogkit") / "data" / "manifest.json"))


def load_default_bundle() -> ResourceBundle:
    return load_bundle(default_manifest_path())
