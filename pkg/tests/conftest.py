from pathlib import Path

import pytest

from dialogkit import load_default_bundle
from dialogkit.lexicons import RatedLexicon, load_connectives, load_rated_lexicon

DATA = Path(__file__).parent / "data"

#: filled by tests/test_acceptance.py; echoed in the terminal summary
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def bundle():
    return load_default_bundle()


@pytest.fixture
def rated(tmp_path):
    """Write a word<TAB>value file and load it."""

    def make(entries, name="demo"):
        path = tmp_path / f"{name}.tsv"
        path.write_text(
            "\n".join(f"{w}\t{v}" for w, v in entries.items()) + "\n", encoding="utf-8"
        )
        return load_rated_lexicon(path, name)

    return make


@pytest.fixture
def inline_rated():
    def make(entries, name="inline"):
        return RatedLexicon(name=name, entries={k.lower(): float(v) for k, v in entries.items()})

    return make


@pytest.fixture
def connectives(tmp_path):
    def make(rows):
        path = tmp_path / "connectives.tsv"
        path.write_text("\n".join(f"{c}\t{p}" for c, p in rows) + "\n", encoding="utf-8")
        return load_connectives(path)

    return make


@pytest.fixture
def sample_dialogue_path():
    return DATA / "sample_dialogue.json"
