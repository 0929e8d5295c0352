import io
import json
from itertools import groupby

import pytest
from hypothesis import given, strategies as st

from dialogkit.errors import EmptyTranscriptError, SchemaError, TranscriptParseError
from dialogkit.ingest import (
    Dialogue,
    Turn,
    Utterance,
    clean_transcript_text,
    dialogue_from_dict,
    dialogue_to_dict,
    iter_dialogues,
    parse_transcript,
    read_dialogue_json,
    sample_dialogue,
    segment_turns,
    write_dialogue_json,
)


def utts(speakers, text="hi"):
    return [Utterance(speaker=s, text=f"{text}{i}", source_line=i) for i, s in enumerate(speakers)]


class TestParseTranscript:
    def test_two_column(self):
        out = parse_transcript("A\thi\nB\tyo")
        assert [(u.speaker, u.text) for u in out] == [("A", "hi"), ("B", "yo")]

    def test_prefixed(self):
        out = parse_transcript("A: hi\nA: there\nB: yo", format="prefixed")
        assert len(out) == 3

    def test_empty_is_error(self):
        with pytest.raises(EmptyTranscriptError):
            parse_transcript("")

    def test_bad_line_skipped_with_number(self):
        out = parse_transcript("A\thi\njunk line\nB\tyo")
        assert len(out) == 2

    def test_strict_raises_with_line(self):
        with pytest.raises(TranscriptParseError) as err:
            parse_transcript("A\thi\njunk line", strict=True)
        assert err.value.line == 2

    def test_disfluency_markup_stripped(self):
        out = parse_transcript("A\t{F um} hello [laughter] there")
        assert out[0].text == "hello there"

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            parse_transcript("A\thi", format="csv")


def test_clean_transcript_text_collapses_whitespace():
    assert clean_transcript_text("a   {D you know}  b") == "a b"


class TestSegmentTurns:
    def test_merge_runs(self):
        turns = segment_turns(utts("AABABB"))
        assert [t.speaker for t in turns] == ["A", "B", "A", "B"]
        assert turns[0].utterance == "hi0 hi1"
        assert turns[3].utterance == "hi4 hi5"

    def test_singleton(self):
        assert len(segment_turns(utts("A"))) == 1

    def test_already_alternating(self):
        turns = segment_turns(utts("ABAB"))
        assert len(turns) == 4

    def test_empty_error(self):
        with pytest.raises(EmptyTranscriptError):
            segment_turns([])

    @given(st.lists(st.sampled_from("AB"), min_size=1, max_size=40))
    def test_properties(self, speakers):
        us = utts(speakers)
        turns = segment_turns(us)
        # alternation
        assert all(a.speaker != b.speaker for a, b in zip(turns, turns[1:]))
        # independent oracle: groupby runs
        expected = [(s, " ".join(u.text for u in run))
                    for s, run in groupby(us, key=lambda u: u.speaker)
                    for run in [list(run)]]
        assert [(t.speaker, t.utterance) for t in turns] == expected
        # per-speaker text preserved
        for speaker in set(speakers):
            original = " ".join(u.text for u in us if u.speaker == speaker)
            merged = " ".join(t.utterance for t in turns if t.speaker == speaker)
            assert original == merged
        # idempotent on alternating output
        again = segment_turns(
            [Utterance(t.speaker, t.utterance, i) for i, t in enumerate(turns)]
        )
        assert [(t.speaker, t.utterance) for t in again] == [
            (t.speaker, t.utterance) for t in turns
        ]


def alternating_turns(n):
    return [Turn(speaker="AB"[i % 2], utterance=f"t{i}", index=i) for i in range(n)]


class TestSampleDialogue:
    def test_full_prefix(self):
        d = sample_dialogue(alternating_turns(12), per_speaker=5)
        assert len(d.turns) == 10
        assert d.short is False

    def test_exhaustion_marks_short(self):
        d = sample_dialogue(alternating_turns(6), per_speaker=5)
        assert len(d.turns) == 6
        assert d.short is True

    def test_smallest(self):
        d = sample_dialogue(alternating_turns(3), per_speaker=1)
        assert [t.speaker for t in d.turns] == ["A", "B"]

    def test_empty_error(self):
        with pytest.raises(EmptyTranscriptError):
            sample_dialogue([], per_speaker=5)

    def test_bad_per_speaker(self):
        with pytest.raises(ValueError):
            sample_dialogue(alternating_turns(4), per_speaker=0)

    def test_streaming_ids_and_union(self):
        turns = alternating_turns(25)
        ds = list(iter_dialogues(turns, per_speaker=2, source_stem="sw"))
        assert [d.dialog_id for d in ds] == [f"sw_{k}" for k in range(len(ds))]
        assert sum(len(d.turns) for d in ds) == 25
        assert ds[-1].short is True

    def test_streaming_drop_short(self):
        turns = alternating_turns(25)
        ds = list(iter_dialogues(turns, per_speaker=2, drop_short=True))
        assert all(not d.short for d in ds)
        assert sum(len(d.turns) for d in ds) == 24


class TestDialogueJson:
    def test_minimal_roundtrip(self):
        d = Dialogue("d0", [Turn("A", "hi", 0), Turn("B", "yo", 1)])
        buf = io.StringIO()
        write_dialogue_json(d, buf)
        back = read_dialogue_json(buf.getvalue())
        assert back == d

    def test_sample_fixture_parses(self, sample_dialogue_path):
        d = read_dialogue_json(sample_dialogue_path.read_text(encoding="utf-8"))
        assert len(d.turns) == 5
        assert d.meta["length"] == 593
        assert d.meta["ttr"]["noun"] == pytest.approx(0.162852)

    def test_unknown_meta_keys_roundtrip(self, sample_dialogue_path):
        d = read_dialogue_json(sample_dialogue_path.read_text(encoding="utf-8"))
        buf = io.StringIO()
        write_dialogue_json(d, buf)
        doc = json.loads(buf.getvalue())
        assert doc["meta"]["sentiment_scores"]["polarity"] == pytest.approx(-0.473618)
        assert doc["meta"]["type_token_ratios"][0]["lda_1_all_sent"] == pytest.approx(
            0.8396384935744969
        )

    def test_float_precision_six_sig_digits(self):
        d = Dialogue("d0", [Turn("A", "hi", 0)], meta={"x": 0.162852})
        buf = io.StringIO()
        write_dialogue_json(d, buf)
        assert "0.162852" in buf.getvalue()

    def test_equal_adjacent_speakers_rejected(self):
        doc = {"dialogID": "d", "turns": [
            {"speaker": "A", "utterance": "x"}, {"speaker": "A", "utterance": "y"}]}
        with pytest.raises(SchemaError) as err:
            dialogue_from_dict(doc)
        assert "turns[1].speaker" in str(err.value)

    def test_missing_dialog_id(self):
        with pytest.raises(SchemaError) as err:
            dialogue_from_dict({"turns": [{"speaker": "A", "utterance": "x"}]})
        assert "dialogID" in str(err.value)

    @given(st.integers(1, 12), st.integers(0, 10))
    def test_random_roundtrip(self, n_turns, seed):
        import random

        rng = random.Random(seed)
        turns = [
            Turn("AB"[i % 2], " ".join(rng.choices("the cat sat on a mat ok".split(),
                                                   k=rng.randint(1, 6))), i)
            for i in range(n_turns)
        ]
        d = Dialogue(f"d{seed}", turns, meta={"extra": {"k": [1, 2.5, "s"]}}, short=bool(seed % 2))
        assert dialogue_from_dict(dialogue_to_dict(d)) == d
