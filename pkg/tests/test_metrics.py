import random

import pytest
from hypothesis import given, strategies as st

from dialogkit.ingest import read_dialogue_json
from dialogkit.lexicons import RatedLexicon
from dialogkit.metrics import (
    COHESION_COMPONENTS,
    ComplexityProfile,
    adjacent_overlap,
    cohesion_composite,
    concept_density,
    count_connectives,
    dialogue_meta,
    lemma_ttr,
    mattr,
    mean_clauses_per_sentence,
    mean_sentence_length,
    narrativity,
    profile,
    rated_mean,
    repeated_lemma_ratios,
    ttr,
    verb_tense_repetition,
)
from dialogkit.textcore import Pos, analyze, lemmatize_tokens, pos_tag, tokenize


def toks(text):
    return lemmatize_tokens(pos_tag(tokenize(text)))


def sents(*texts):
    out = []
    for text in texts:
        out.extend(analyze(text))
    from dialogkit.textcore import Sentence

    return [Sentence(tokens=s.tokens, index=i) for i, s in enumerate(out)]


class TestTtr:
    def test_hand_count(self):
        assert ttr(toks("the cat the cat")) == pytest.approx(0.5)

    def test_all_distinct(self):
        assert ttr(toks("one small cat runs")) == pytest.approx(1.0)

    def test_noun_filter(self):
        # "cats cats run": two noun tokens, one noun type
        assert ttr(toks("cats cats run"), Pos.NOUN) == pytest.approx(0.5)

    def test_empty_absent(self):
        assert ttr([]) is None
        assert ttr(toks("!!")) is None

    def test_punctuation_ignored(self):
        assert ttr(toks("cat, cat!")) == pytest.approx(0.5)


class TestMattr:
    def test_short_text_equals_ttr(self):
        tokens = toks("a b c d e f g h i j")
        assert mattr(tokens, window=50) == pytest.approx(ttr(tokens))

    def test_alternating(self):
        assert mattr(toks("a b a b"), window=2) == pytest.approx(1.0)

    def test_constant(self):
        assert mattr(toks("a a a a a"), window=2) == pytest.approx(0.5)

    def test_zero_window_rejected(self):
        with pytest.raises(ValueError):
            mattr(toks("a b"), window=0)

    def test_not_permutation_invariant_regression(self):
        # same bag of tokens, different order, different windowed value
        assert mattr(toks("a a b b"), window=2) == pytest.approx((0.5 + 1 + 0.5) / 3)
        assert mattr(toks("a b a b"), window=2) == pytest.approx(1.0)


class TestRatedMean:
    def test_full_coverage(self, inline_rated):
        lex = inline_rated({"cat": 4, "dog": 5})
        mean, coverage = rated_mean(toks("cat dog"), lex)
        assert mean == pytest.approx(4.5)
        assert coverage == pytest.approx(1.0)

    def test_skip_unknown(self, inline_rated):
        lex = inline_rated({"cat": 4})
        mean, coverage = rated_mean(toks("cat zzz"), lex)
        assert mean == pytest.approx(4.0)
        assert coverage == pytest.approx(0.5)

    def test_zero_coverage_absent(self, inline_rated):
        lex = inline_rated({"cat": 4})
        mean, coverage = rated_mean(toks("zzz"), lex)
        assert mean is None
        assert coverage == 0.0

    def test_lemma_keyed(self, inline_rated):
        lex = inline_rated({"cat": 4})
        mean, _ = rated_mean(toks("cats"), lex)
        assert mean == pytest.approx(4.0)

    @given(st.floats(0.1, 50))
    def test_scale_equivariance(self, c):
        lex = RatedLexicon("x", {"cat": 4.0, "dog": 5.0, "run": 2.0})
        scaled = RatedLexicon("x", {k: v * c for k, v in lex.entries.items()})
        tokens = toks("the cat and dog run")
        base, _ = rated_mean(tokens, lex)
        up, _ = rated_mean(tokens, scaled)
        assert up == pytest.approx(base * c)


class TestConnectives:
    def test_demo_lexicon_counts(self, bundle):
        counts = count_connectives(toks("and also but because"), bundle.connectives)
        assert (counts.additive, counts.adversative, counts.causal) == (2, 1, 1)
        assert counts.total == 4

    def test_empty(self, bundle):
        counts = count_connectives([], bundle.connectives)
        assert counts.total == 0

    def test_longest_match_first(self, bundle):
        counts = count_connectives(toks("on the other hand"), bundle.connectives)
        assert counts.adversative == 1
        assert counts.total == 1

    def test_punctuation_blocks_phrases(self, connectives):
        lex = connectives([("adversative", "on the other hand"), ("additive", "and")])
        counts = count_connectives(toks("on the other, hand and"), lex)
        assert counts.adversative == 0
        assert counts.additive == 1


class TestSentenceShape:
    def test_msl_hand_count(self):
        assert mean_sentence_length(sents("Hi there.", "Go.")) == pytest.approx(1.5)

    def test_msl_singleton(self):
        assert mean_sentence_length(sents("one two three four")) == pytest.approx(4)

    def test_msl_empty_absent(self):
        assert mean_sentence_length([]) is None

    def test_mcps_two_clauses(self):
        assert mean_clauses_per_sentence(sents("He ran and she jumped.")) == pytest.approx(2)

    def test_mcps_verbless_floor(self):
        assert mean_clauses_per_sentence(sents("Wow!")) == pytest.approx(1)

    def test_mcps_single(self):
        assert mean_clauses_per_sentence(sents("He ran.")) == pytest.approx(1)


class TestAdjacentOverlap:
    def test_hand_set_computation(self):
        # {cat, sit} vs {cat, run}: 1 shared / 2 in the second set
        assert adjacent_overlap(sents("the cat sat", "the cat ran"), "content") == pytest.approx(0.5)

    def test_identical(self):
        assert adjacent_overlap(sents("the cat sat", "the cat sat"), "content") == pytest.approx(1.0)

    def test_disjoint(self):
        assert adjacent_overlap(sents("the cat sat", "a dog eats"), "content") == pytest.approx(0.0)

    def test_single_sentence_absent(self):
        assert adjacent_overlap(sents("the cat sat"), "content") is None

    def test_verb_class(self):
        assert adjacent_overlap(sents("he ran home", "she ran away"), "verb") == pytest.approx(1.0)


class TestVerbTenseRepetition:
    def test_mixed(self):
        value = verb_tense_repetition(
            sents("He walked home.", "She smiled.", "They run fast.")
        )
        assert value == pytest.approx(0.5)

    def test_all_past(self):
        assert verb_tense_repetition(sents("He ran.", "She jumped.")) == pytest.approx(1.0)

    def test_no_eligible_pair(self):
        assert verb_tense_repetition(sents("Wow!", "Ouch!")) is None


class TestConceptDensity:
    def test_distinct_content_lemmas(self):
        assert concept_density(sents("The cat cat sat.")) == pytest.approx(2)

    def test_pronoun_only(self):
        assert concept_density(sents("He, him!")) == pytest.approx(0)

    def test_mean(self):
        assert concept_density(
            sents("the cat sat.", "the dog ate good food.")
        ) == pytest.approx(3.0)


class TestRepeatedLemmas:
    def test_repeats(self):
        out = repeated_lemma_ratios(sents("cat cat cat"))
        assert out["repeated_content_lemmas"] == pytest.approx(2 / 3)

    def test_all_distinct(self):
        out = repeated_lemma_ratios(sents("cat dog run"))
        assert out["repeated_content_lemmas"] == pytest.approx(0.0)

    def test_pronouns_included(self):
        out = repeated_lemma_ratios(sents("he he ran"))
        assert out["repeated_content_and_pronoun_lemmas"] == pytest.approx(1 / 3)
        assert out["repeated_content_lemmas"] == pytest.approx(0.0)


class TestNarrativity:
    def test_max_bounds(self):
        assert narrativity({"pronoun_noun_ratio": 1.0, "vtr": 1.0, "vo_adj": 1.0}) == 1.0

    def test_min_bounds(self):
        assert narrativity({"pronoun_noun_ratio": 0.0, "vtr": 0.0, "vo_adj": 0.0}) == 0.0

    def test_mean(self):
        assert narrativity(
            {"pronoun_noun_ratio": 0.5, "vtr": 0.5, "vo_adj": 0.5}
        ) == pytest.approx(0.5)

    def test_all_absent(self):
        assert narrativity({"pronoun_noun_ratio": None, "vtr": None, "vo_adj": None}) is None

    def test_custom_bounds_clamp(self):
        value = narrativity({"vtr": 10.0}, bounds={"vtr": (0.0, 2.0)})
        assert value == 1.0


class TestCohesionComposite:
    def test_all_ones(self):
        prof = ComplexityProfile(**{name: 1.0 for name in COHESION_COMPONENTS})
        out = cohesion_composite(prof)
        assert out.value == pytest.approx(1.0)
        assert out.complete

    def test_mean_of_two(self):
        prof = ComplexityProfile(ttr=0.0, lemma_ttr=1.0)
        out = cohesion_composite(prof, component_names=("ttr", "lemma_ttr"))
        assert out.value == pytest.approx(0.5)

    def test_absent_excluded_and_flagged(self):
        prof = ComplexityProfile(ttr=0.3, lemma_ttr=0.9)
        out = cohesion_composite(prof, component_names=("ttr", "lemma_ttr", "vtr"))
        assert out.value == pytest.approx(0.6)
        assert not out.complete

    def test_equals_mean_of_reported_components_exactly(self):
        prof = ComplexityProfile(ttr=0.21, lemma_ttr=0.77, vtr=0.4)
        out = cohesion_composite(prof, component_names=("ttr", "lemma_ttr", "vtr"))
        assert out.value == sum(out.components.values()) / len(out.components)


class TestProfile:
    def test_empty_text(self, bundle):
        prof = profile("", bundle)
        assert prof.length == 0
        assert prof.ttr is None
        assert prof.tdc == 0
        assert all(v == 0.0 for v in prof.coverage.values())

    def test_composed_example(self, bundle):
        prof = profile("the cat sat. the cat ran.", bundle)
        assert prof.ttr == pytest.approx(4 / 6)
        assert prof.cwo_adj == pytest.approx(0.5)
        assert prof.vtr == pytest.approx(1.0)

    def test_sample_dialogue_recomputes_length(self, bundle, sample_dialogue_path):
        d = read_dialogue_json(sample_dialogue_path.read_text(encoding="utf-8"))
        meta = dialogue_meta(d, bundle)
        # recomputed from this package's tokenizer; stored-value parity is
        # not asserted (different tagger/tokenizer upstream)
        assert meta["length"] > 100
        assert len(meta["type_token_ratios"]) == 3
        for record in meta["type_token_ratios"]:
            assert record["lda_1_all_sent"] is None
        # pre-existing unknown keys survive
        assert "sentiment_scores" in meta

    def test_dialogue_meta_short_dialogue_single_segment(self, bundle):
        from dialogkit.ingest import Dialogue, Turn

        d = Dialogue("d", [Turn("A", "hi there", 0), Turn("B", "the cat sat", 1)])
        meta = dialogue_meta(d, bundle)
        assert len(meta["type_token_ratios"]) == 1


WORDS = "the cat cats dog ran runs sat walked he she it and but because wow quickly home".split()


def random_text(rng, n_words=None):
    n = n_words if n_words is not None else rng.randint(0, 40)
    parts = []
    for _ in range(n):
        parts.append(rng.choice(WORDS))
        if rng.random() < 0.15:
            parts.append(rng.choice([".", "!", "?", ","]))
    return " ".join(parts)


RATIO_FIELDS = (
    "ttr", "noun_ttr", "verb_ttr", "adj_ttr", "lemma_ttr", "bigram_lemma_ttr",
    "trigram_lemma_ttr", "mattr", "cwo_adj", "vo_adj", "vtr",
    "repeated_content_lemmas", "repeated_content_and_pronoun_lemmas",
    "adjacent_overlap_all_sent", "narrativity",
)


class TestProperties:
    def test_ratios_in_unit_interval(self, bundle):
        rng = random.Random(7)
        for _ in range(300):
            prof = profile(random_text(rng), bundle)
            for name in RATIO_FIELDS:
                value = getattr(prof, name)
                assert value is None or 0.0 <= value <= 1.0, name

    def test_ttr_permutation_invariant(self):
        rng = random.Random(3)
        for _ in range(50):
            words = [rng.choice(WORDS) for _ in range(rng.randint(1, 30))]
            shuffled = words[:]
            rng.shuffle(shuffled)
            assert ttr(toks(" ".join(words))) == pytest.approx(
                ttr(toks(" ".join(shuffled)))
            )

    def test_self_concatenation_never_increases_lemma_ttr(self):
        rng = random.Random(11)
        for _ in range(50):
            text = random_text(rng, n_words=rng.randint(1, 25))
            single = lemma_ttr(toks(text))
            double = lemma_ttr(toks(text + " " + text))
            if single is None:
                continue
            assert double <= single + 1e-12

    def test_coverage_between_zero_and_one(self, bundle):
        rng = random.Random(5)
        for _ in range(50):
            prof = profile(random_text(rng), bundle)
            for value in prof.coverage.values():
                assert 0.0 <= value <= 1.0
