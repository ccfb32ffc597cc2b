"""Candidate-substitute estimation: phrases, lookup*, edit distance, vectors."""

import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kbcorrect.kb import KnowledgeBase
from kbcorrect.lexical import build_lexical_index
from kbcorrect.relatedness import (
    CandidateList,
    LookupStarError,
    TargetAssertion,
    WordVecModel,
    edit_candidates,
    edit_distance,
    load_word_vectors,
    lookup_star,
    normalize_phrase,
    phrase_vector,
    read_targets,
    sub_phrases,
    wordvec_candidates,
    write_targets,
)
from kbcorrect.kb import Term, entity, literal

from oracles import levenshtein_table


class TestNormalizePhrase:
    def test_example_phrase(self):
        assert normalize_phrase("Three Gorges District") == ["three", "gorges", "district"]

    def test_all_stop_words(self):
        assert normalize_phrase("the of") == []

    @given(st.text(max_size=40))
    @settings(max_examples=60)
    def test_idempotent(self, text):
        once = normalize_phrase(text)
        assert normalize_phrase(" ".join(once)) == once


class TestSubPhrases:
    def test_example_order(self):
        assert sub_phrases(["three", "gorges", "district"]) == [
            "three gorges district",
            "three gorges",
            "gorges district",
            "three",
            "gorges",
            "district",
        ]

    def test_single_token(self):
        assert sub_phrases(["x"]) == ["x"]

    def test_empty(self):
        assert sub_phrases([]) == []

    @given(st.lists(st.sampled_from(["a1", "b2", "c3", "d4"]), max_size=8))
    @settings(max_examples=40)
    def test_count_is_triangular(self, tokens):
        n = len(tokens)
        assert len(sub_phrases(tokens)) == n * (n + 1) // 2


class _DictProvider:
    """Offline provider with a fixed phrase -> ids table."""

    def __init__(self, table, fail_on=None):
        self.table = table
        self.fail_on = fail_on

    def lookup(self, phrase, k):
        if phrase == self.fail_on:
            raise RuntimeError("boom")
        return self.table.get(phrase, [])[:k]


class TestLookupStar:
    def test_full_phrase_short_circuits(self):
        provider = _DictProvider({"alpha beta": ["e1", "e2", "e3"]})
        result = lookup_star(provider, "alpha beta", 2)
        assert [e for e, _ in result] == ["e1", "e2"]

    def test_sub_phrase_rescues_missing_full_phrase(self):
        provider = _DictProvider({"three gorges": ["reservoir"]})
        result = lookup_star(provider, "three gorges district", 5)
        assert [e for e, _ in result] == ["reservoir"]

    def test_matches_reference_concat_dedupe_loop(self):
        rng = random.Random(4)
        vocabulary = ["w1", "w2", "w3"]
        table = {}
        pool = [f"e{i}" for i in range(12)]
        phrases = []
        for n in (3, 2, 1):
            for start in range(3 - n + 1):
                phrases.append(" ".join(vocabulary[start : start + n]))
        for ph in phrases:
            table[ph] = rng.sample(pool, rng.randint(0, 5))
        provider = _DictProvider(table)
        k = 6
        result = [e for e, _ in lookup_star(provider, "w1 w2 w3", k)]
        expected, seen = [], set()
        for ph in phrases:
            for e in table.get(ph, [])[:k]:
                if e not in seen:
                    seen.add(e)
                    expected.append(e)
                if len(expected) == k:
                    break
            if len(expected) == k:
                break
        assert result == expected

    def test_provider_failure_carries_sub_phrase(self):
        provider = _DictProvider({}, fail_on="beta")
        with pytest.raises(LookupStarError) as err:
            lookup_star(provider, "alpha beta", 3)
        assert err.value.sub_phrase == "beta"

    def test_local_index_reranks_by_original_phrase(self, place_kb):
        index = build_lexical_index(place_kb)
        result = lookup_star(index, "paris city of light", 4)
        assert result[0][0] == "paris"


class TestEditDistance:
    def test_identical(self):
        assert edit_distance("rome", "rome") == 0

    def test_pure_insertions(self):
        assert edit_distance("", "abc") == 3

    def test_against_full_table_oracle(self):
        rng = random.Random(12)
        alphabet = "abcde"
        for _ in range(200):
            a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 8)))
            b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 8)))
            assert edit_distance(a, b) == levenshtein_table(a, b)

    @given(st.text(alphabet="abcd", max_size=8), st.text(alphabet="abcd", max_size=8),
           st.text(alphabet="abcd", max_size=8))
    @settings(max_examples=60)
    def test_metric_axioms(self, a, b, c):
        assert edit_distance(a, b) == edit_distance(b, a)
        assert (edit_distance(a, b) == 0) == (a == b)
        assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)


class TestEditCandidates:
    def test_exact_label_first_with_zero(self, place_kb):
        result = edit_candidates(place_kb, "Rome", 3)
        assert result[0] == ("rome", 0.0)

    def test_k_larger_than_entity_count(self, place_kb):
        result = edit_candidates(place_kb, "Rome", 100)
        assert len(result) == 4  # labelled entities only
        assert [d for _, d in result] == sorted(d for _, d in result)

    def test_against_exhaustive_oracle(self):
        rng = random.Random(2)
        from oracles import random_kb

        kb = random_kb(rng, n_entities=100, n_triples=30)
        phrase = "alpha beta"
        result = edit_candidates(kb, phrase, 100)
        expected = []
        for e in kb.entities:
            labs = kb.labels.get(e, ())
            if labs:
                expected.append(
                    (e, float(min(levenshtein_table(phrase, lab.casefold()) for lab in labs)))
                )
        expected.sort(key=lambda pair: (pair[1], pair[0]))
        assert result == expected


class TestWordVectors:
    def _model(self):
        return WordVecModel(
            {
                "district": np.array([1.0, 0.9, 0.0]),
                "region": np.array([0.9, 1.0, 0.0]),
                "enzyme": np.array([0.0, 0.1, 1.0]),
                "three": np.array([0.2, 0.2, 0.2]),
            },
            dim=3,
        )

    def test_single_token_is_its_vector(self):
        model = self._model()
        np.testing.assert_allclose(
            phrase_vector(model, "district"), model.vocabulary["district"]
        )

    def test_mean_of_two(self):
        model = self._model()
        expected = (model.vocabulary["district"] + model.vocabulary["region"]) / 2
        np.testing.assert_allclose(phrase_vector(model, "district region"), expected)

    def test_out_of_vocabulary_tokens_ignored(self):
        model = self._model()
        np.testing.assert_allclose(
            phrase_vector(model, "unknown district"), model.vocabulary["district"]
        )

    def test_all_oov_gives_zero_vector(self):
        model = self._model()
        np.testing.assert_allclose(phrase_vector(model, "totally unknown"), np.zeros(3))

    def test_permutation_invariant(self):
        model = self._model()
        np.testing.assert_allclose(
            phrase_vector(model, "district region three"),
            phrase_vector(model, "three district region"),
        )

    def test_mean_matches_independent_summation(self):
        rng = np.random.default_rng(8)
        vocab = {f"t{i}": rng.normal(size=5) for i in range(20)}
        model = WordVecModel(vocab, dim=5)
        py_rng = random.Random(3)
        for _ in range(50):
            tokens = py_rng.sample(sorted(vocab), py_rng.randint(1, 6))
            total = np.zeros(5)
            for t in tokens:
                total = total + vocab[t]
            np.testing.assert_allclose(
                phrase_vector(model, tokens), total / len(tokens), atol=1e-12
            )

    def test_related_token_ordering(self):
        model = self._model()
        kb = KnowledgeBase(labels={"r": ["region"], "z": ["enzyme"]})
        ranked = wordvec_candidates(model, kb, "district", 2)
        assert [e for e, _ in ranked] == ["r", "z"]
        assert ranked[0][1] > ranked[1][1]

    def test_oov_phrase_degenerates_to_id_order(self):
        model = self._model()
        kb = KnowledgeBase(labels={"b": ["region"], "a": ["enzyme"]})
        ranked = wordvec_candidates(model, kb, "qqqq", 2)
        assert [e for e, _ in ranked] == ["a", "b"]
        assert all(s == 0.0 for _, s in ranked)

    def test_vector_file_round_trip(self, tmp_path):
        path = tmp_path / "vecs.txt"
        path.write_text("2 3\nfoo 1 2 3\nbar 0.5 -1 2.25\n")
        model = load_word_vectors(path)
        assert model.dim == 3
        np.testing.assert_allclose(model.vocabulary["bar"], [0.5, -1.0, 2.25])

    def test_vector_file_dimension_mismatch(self, tmp_path):
        path = tmp_path / "vecs.txt"
        path.write_text("foo 1 2 3\nbar 1 2\n")
        with pytest.raises(ValueError):
            load_word_vectors(path)


class TestTargetsFile:
    def test_round_trip_and_gt_kinds(self, tmp_path):
        targets = [
            TargetAssertion("a", "p", literal("some text"), ground_truth="e9"),
            TargetAssertion("b", "p", entity("e1"), ground_truth=""),
            TargetAssertion("c", "q", literal("other"), ground_truth=None),
        ]
        path = tmp_path / "targets.jsonl"
        write_targets(targets, path)
        loaded = read_targets(path)
        assert loaded == targets
        assert loaded[0].has_entity_gt
        assert loaded[1].has_empty_gt
        assert not loaded[2].has_entity_gt and not loaded[2].has_empty_gt

    def test_candidate_list_rejects_duplicates(self):
        with pytest.raises(ValueError):
            CandidateList(target=None, entities=(("e", 1.0), ("e", 0.5)), k=5)

    def test_candidate_list_rejects_overflow(self):
        with pytest.raises(ValueError):
            CandidateList(target=None, entities=(("a", 1.0), ("b", 0.5)), k=1)
