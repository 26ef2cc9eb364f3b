"""Consensus metrics: algebraic identities, hand-derived weights, edge cases."""

import numpy as np
import pytest

from reflab.metrics import (
    NGramIndex,
    argmax_object,
    cider,
    comprehension_accuracy,
    corpus_stats,
    ngram_counts,
    r_cider,
    rank_weights,
    saliency_bins,
    tokenize,
)


class TestTokenize:
    def test_rule_application(self):
        assert tokenize("A man, walking.") == ["a", "man", "walking"]

    def test_empty(self):
        assert tokenize("") == []

    def test_idempotent(self):
        s = "The RED person, near the tree!"
        once = tokenize(s)
        assert tokenize(" ".join(once)) == once


def _index(ref_sets):
    return NGramIndex.build(ref_sets)


REFS_A = [["the", "red", "person"], ["the", "big", "red", "person"]]
REFS_B = [["a", "blue", "car"], ["the", "small", "blue", "car"]]
REFS_C = [["the", "dog", "near", "the", "tree"]]


class TestCider:
    def setup_method(self):
        self.index = _index([REFS_A, REFS_B, REFS_C])

    def test_zero_overlap(self):
        for variant in ("plain", "D"):
            assert cider(["zebra", "stripes"], REFS_A, self.index, variant) == 0.0

    def test_identical_candidate_maximal(self):
        for variant in ("plain", "D"):
            best = cider(REFS_A[0], REFS_A, self.index, variant)
            for other in (["the", "person"], ["red"], REFS_B[0], ["the", "red", "car"]):
                assert best >= cider(other, REFS_A, self.index, variant)

    def test_reference_permutation_invariant(self):
        for variant in ("plain", "D"):
            a = cider(["the", "red", "person"], REFS_A, self.index, variant)
            b = cider(["the", "red", "person"], REFS_A[::-1], self.index, variant)
            assert a == b

    def test_empty_candidate_scores_zero(self):
        assert cider([], REFS_A, self.index) == 0.0

    def test_scores_non_negative(self):
        rng = np.random.default_rng(0)
        words = ["a", "b", "c", "d", "e"]
        sets = [
            [[words[i] for i in rng.integers(0, 5, size=rng.integers(1, 6))] for _ in range(2)]
            for _ in range(6)
        ]
        index = _index(sets)
        for refs in sets:
            for _ in range(5):
                cand = [words[i] for i in rng.integers(0, 5, size=rng.integers(0, 6))]
                for variant in ("plain", "D"):
                    assert cider(cand, refs, index, variant) >= 0.0

    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError):
            cider(["a"], REFS_A, self.index, variant="R")


class TestRankWeights:
    def test_hand_case_123(self):
        np.testing.assert_allclose(rank_weights([1, 2, 3]), [6 / 11, 3 / 11, 2 / 11], rtol=1e-15)

    def test_sum_to_one(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            ranks = rng.integers(1, 9, size=rng.integers(1, 8))
            assert abs(rank_weights(ranks).sum() - 1.0) <= 1e-12

    def test_rank_below_one_rejected(self):
        with pytest.raises(ValueError):
            rank_weights([1, 0])


class TestRCider:
    def setup_method(self):
        self.index = _index([REFS_A, REFS_B, REFS_C])

    def test_uniform_ranks_reduce_to_cider_exactly(self):
        cand = ["the", "red", "person"]
        for variant in ("plain", "D"):
            for rank in (1, 2, 3):
                assert r_cider(cand, REFS_A, [rank, rank], self.index, variant) == cider(
                    cand, REFS_A, self.index, variant
                )

    def test_weights_favor_better_ranked_reference(self):
        cand = REFS_A[0]
        favored = r_cider(cand, REFS_A, [1, 2], self.index)
        disfavored = r_cider(cand, REFS_A, [2, 1], self.index)
        assert favored > disfavored

    def test_rank_reference_length_mismatch(self):
        with pytest.raises(ValueError):
            r_cider(["a"], REFS_A, [1], self.index)


class TestComprehension:
    def test_exact_match(self):
        assert comprehension_accuracy({"i": "o1"}, {"i": "o1"}) == 1.0

    def test_missing_prediction_rejected(self):
        with pytest.raises(ValueError):
            comprehension_accuracy({}, {"i": "o1"})

    def test_argmax_lowest_id_tie_break(self):
        assert argmax_object({"b": 1.0, "a": 1.0, "c": 0.5}) == "a"

    def test_random_scorer_near_chance(self):
        rng = np.random.default_rng(7)
        c = 4
        hits = 0
        trials = 1000
        for _ in range(trials):
            scores = {f"o{j}": float(rng.normal()) for j in range(c)}
            if argmax_object(scores) == "o0":
                hits += 1
        p = hits / trials
        sigma = np.sqrt((1 / c) * (1 - 1 / c) / trials)
        assert abs(p - 1 / c) <= 3 * sigma


class TestSaliencyBins:
    def test_all_equal_single_occupied_bin(self):
        counts, _ = saliency_bins([2.0, 2.0, 2.0], bins=5)
        assert (counts > 0).sum() == 1
        assert counts.sum() == 3

    def test_sqrt_area_normalization(self):
        counts_a, edges_a = saliency_bins([8.0], areas=[4.0], normalize=True, bins=2)
        counts_b, edges_b = saliency_bins([4.0], bins=2)
        np.testing.assert_array_equal(counts_a, counts_b)
        np.testing.assert_allclose(edges_a, edges_b)

    def test_counts_conserved(self):
        rng = np.random.default_rng(2)
        scores = rng.uniform(0, 5, size=37)
        counts, _ = saliency_bins(scores, bins=8)
        assert counts.sum() == 37

    def test_negative_scores_rejected(self):
        with pytest.raises(ValueError):
            saliency_bins([-1.0])


class TestCorpusStats:
    def test_single_sentence(self):
        out = corpus_stats([["a", "b", "c", "d", "e"]])
        assert out["mean_length"] == 5.0
        assert out["vocabulary_size"] <= 5

    def test_duplication_invariant(self):
        corpus = [["a", "b"], ["c", "a", "d"]]
        a = corpus_stats(corpus)
        b = corpus_stats(corpus * 2)
        assert a["vocabulary_size"] == b["vocabulary_size"]
        assert a["mean_length"] == b["mean_length"]

    def test_mean_of_two(self):
        out = corpus_stats([["x"] * 4, ["y"] * 6])
        assert out["mean_length"] == 5.0
        assert out["length_histogram"] == {4: 1, 6: 1}


def test_ngram_counts_window():
    counts = ngram_counts(["a", "b", "a"])
    assert counts[("a",)] == 2
    assert counts[("a", "b")] == 1
    assert counts[("a", "b", "a")] == 1
