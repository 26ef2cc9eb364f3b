"""Automatic evaluation: consensus n-gram metrics (plain and D variants),
their rank-weighted counterparts, comprehension accuracy, saliency
histograms, and corpus statistics."""

from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

NGRAM_MAX = 4
LENGTH_PENALTY_SIGMA = 6.0

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def tokenize(sentence: str) -> list[str]:
    """Lowercase, strip punctuation, split on whitespace."""
    return sentence.lower().translate(_PUNCT_TABLE).split()


def ngram_counts(tokens: Sequence[str], n_max: int = NGRAM_MAX) -> Counter:
    counts: Counter = Counter()
    for n in range(1, n_max + 1):
        for i in range(len(tokens) - n + 1):
            counts[tuple(tokens[i : i + n])] += 1
    return counts


@dataclass
class NGramIndex:
    """Document frequencies over reference sets (one document per instance)."""

    df: dict[tuple, int]
    corpus_size: int

    @classmethod
    def build(cls, reference_sets: Sequence[Sequence[Sequence[str]]]) -> "NGramIndex":
        df: Counter = Counter()
        for refs in reference_sets:
            seen: set[tuple] = set()
            for ref in refs:
                seen.update(ngram_counts(ref))
            df.update(seen)
        return cls(df=dict(df), corpus_size=len(reference_sets))

    def idf(self, ngram: tuple) -> float:
        return np.log(self.corpus_size) - np.log(max(1.0, self.df.get(ngram, 0)))


def _tfidf_vec(tokens: Sequence[str], index: NGramIndex):
    vec: list[dict] = [{} for _ in range(NGRAM_MAX)]
    norm = np.zeros(NGRAM_MAX)
    for ngram, tf in ngram_counts(tokens).items():
        n = len(ngram) - 1
        w = tf * index.idf(ngram)
        vec[n][ngram] = w
        norm[n] += w * w
    return vec, np.sqrt(norm), len(tokens)


def _similarity(hyp, ref, variant: str) -> np.ndarray:
    vec_h, norm_h, len_h = hyp
    vec_r, norm_r, len_r = ref
    val = np.zeros(NGRAM_MAX)
    for n in range(NGRAM_MAX):
        s = 0.0
        for ngram, wh in vec_h[n].items():
            wr = vec_r[n].get(ngram, 0.0)
            if variant == "D":
                s += min(wh, wr) * wr
            else:
                s += wh * wr
        if norm_h[n] > 0 and norm_r[n] > 0:
            s /= norm_h[n] * norm_r[n]
        else:
            s = 0.0
        val[n] = s
    if variant == "D":
        delta = float(len_h - len_r)
        val *= np.exp(-(delta**2) / (2.0 * LENGTH_PENALTY_SIGMA**2))
    return val


def _check_variant(variant: str) -> None:
    if variant not in ("plain", "D"):
        raise ValueError(f"variant must be 'plain' or 'D', got {variant!r}")


def _weighted_consensus(candidate, references, weights, index, variant) -> float:
    """Weighted per-reference similarity, averaged over n-gram orders, x10.
    Both the plain metric (uniform 1/m weights) and the rank-weighted one
    run through this single path, so their uniform-rank agreement is exact."""
    hyp = _tfidf_vec(candidate, index)
    sims = np.zeros(NGRAM_MAX)
    for w, ref in zip(weights, references):
        sims += w * _similarity(hyp, _tfidf_vec(ref, index), variant)
    return float(sims.mean() * 10.0)


def cider(
    candidate: Sequence[str],
    references: Sequence[Sequence[str]],
    index: NGramIndex,
    variant: str = "D",
) -> float:
    """Consensus score of one candidate against its reference set, x10."""
    _check_variant(variant)
    if not references:
        raise ValueError("reference set must be non-empty")
    m = len(references)
    return _weighted_consensus(candidate, references, np.full(m, 1.0 / m), index, variant)


def rank_weights(ranks: Sequence[int]) -> np.ndarray:
    """Per-reference weights inverse to rank: w_j = 1 / (rank_j * S) with
    S = sum_j 1/rank_j; they sum to one by construction. A uniform rank
    vector yields exactly the uniform 1/m weights."""
    r = np.asarray(ranks, dtype=np.float64)
    if r.size == 0:
        raise ValueError("ranks must be non-empty")
    if (r < 1).any():
        raise ValueError("ranks must be >= 1")
    if (r == r[0]).all():
        return np.full(r.size, 1.0 / r.size)
    s = (1.0 / r).sum()
    return 1.0 / (r * s)


def r_cider(
    candidate: Sequence[str],
    references: Sequence[Sequence[str]],
    ranks: Sequence[int],
    index: NGramIndex,
    variant: str = "D",
) -> float:
    """Rank-weighted consensus score: reference similarities are combined
    with inverse-rank weights instead of the uniform 1/m."""
    _check_variant(variant)
    if len(references) != len(ranks):
        raise ValueError("one rank per reference required")
    if not references:
        raise ValueError("reference set must be non-empty")
    return _weighted_consensus(candidate, references, rank_weights(ranks), index, variant)


@dataclass
class ScoreReport:
    metric: str
    per_instance: dict[str, float]

    @property
    def corpus_mean(self) -> float:
        if not self.per_instance:
            return 0.0
        return float(np.mean(list(self.per_instance.values())))

    def as_dict(self) -> dict:
        return {
            "metric": self.metric,
            "corpus_mean": self.corpus_mean,
            "per_instance": self.per_instance,
        }


def comprehension_accuracy(
    predictions: Mapping[str, str], ground_truth: Mapping[str, str]
) -> float:
    """Fraction of instances whose predicted object id equals the target."""
    missing = sorted(set(ground_truth) - set(predictions))
    if missing:
        raise ValueError(f"missing predictions for {missing[:5]}")
    if not ground_truth:
        raise ValueError("no instances to evaluate")
    hits = sum(1 for key, want in ground_truth.items() if predictions[key] == want)
    return hits / len(ground_truth)


def argmax_object(scores: Mapping[str, float]) -> str:
    """Deterministic argmax over candidate objects: ties break to the
    lexicographically smallest id."""
    best_id, best = None, -np.inf
    for oid in sorted(scores):
        if scores[oid] > best:
            best_id, best = oid, scores[oid]
    if best_id is None:
        raise ValueError("no candidates")
    return best_id


def saliency_bins(
    scores: Sequence[float],
    areas: Sequence[float] | None = None,
    normalize: bool = False,
    bins: int = 10,
):
    """Histogram of per-target saliency, optionally normalized by sqrt(area).

    Returns ``(counts, edges)`` as numpy arrays.
    """
    values = np.asarray(scores, dtype=np.float64)
    if (values < 0).any():
        raise ValueError("saliency scores must be non-negative")
    if normalize:
        if areas is None:
            raise ValueError("normalize=True requires areas")
        a = np.asarray(areas, dtype=np.float64)
        if a.shape != values.shape or (a <= 0).any():
            raise ValueError("areas must be positive and match scores")
        values = values / np.sqrt(a)
    return np.histogram(values, bins=bins)


def corpus_stats(token_lists: Sequence[Sequence[str]]) -> dict:
    """Vocabulary size, mean sentence length, and a length histogram."""
    lengths = [len(toks) for toks in token_lists]
    vocab: set[str] = set()
    for toks in token_lists:
        vocab.update(toks)
    hist = dict(sorted(Counter(lengths).items()))
    return {
        "vocabulary_size": len(vocab),
        "mean_length": float(np.mean(lengths)) if lengths else 0.0,
        "length_histogram": hist,
    }
