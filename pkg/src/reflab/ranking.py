"""Rank construction from worker responses.

Sentences are validated by worker majority, ranked primarily by
comprehension accuracy, and — within the all-correct group — by robust
timing dominance counts: sentence A beats B when B's robust mean time
exceeds A's by more than the sum of their standard errors. Also hosts the
ranked-pair extraction and the pairwise/first-rank evaluation protocols.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .data import Dataset, SentenceRecord, WorkerResponse


@dataclass
class TimingStats:
    robust_mean: float
    standard_error: float
    n_used: int


@dataclass
class RankEntry:
    rank: int  # 1 = best; competition ranking ("1-2-2-4")
    accuracy: float
    better_than_count: int


@dataclass
class RankedSentenceSet:
    entries: dict[str, RankEntry]

    def rank_of(self, sentence_id: str) -> int:
        return self.entries[sentence_id].rank


RankedPair = tuple[str, str]  # (better, worse), strictly ordered


def validate_sentence(responses: Sequence[WorkerResponse]) -> bool:
    """Keep a sentence iff strictly more than half the workers located the
    target; IMPOSSIBLE counts as incorrect."""
    if not responses:
        raise ValueError("cannot validate a sentence with no responses")
    correct = sum(1 for r in responses if r.correct)
    return correct * 2 > len(responses)


def robust_time_stats(times: Sequence[float]) -> TimingStats:
    """Drop one minimum and one maximum when five or more times are present
    (the middle block), then mean and standard error of the rest."""
    if not len(times):
        raise ValueError("cannot compute timing stats of an empty list")
    arr = np.sort(np.asarray(times, dtype=np.float64))
    if arr[0] <= 0:
        raise ValueError("elapsed times must be positive")
    if arr.size >= 5:
        arr = arr[1:-1]
    n = arr.size
    mean = float(arr.mean())
    se = 0.0 if n == 1 else float(arr.std(ddof=1) / np.sqrt(n))
    return TimingStats(robust_mean=mean, standard_error=se, n_used=n)


def better_than(a: TimingStats, b: TimingStats) -> bool:
    """A strictly dominates B on time: mean(B) - mean(A) > SE(A) + SE(B)."""
    return (b.robust_mean - a.robust_mean) > (a.standard_error + b.standard_error)


def build_ranks(sentences: Sequence[SentenceRecord], use_time: bool = True) -> RankedSentenceSet:
    """Competition ranks over (accuracy desc, timing-dominance count desc).

    Dominance counts are computed only inside the accuracy-1.0 group and
    only when ``use_time``; other sentences are ordered by accuracy alone.
    """
    sids = [s.sentence_id for s in sentences]
    acc = {s.sentence_id: s.accuracy() for s in sentences}
    counts = {sid: 0 for sid in sids}
    if use_time:
        perfect = [s for s in sentences if acc[s.sentence_id] == 1.0]
        stats = {
            s.sentence_id: robust_time_stats([r.elapsed for r in s.responses]) for s in perfect
        }
        for s in perfect:
            counts[s.sentence_id] = sum(
                1
                for o in perfect
                if o.sentence_id != s.sentence_id
                and better_than(stats[s.sentence_id], stats[o.sentence_id])
            )
    keys = {sid: (acc[sid], counts[sid]) for sid in sids}
    entries = {}
    for sid in sids:
        rank = 1 + sum(1 for other in sids if keys[other] > keys[sid])
        entries[sid] = RankEntry(rank=rank, accuracy=acc[sid], better_than_count=counts[sid])
    return RankedSentenceSet(entries=entries)


def extract_pairs(ranks: RankedSentenceSet) -> list[RankedPair]:
    """All strictly-ordered (better, worse) sentence pairs; ties excluded."""
    items = sorted(ranks.entries.items())
    pairs = []
    for sid_p, e_p in items:
        for sid_q, e_q in items:
            if e_p.rank < e_q.rank:
                pairs.append((sid_p, sid_q))
    return pairs


def rank_pair_accuracy(pairs: Sequence[RankedPair], scorer: Callable[[str], float]) -> float:
    """Fraction of pairs the scorer orders like the human ranks; exact score
    ties count one half."""
    if not pairs:
        raise ValueError("cannot evaluate on an empty pair set")
    credit = 0.0
    for better, worse in pairs:
        sb, sw = scorer(better), scorer(worse)
        if sb > sw:
            credit += 1.0
        elif sb == sw:
            credit += 0.5
    return credit / len(pairs)


def first_rank_ratio(
    outcomes: Mapping[str, Mapping[str, tuple[float, float]]],
) -> dict[str, float]:
    """Per-method share of instances whose sentence comes first.

    ``outcomes[instance][method] = (accuracy, mean_time)``. Methods are
    ordered by accuracy; all-correct methods are then ordered by mean time.
    A t-way tie for first place credits each tied method 1/t.
    """
    if not outcomes:
        raise ValueError("no instances given")
    methods: list[str] | None = None
    credit: dict[str, float] = {}
    for instance, per_method in outcomes.items():
        cur = sorted(per_method)
        if methods is None:
            methods = cur
            credit = {m: 0.0 for m in methods}
            if len(methods) < 2:
                raise ValueError("need at least two methods to compare")
        elif cur != methods:
            raise ValueError(f"instance {instance} has mismatched methods {cur}")
        accs = {m: per_method[m][0] for m in methods}
        best_acc = max(accs.values())
        leaders = [m for m in methods if accs[m] == best_acc]
        if best_acc == 1.0 and len(leaders) > 1:
            times = {m: per_method[m][1] for m in leaders}
            best_time = min(times.values())
            leaders = [m for m in leaders if times[m] == best_time]
        for m in leaders:
            credit[m] += 1.0 / len(leaders)
    n = len(outcomes)
    return {m: credit[m] / n for m in credit}


# ---------------------------------------------------------------------------
# dataset-level pipeline


@dataclass
class InstanceRanks:
    object_id: str
    kept: list[SentenceRecord]
    ranks: RankedSentenceSet
    pairs: list[RankedPair]


def rank_dataset(
    ds: Dataset,
    scene_ids: Iterable[str] | None = None,
    use_time: bool = True,
) -> dict[str, InstanceRanks]:
    """Validate and rank every instance's sentences; instances whose
    sentences are all rejected are dropped."""
    out: dict[str, InstanceRanks] = {}
    for object_id, sents in ds.instances(scene_ids).items():
        kept = [s for s in sents if validate_sentence(s.responses)]
        if not kept:
            continue
        ranks = build_ranks(kept, use_time=use_time)
        out[object_id] = InstanceRanks(
            object_id=object_id,
            kept=kept,
            ranks=ranks,
            pairs=extract_pairs(ranks),
        )
    return out


def ranks_to_json(ranked: Mapping[str, InstanceRanks]) -> dict:
    return {
        object_id: {
            sid: {
                "rank": e.rank,
                "accuracy": e.accuracy,
                "better_than_count": e.better_than_count,
            }
            for sid, e in inst.ranks.entries.items()
        }
        for object_id, inst in ranked.items()
    }
