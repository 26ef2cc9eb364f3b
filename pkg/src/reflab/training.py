"""Speaker and reinforcer training: likelihood, max-margin, ranking, and
policy-gradient objectives, their compound combination, negative sampling,
and the seeded training loops."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .data import Dataset
from .features import TargetParts, target_parts
from .grad import Adam, EngineError, Sgd, Tape, Tensor, backward
from .grad import engine as ops
from .ranking import InstanceRanks
from .reinforcer import Reinforcer
from .speaker import EOS, InstanceContext, Speaker


@dataclass
class HyperParams:
    lambda_s1: float = 1.0  # wrong-object max-margin weight
    lambda_s2: float = 1.0  # wrong-sentence max-margin weight
    lambda_s3: float = 1.0  # ranking hinge weight
    lambda_r: float = 1.0  # policy-gradient reward weight
    margin1: float = 1.0
    margin2: float = 1.0
    margin3: float = 1.0
    pg_samples: int = 1
    baseline: str = "off"  # off | moving-average

    def validate(self) -> None:
        values = [
            self.lambda_s1,
            self.lambda_s2,
            self.lambda_s3,
            self.lambda_r,
            self.margin1,
            self.margin2,
            self.margin3,
        ]
        if any(not np.isfinite(v) or v < 0 for v in values):
            raise ValueError("hyper-parameters must be finite and non-negative")
        if self.pg_samples < 1:
            raise ValueError("pg_samples must be >= 1")
        if self.baseline not in ("off", "moving-average"):
            raise ValueError(f"unknown baseline mode {self.baseline!r}")


@dataclass
class TrainConfig:
    steps: int = 500
    batch_size: int = 16
    seed: int = 0
    lr: float = 1e-3
    optimizer: str = "adam"  # adam | sgd
    checkpoint_every: int = 0  # 0 = only at the end
    enable_nll: bool = True
    enable_mmi: bool = True
    enable_rank: bool = True
    enable_pg: bool = True

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class CompoundItem:
    """One training instance with everything its loss terms need."""

    parts: TargetParts
    pos_ids: list[int]  # ground-truth sentence (EOS-terminated)
    wrong_parts: TargetParts | None = None  # wrong-object negative (same scene)
    wrong_ids: list[int] | None = None  # wrong-sentence negative
    rank_pairs: list[tuple[list[int], list[int]]] = field(default_factory=list)


RewardFn = Callable[[TargetParts, Sequence[int]], float]


def nll_loss_graph(speaker: Speaker, batch: Sequence[tuple[TargetParts, Sequence[int]]]) -> Tensor:
    """Mean negative log-likelihood of the observed sentences."""
    terms = [ops.neg(speaker.logprob_graph(parts, ids)) for parts, ids in batch]
    return ops.div(ops.add_n(terms), float(len(terms)))


def _mmi_term(
    speaker: Speaker,
    ctx: InstanceContext,
    item: CompoundItem,
    hp: HyperParams,
) -> Tensor:
    lp_pos = speaker.logprob_graph(ctx, item.pos_ids)
    pieces = []
    if item.wrong_parts is not None and hp.lambda_s1 > 0:
        lp_wrong_obj = speaker.logprob_graph(item.wrong_parts, item.pos_ids)
        pieces.append(
            ops.mul(ops.relu(ops.add(ops.sub(lp_wrong_obj, lp_pos), hp.margin1)), hp.lambda_s1)
        )
    if item.wrong_ids is not None and hp.lambda_s2 > 0:
        lp_wrong_sent = speaker.logprob_graph(ctx, item.wrong_ids)
        pieces.append(
            ops.mul(ops.relu(ops.add(ops.sub(lp_wrong_sent, lp_pos), hp.margin2)), hp.lambda_s2)
        )
    if not pieces:
        return ops.tensor(0.0)
    return ops.add_n(pieces) if len(pieces) > 1 else pieces[0]


def mmi_loss_graph(speaker: Speaker, items: Sequence[CompoundItem], hp: HyperParams) -> Tensor:
    """Mean of the two max-margin hinges; single-object scenes contribute
    only the wrong-sentence term."""
    terms = [_mmi_term(speaker, speaker.context(item.parts), item, hp) for item in items]
    return ops.div(ops.add_n(terms), float(len(terms)))


def rank_loss_graph(
    speaker: Speaker,
    ctx_or_parts,
    pairs: Sequence[tuple[Sequence[int], Sequence[int]]],
    hp: HyperParams,
) -> Tensor:
    """Ranking hinge over the given (better, worse) sentence pairs; an empty
    pair list contributes exactly zero."""
    if not pairs:
        return ops.tensor(0.0)
    ctx = (
        ctx_or_parts
        if isinstance(ctx_or_parts, InstanceContext)
        else speaker.context(ctx_or_parts)
    )
    terms = []
    for ids_p, ids_q in pairs:
        lp_p = speaker.logprob_graph(ctx, ids_p)
        lp_q = speaker.logprob_graph(ctx, ids_q)
        terms.append(
            ops.mul(ops.relu(ops.add(ops.sub(lp_q, lp_p), hp.margin3)), hp.lambda_s3)
        )
    return ops.add_n(terms) if len(terms) > 1 else terms[0]


def enumerate_outcomes(vocab_size: int, max_len: int):
    """Every decode outcome of length <= max_len: EOS-terminated sequences
    plus bare truncated prefixes. Their probabilities sum to one."""

    def walk(prefix: list[int]):
        if len(prefix) == max_len:
            yield prefix, prefix[-1] == EOS
            return
        for tok in range(vocab_size):
            seq = prefix + [tok]
            if tok == EOS:
                yield seq, True
            else:
                yield from walk(seq)

    yield from walk([])


def expected_reward_graph(
    speaker: Speaker,
    parts: TargetParts,
    reward_fn: RewardFn,
    max_len: int,
) -> Tensor:
    """Exact expected reward sum_w P(w|v) F(w) by exhaustive enumeration,
    differentiable through the sequence probabilities."""
    ctx = speaker.context(parts)
    terms = []
    for ids, _closed in enumerate_outcomes(speaker.cfg.vocab_size, max_len):
        reward = float(reward_fn(parts, ids))
        p_w = ops.exp(speaker.logprob_graph(ctx, ids))
        terms.append(ops.mul(p_w, reward))
    return ops.add_n(terms)


def pg_surrogate_graph(
    speaker: Speaker,
    ctx_or_parts,
    parts: TargetParts,
    reward_fn: RewardFn,
    rng: np.random.Generator,
    hp: HyperParams,
    baseline_value: float = 0.0,
    max_len: int | None = None,
) -> tuple[Tensor, float]:
    """REINFORCE surrogate J^ = (1/S) sum_s (F_s - b) log P(w_s); ascending
    J^ raises expected reward. Returns (graph, mean raw reward)."""
    ctx = (
        ctx_or_parts
        if isinstance(ctx_or_parts, InstanceContext)
        else speaker.context(ctx_or_parts)
    )
    terms = []
    rewards = []
    for _ in range(hp.pg_samples):
        sample = speaker.decode(parts, mode="sample", rng=rng, max_len=max_len)
        reward = float(reward_fn(parts, sample.ids))
        rewards.append(reward)
        coeff = reward - (baseline_value if hp.baseline == "moving-average" else 0.0)
        lp = speaker.logprob_graph(ctx, sample.ids)
        terms.append(ops.mul(lp, coeff))
    j_hat = ops.div(ops.add_n(terms) if len(terms) > 1 else terms[0], float(len(terms)))
    return j_hat, float(np.mean(rewards))


def compound_loss_graph(
    speaker: Speaker,
    items: Sequence[CompoundItem],
    hp: HyperParams,
    *,
    reward_fn: RewardFn | None = None,
    pg_mode: str = "off",  # off | sample | enum
    rng: np.random.Generator | None = None,
    enum_max_len: int = 2,
    baseline_value: float = 0.0,
    config: TrainConfig | None = None,
) -> tuple[Tensor, dict]:
    """Total speaker loss L = L_nll + L_mmi + L_rank - lambda_r * J^ with a
    per-component report; components toggle off exactly (contributing no
    graph nodes) when disabled or zero-weighted."""
    cfg = config or TrainConfig()
    if not items:
        raise ValueError("empty batch")
    n = float(len(items))

    report: dict[str, float] = {"nll": 0.0, "mmi": 0.0, "rank": 0.0, "pg_weighted": 0.0}
    rewards: list[float] = []
    total_parts: list[Tensor] = []

    def build(name: str, fn):
        try:
            return fn()
        except EngineError as e:
            raise EngineError(f"{name} component failed: {e}") from e

    use_mmi = cfg.enable_mmi and (hp.lambda_s1 > 0 or hp.lambda_s2 > 0)
    use_rank = cfg.enable_rank and hp.lambda_s3 > 0
    use_pg = cfg.enable_pg and hp.lambda_r > 0 and pg_mode != "off"
    if use_pg and reward_fn is None:
        raise ValueError("policy gradient enabled but no reward_fn given")

    per_item_nll: list[Tensor] = []
    per_item_mmi: list[Tensor] = []
    per_item_rank: list[Tensor] = []
    per_item_j: list[Tensor] = []

    for item in items:
        ctx = speaker.context(item.parts)
        if cfg.enable_nll:
            per_item_nll.append(
                build("nll", lambda: ops.neg(speaker.logprob_graph(ctx, item.pos_ids)))
            )
        if use_mmi:
            per_item_mmi.append(build("mmi", lambda: _mmi_term(speaker, ctx, item, hp)))
        if use_rank and item.rank_pairs:
            per_item_rank.append(
                build("rank", lambda: rank_loss_graph(speaker, ctx, item.rank_pairs, hp))
            )
        if use_pg:
            if pg_mode == "sample":
                if rng is None:
                    raise ValueError("sampled policy gradient needs an rng")
                j_hat, mean_r = build(
                    "pg",
                    lambda: pg_surrogate_graph(
                        speaker, ctx, item.parts, reward_fn, rng, hp, baseline_value
                    ),
                )
                per_item_j.append(j_hat)
                rewards.append(mean_r)
            elif pg_mode == "enum":
                j = build(
                    "pg",
                    lambda: expected_reward_graph(speaker, item.parts, reward_fn, enum_max_len),
                )
                per_item_j.append(j)
                rewards.append(j.item())
            else:
                raise ValueError(f"unknown pg_mode {pg_mode!r}")

    if per_item_nll:
        nll = ops.div(ops.add_n(per_item_nll), n)
        report["nll"] = nll.item()
        total_parts.append(nll)
    if per_item_mmi:
        mmi = ops.div(ops.add_n(per_item_mmi), n)
        report["mmi"] = mmi.item()
        total_parts.append(mmi)
    if per_item_rank:
        rank = ops.div(ops.add_n(per_item_rank), n)
        report["rank"] = rank.item()
        total_parts.append(rank)
    if per_item_j:
        j_mean = ops.div(ops.add_n(per_item_j), n)
        weighted = ops.mul(j_mean, hp.lambda_r)
        report["pg_weighted"] = weighted.item()
        total_parts.append(ops.neg(weighted))

    if not total_parts:
        raise ValueError("all loss components disabled")
    total = ops.add_n(total_parts) if len(total_parts) > 1 else total_parts[0]
    report["total"] = total.item()
    report["pg_reward_mean"] = float(np.mean(rewards)) if rewards else 0.0
    return total, report


# ---------------------------------------------------------------------------
# sampling helpers and training loops


class TrainPool:
    """Instance pool over the train split with parts, validated sentences,
    ranked pairs, and negative-sampling indexes."""

    def __init__(
        self,
        ds: Dataset,
        ranked: dict[str, InstanceRanks],
        diff_slots: int,
        scene_ids: Sequence[str] | None = None,
    ):
        wanted = set(scene_ids if scene_ids is not None else ds.split.train)
        self.ds = ds
        self.parts: dict[str, TargetParts] = {}
        scene_objs = {sid: ds.objects_in_scene(sid) for sid in sorted(wanted)}
        for sid, objs in scene_objs.items():
            scene = ds.scenes[sid]
            for obj in objs:
                self.parts[obj.object_id] = target_parts(scene, objs, obj, diff_slots)
        self.instances: list[str] = [
            oid
            for oid in sorted(ranked)
            if ds.objects[oid].scene_id in wanted and ranked[oid].kept
        ]
        if not self.instances:
            raise ValueError("no usable training instances")
        self.ranked = ranked
        self.kept_ids: dict[str, list[str]] = {
            oid: [s.sentence_id for s in ranked[oid].kept] for oid in self.instances
        }
        self.sentence_tokens = {
            s.sentence_id: s.tokens for oid in self.instances for s in ranked[oid].kept
        }

    def sample_item(
        self, oid: str, vocab_encode, rng: np.random.Generator, want_rank_pair: bool
    ) -> CompoundItem:
        inst = self.ranked[oid]
        kept = inst.kept
        sent = kept[int(rng.integers(len(kept)))]
        pos_ids = vocab_encode(sent.tokens)

        scene_id = self.ds.objects[oid].scene_id
        others = [o for o in self.ds.objects_in_scene(scene_id) if o.object_id != oid]
        wrong_parts = (
            self.parts[others[int(rng.integers(len(others)))].object_id] if others else None
        )

        wrong_ids = None
        for _ in range(8):  # rejection-sample a sentence from another instance
            other_oid = self.instances[int(rng.integers(len(self.instances)))]
            if other_oid != oid:
                other_kept = self.ranked[other_oid].kept
                wrong = other_kept[int(rng.integers(len(other_kept)))]
                wrong_ids = vocab_encode(wrong.tokens)
                break

        rank_pairs = []
        if want_rank_pair and inst.pairs:
            p_sid, q_sid = inst.pairs[int(rng.integers(len(inst.pairs)))]
            rank_pairs = [
                (
                    vocab_encode(self.sentence_tokens[p_sid]),
                    vocab_encode(self.sentence_tokens[q_sid]),
                )
            ]
        return CompoundItem(
            parts=self.parts[oid],
            pos_ids=pos_ids,
            wrong_parts=wrong_parts,
            wrong_ids=wrong_ids,
            rank_pairs=rank_pairs,
        )


class SpeakerTrainer:
    """Single-threaded compound training loop with a JSONL step log."""

    def __init__(
        self,
        speaker: Speaker,
        pool: TrainPool,
        hp: HyperParams,
        config: TrainConfig,
        reinforcer: Reinforcer | None = None,
        log_path=None,
    ):
        hp.validate()
        config.validate()
        self.speaker = speaker
        self.pool = pool
        self.hp = hp
        self.config = config
        self.reinforcer = reinforcer
        self.rng = np.random.default_rng(config.seed)
        params = speaker.params.tensors()
        cls = Adam if config.optimizer == "adam" else Sgd
        self.optimizer = cls(params, lr=config.lr, seed=config.seed)
        self._wrt = list(params.values())
        self._baseline = 0.0
        self._log_path = log_path
        self.history: list[dict] = []

    def _reward_fn(self) -> RewardFn | None:
        if self.reinforcer is None:
            return None
        return self.reinforcer.reward

    def step(self, step_index: int) -> dict:
        batch_ids = [
            self.pool.instances[int(self.rng.integers(len(self.pool.instances)))]
            for _ in range(self.config.batch_size)
        ]
        encode = lambda toks: self.speaker.vocab.encode(toks, add_eos=True)
        items = [
            self.pool.sample_item(oid, encode, self.rng, self.config.enable_rank)
            for oid in batch_ids
        ]
        use_pg = (
            self.config.enable_pg and self.hp.lambda_r > 0 and self.reinforcer is not None
        )
        with Tape() as tape:
            total, report = compound_loss_graph(
                self.speaker,
                items,
                self.hp,
                reward_fn=self._reward_fn() if use_pg else None,
                pg_mode="sample" if use_pg else "off",
                rng=self.rng,
                baseline_value=self._baseline,
                config=self.config,
            )
        grads = backward(total, tape, wrt=self._wrt)
        self.optimizer.step(grads)
        if self.hp.baseline == "moving-average" and use_pg:
            self._baseline = 0.9 * self._baseline + 0.1 * report["pg_reward_mean"]
        report["step"] = step_index
        self.history.append(report)
        if self._log_path is not None:
            with open(self._log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(report) + "\n")
        return report

    def run(self, steps: int | None = None) -> list[dict]:
        for i in range(steps if steps is not None else self.config.steps):
            self.step(i)
        return self.history


class ReinforcerTrainer:
    """Paired/unpaired logistic pretraining plus rank-aware fine-tuning."""

    def __init__(
        self,
        reinforcer: Reinforcer,
        pool: TrainPool,
        hp: HyperParams,
        config: TrainConfig,
        log_path=None,
    ):
        hp.validate()
        config.validate()
        self.reinforcer = reinforcer
        self.pool = pool
        self.hp = hp
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        params = reinforcer.params.tensors()
        cls = Adam if config.optimizer == "adam" else Sgd
        self.optimizer = cls(params, lr=config.lr, seed=config.seed)
        self._wrt = list(params.values())
        self.history: list[dict] = []
        self._log_path = log_path

    def _pretrain_batch(self):
        encode = lambda toks: self.reinforcer.vocab.encode(toks, add_eos=True)
        batch = []
        for _ in range(self.config.batch_size):
            oid = self.pool.instances[int(self.rng.integers(len(self.pool.instances)))]
            item = self.pool.sample_item(oid, encode, self.rng, want_rank_pair=False)
            batch.append((item.parts, item.pos_ids, True))
            # negatives: alternate wrong-object and wrong-sentence pairings
            if item.wrong_parts is not None and self.rng.random() < 0.5:
                batch.append((item.wrong_parts, item.pos_ids, False))
            elif item.wrong_ids is not None:
                batch.append((item.parts, item.wrong_ids, False))
            elif item.wrong_parts is not None:
                batch.append((item.wrong_parts, item.pos_ids, False))
        return batch

    def step(self, step_index: int, with_rank: bool = False) -> dict:
        encode = lambda toks: self.reinforcer.vocab.encode(toks, add_eos=True)
        batch = self._pretrain_batch()
        with Tape() as tape:
            bce = self.reinforcer.pretrain_loss_graph(batch)
            parts_list: list[Tensor] = [bce]
            rank_value = 0.0
            if with_rank and self.hp.lambda_s3 > 0:
                hinge_terms = []
                for _ in range(self.config.batch_size):
                    oid = self.pool.instances[int(self.rng.integers(len(self.pool.instances)))]
                    inst = self.pool.ranked[oid]
                    if not inst.pairs:
                        continue
                    p_sid, q_sid = inst.pairs[int(self.rng.integers(len(inst.pairs)))]
                    hinge_terms.append(
                        self.reinforcer.rank_loss_graph(
                            self.pool.parts[oid],
                            encode(self.pool.sentence_tokens[p_sid]),
                            encode(self.pool.sentence_tokens[q_sid]),
                            self.hp.margin3,
                            self.hp.lambda_s3,
                        )
                    )
                if hinge_terms:
                    rank = ops.div(ops.add_n(hinge_terms), float(len(hinge_terms)))
                    rank_value = rank.item()
                    parts_list.append(rank)
            total = ops.add_n(parts_list) if len(parts_list) > 1 else parts_list[0]
        grads = backward(total, tape, wrt=self._wrt)
        self.optimizer.step(grads)
        report = {
            "step": step_index,
            "bce": bce.item(),
            "rank": rank_value,
            "total": total.item(),
        }
        self.history.append(report)
        if self._log_path is not None:
            with open(self._log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(report) + "\n")
        return report

    def run(self, steps: int | None = None, with_rank: bool = False) -> list[dict]:
        for i in range(steps if steps is not None else self.config.steps):
            self.step(i, with_rank=with_rank)
        return self.history
