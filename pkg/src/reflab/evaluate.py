"""Evaluation pipelines: comprehension argmax, ranked-pair classification,
and generation scoring with consensus metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


from .data import Dataset
from .features import target_parts
from .grad import engine as ops
from .metrics import NGramIndex, ScoreReport, argmax_object, cider, r_cider
from .ranking import InstanceRanks, rank_dataset
from .reinforcer import Reinforcer
from .speaker import Speaker


def _scene_ids(ds: Dataset, split: str | Iterable[str]) -> list[str]:
    if isinstance(split, str):
        return ds.split.part(split)
    return list(split)


def _parts_for_scene(ds: Dataset, scene_id: str, diff_slots: int):
    scene = ds.scenes[scene_id]
    objs = ds.objects_in_scene(scene_id)
    return {o.object_id: target_parts(scene, objs, o, diff_slots) for o in objs}


@dataclass
class ComprehensionResult:
    accuracy: float
    predictions: dict[str, str]  # sentence_id -> predicted object_id
    ground_truth: dict[str, str]


def speaker_comprehension(
    speaker: Speaker,
    ds: Dataset,
    ranked: dict[str, InstanceRanks],
    split: str | Iterable[str] = "test",
) -> ComprehensionResult:
    """argmax over candidate objects of log P(sentence | object)."""
    scene_ids = _scene_ids(ds, split)
    predictions: dict[str, str] = {}
    truth: dict[str, str] = {}
    slots = speaker.cfg.diff_slots
    for scene_id in scene_ids:
        sents = [
            s
            for oid, inst in ranked.items()
            if ds.objects[oid].scene_id == scene_id
            for s in inst.kept
        ]
        if not sents:
            continue
        parts_by_obj = _parts_for_scene(ds, scene_id, slots)
        ctxs = {oid: speaker.context(p) for oid, p in sorted(parts_by_obj.items())}
        for sent in sents:
            ids = speaker.vocab.encode(sent.tokens, add_eos=True)
            scores = {oid: speaker.logprob_graph(ctx, ids).item() for oid, ctx in ctxs.items()}
            predictions[sent.sentence_id] = argmax_object(scores)
            truth[sent.sentence_id] = sent.object_id
    if not truth:
        raise ValueError("no validated sentences in the requested split")
    acc = sum(predictions[k] == truth[k] for k in truth) / len(truth)
    return ComprehensionResult(accuracy=acc, predictions=predictions, ground_truth=truth)


def reinforcer_comprehension(
    reinforcer: Reinforcer,
    ds: Dataset,
    ranked: dict[str, InstanceRanks],
    split: str | Iterable[str] = "test",
) -> ComprehensionResult:
    """argmax over candidate objects of the match logit F(sentence, object)."""
    scene_ids = _scene_ids(ds, split)
    predictions: dict[str, str] = {}
    truth: dict[str, str] = {}
    p = reinforcer.params
    slots = reinforcer.cfg.diff_slots
    for scene_id in scene_ids:
        sents = [
            s
            for oid, inst in ranked.items()
            if ds.objects[oid].scene_id == scene_id
            for s in inst.kept
        ]
        if not sents:
            continue
        parts_by_obj = _parts_for_scene(ds, scene_id, slots)
        target_vecs = {
            oid: reinforcer.target_vec(parts) for oid, parts in sorted(parts_by_obj.items())
        }
        for sent in sents:
            ids = reinforcer.vocab.encode(sent.tokens, add_eos=True)
            sent_vec, _ = reinforcer.encode_sentence_graph(ids)
            scores = {}
            for oid, v_t in target_vecs.items():
                cat = ops.concat([sent_vec, v_t], axis=0)
                hidden = ops.tanh(ops.add(ops.matmul(p.mlp_w1, cat), p.mlp_b1))
                scores[oid] = ops.add(ops.matmul(p.mlp_w2, hidden), p.mlp_b2).item()
            predictions[sent.sentence_id] = argmax_object(scores)
            truth[sent.sentence_id] = sent.object_id
    if not truth:
        raise ValueError("no validated sentences in the requested split")
    acc = sum(predictions[k] == truth[k] for k in truth) / len(truth)
    return ComprehensionResult(accuracy=acc, predictions=predictions, ground_truth=truth)


def ranking_pair_eval(
    model: Speaker | Reinforcer,
    ds: Dataset,
    ranked: dict[str, InstanceRanks],
    split: str | Iterable[str] = "test",
) -> tuple[float, int]:
    """Pooled ranked-pair classification accuracy; returns (accuracy, #pairs).

    The speaker scores a sentence by log P(r|v_i), the reinforcer by its
    pre-sigmoid logit, always against the pair's own target.
    """
    scene_ids = set(_scene_ids(ds, split))
    slots = model.cfg.diff_slots
    total = 0.0
    n_pairs = 0
    for oid in sorted(ranked):
        inst = ranked[oid]
        if ds.objects[oid].scene_id not in scene_ids or not inst.pairs:
            continue
        scene_id = ds.objects[oid].scene_id
        parts = _parts_for_scene(ds, scene_id, slots)[oid]
        tokens_of = {s.sentence_id: s.tokens for s in inst.kept}
        if isinstance(model, Speaker):
            ctx = model.context(parts)
            scores = {
                sid: model.logprob_graph(ctx, model.vocab.encode(toks, add_eos=True)).item()
                for sid, toks in tokens_of.items()
            }
        else:
            v_t = model.target_vec(parts)
            scores = {
                sid: model.logit_graph(v_t, model.vocab.encode(toks, add_eos=True)).item()
                for sid, toks in tokens_of.items()
            }
        for better, worse in inst.pairs:
            sb, sw = scores[better], scores[worse]
            total += 1.0 if sb > sw else (0.5 if sb == sw else 0.0)
            n_pairs += 1
    if n_pairs == 0:
        raise ValueError("no ranked pairs in the requested split")
    return total / n_pairs, n_pairs


@dataclass
class GenerationResult:
    decoded: dict[str, list[str]]  # object_id -> generated tokens
    reports: dict[str, ScoreReport]  # metric name -> report

    def as_dict(self) -> dict:
        return {
            "decoded": self.decoded,
            "reports": {name: rep.as_dict() for name, rep in self.reports.items()},
        }


def generation_eval(
    speaker: Speaker,
    ds: Dataset,
    split: str | Iterable[str] = "test",
    variant: str = "D",
    mode: str = "greedy",
    beam_size: int = 3,
) -> GenerationResult:
    """Decode one sentence per instance and score against the instance's
    validated references with CIDEr, R1-CIDEr (accuracy+time ranks), and
    R2-CIDEr (accuracy-only ranks)."""
    scene_ids = _scene_ids(ds, split)
    ranked_r1 = rank_dataset(ds, scene_ids, use_time=True)
    ranked_r2 = rank_dataset(ds, scene_ids, use_time=False)
    slots = speaker.cfg.diff_slots

    refs: dict[str, list[list[str]]] = {}
    for oid in sorted(ranked_r1):
        refs[oid] = [s.tokens for s in ranked_r1[oid].kept]
    if not refs:
        raise ValueError("no instances with validated references in the split")
    index = NGramIndex.build(list(refs.values()))

    decoded: dict[str, list[str]] = {}
    per_cider: dict[str, float] = {}
    per_r1: dict[str, float] = {}
    per_r2: dict[str, float] = {}
    parts_cache: dict[str, dict] = {}
    for oid in sorted(refs):
        scene_id = ds.objects[oid].scene_id
        if scene_id not in parts_cache:
            parts_cache[scene_id] = _parts_for_scene(ds, scene_id, slots)
        parts = parts_cache[scene_id][oid]
        out = speaker.decode(parts, mode=mode, beam_size=beam_size)
        decoded[oid] = out.tokens
        kept = ranked_r1[oid].kept
        ranks_r1 = [ranked_r1[oid].ranks.rank_of(s.sentence_id) for s in kept]
        ranks_r2 = [ranked_r2[oid].ranks.rank_of(s.sentence_id) for s in kept]
        per_cider[oid] = cider(out.tokens, refs[oid], index, variant)
        per_r1[oid] = r_cider(out.tokens, refs[oid], ranks_r1, index, variant)
        per_r2[oid] = r_cider(out.tokens, refs[oid], ranks_r2, index, variant)

    return GenerationResult(
        decoded=decoded,
        reports={
            "cider": ScoreReport(
                metric="CIDEr-D" if variant == "D" else "CIDEr", per_instance=per_cider
            ),
            "r1-cider": ScoreReport(metric="R1-CIDEr", per_instance=per_r1),
            "r2-cider": ScoreReport(metric="R2-CIDEr", per_instance=per_r2),
        },
    )
