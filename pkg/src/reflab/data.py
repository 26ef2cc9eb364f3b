"""Scenes, objects, sentences, worker responses: data model, JSONL persistence,
and a synthetic scene generator.

Scenes carry precomputed feature grids in place of CNN activations; the
generator encodes object attributes (color, size, category) and landmark
cells into those features so that discriminative referring expressions are
learnable, and simulates per-worker identification times whose ordinal
structure mirrors sentence ambiguity and length.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

IMPOSSIBLE = "IMPOSSIBLE"
SCHEMA_VERSION = 1


class DataError(Exception):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


@dataclass
class Scene:
    scene_id: str
    width: float
    height: float
    rows: int
    cols: int
    v_global: np.ndarray  # (d, k), one column per grid cell
    render: dict | None = None
    saliency: dict[str, float] | None = None

    @property
    def k(self) -> int:
        return self.rows * self.cols

    def cell_centers(self) -> np.ndarray:
        """Pixel-space centers of the k grid cells, row-major (k, 2)."""
        return _grid_centers(self.rows, self.cols, self.width, self.height)


@dataclass
class ObjectRef:
    object_id: str
    scene_id: str
    box: tuple[float, float, float, float]  # x_tl, y_tl, w, h
    category: str
    feature: np.ndarray  # pooled object feature (d,)
    v_local: np.ndarray  # (d, l), one column per local grid cell
    local_rows: int
    local_cols: int

    @property
    def center(self) -> tuple[float, float]:
        x, y, w, h = self.box
        return (x + w / 2.0, y + h / 2.0)

    @property
    def area(self) -> float:
        return self.box[2] * self.box[3]


@dataclass
class WorkerResponse:
    worker_id: str
    chosen: str  # object_id or IMPOSSIBLE
    correct: bool
    elapsed: float  # seconds


@dataclass
class SentenceRecord:
    sentence_id: str
    object_id: str  # target
    tokens: list[str]
    responses: list[WorkerResponse] = field(default_factory=list)
    rank: int | None = None

    def accuracy(self) -> float:
        if not self.responses:
            raise DataError(f"sentence {self.sentence_id} has no responses")
        return sum(r.correct for r in self.responses) / len(self.responses)


@dataclass
class DatasetSplit:
    train: list[str] = field(default_factory=list)
    val: list[str] = field(default_factory=list)
    test: list[str] = field(default_factory=list)

    def part(self, name: str) -> list[str]:
        if name not in ("train", "val", "test"):
            raise DataError(f"unknown split {name!r}")
        return getattr(self, name)


@dataclass
class Dataset:
    scenes: dict[str, Scene]
    objects: dict[str, ObjectRef]
    sentences: dict[str, SentenceRecord]
    split: DatasetSplit

    def objects_in_scene(self, scene_id: str) -> list[ObjectRef]:
        return sorted(
            (o for o in self.objects.values() if o.scene_id == scene_id),
            key=lambda o: o.object_id,
        )

    def scene_of_object(self, object_id: str) -> Scene:
        return self.scenes[self.objects[object_id].scene_id]

    def instances(self, scene_ids: Iterable[str] | None = None) -> dict[str, list[SentenceRecord]]:
        """Sentences grouped by target object, sorted for determinism."""
        wanted = None if scene_ids is None else set(scene_ids)
        out: dict[str, list[SentenceRecord]] = {}
        for sent in sorted(self.sentences.values(), key=lambda s: s.sentence_id):
            scene_id = self.objects[sent.object_id].scene_id
            if wanted is not None and scene_id not in wanted:
                continue
            out.setdefault(sent.object_id, []).append(sent)
        return out


# ---------------------------------------------------------------------------
# JSONL persistence (floats written with 17 significant digits)


def _fmt_value(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, np.ndarray):
        return "[" + ",".join(_fmt_value(x) for x in v.tolist()) + "]"
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_fmt_value(x) for x in v) + "]"
    if isinstance(v, Mapping):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_fmt_value(x)}" for k, x in v.items()) + "}"
    raise DataError(f"cannot serialize {type(v).__name__}")


def _record_line(record: Mapping) -> str:
    return _fmt_value(record)


def save_dataset(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for scene in sorted(dataset.scenes.values(), key=lambda s: s.scene_id):
            rec = {
                "kind": "scene",
                "schema_version": SCHEMA_VERSION,
                "scene_id": scene.scene_id,
                "width": scene.width,
                "height": scene.height,
                "rows": scene.rows,
                "cols": scene.cols,
                "cells": scene.v_global.T,  # (k, d): one row per cell
            }
            if scene.render is not None:
                rec["render"] = scene.render
            if scene.saliency is not None:
                rec["saliency"] = scene.saliency
            fh.write(_record_line(rec) + "\n")
        for obj in sorted(dataset.objects.values(), key=lambda o: o.object_id):
            fh.write(
                _record_line(
                    {
                        "kind": "object",
                        "schema_version": SCHEMA_VERSION,
                        "object_id": obj.object_id,
                        "scene_id": obj.scene_id,
                        "box": list(obj.box),
                        "category": obj.category,
                        "feature": obj.feature,
                        "local_rows": obj.local_rows,
                        "local_cols": obj.local_cols,
                        "local_cells": obj.v_local.T,
                    }
                )
                + "\n"
            )
        for sent in sorted(dataset.sentences.values(), key=lambda s: s.sentence_id):
            rec = {
                "kind": "sentence",
                "schema_version": SCHEMA_VERSION,
                "sentence_id": sent.sentence_id,
                "object_id": sent.object_id,
                "tokens": sent.tokens,
                "responses": [
                    {
                        "worker_id": r.worker_id,
                        "chosen": r.chosen,
                        "correct": r.correct,
                        "elapsed": r.elapsed,
                    }
                    for r in sent.responses
                ],
            }
            if sent.rank is not None:
                rec["rank"] = sent.rank
            fh.write(_record_line(rec) + "\n")
        fh.write(
            _record_line(
                {
                    "kind": "split",
                    "schema_version": SCHEMA_VERSION,
                    "train": dataset.split.train,
                    "val": dataset.split.val,
                    "test": dataset.split.test,
                }
            )
            + "\n"
        )


def load_dataset(path) -> Dataset:
    scenes: dict[str, Scene] = {}
    objects: dict[str, ObjectRef] = {}
    sentences: dict[str, SentenceRecord] = {}
    split = DatasetSplit()
    saw_split = False

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as e:
                raise DataError(f"malformed JSON ({e.msg})", lineno) from None
            kind = rec.get("kind")
            if rec.get("schema_version") != SCHEMA_VERSION:
                raise DataError(
                    f"schema_version {rec.get('schema_version')!r} != {SCHEMA_VERSION}", lineno
                )
            try:
                if kind == "scene":
                    scene = _parse_scene(rec)
                    scenes[scene.scene_id] = scene
                elif kind == "object":
                    obj = _parse_object(rec)
                    objects[obj.object_id] = obj
                elif kind == "sentence":
                    sent = _parse_sentence(rec)
                    sentences[sent.sentence_id] = sent
                elif kind == "split":
                    split = DatasetSplit(
                        train=list(rec["train"]), val=list(rec["val"]), test=list(rec["test"])
                    )
                    saw_split = True
                else:
                    raise DataError(f"unknown record kind {kind!r}")
            except KeyError as e:
                raise DataError(f"{kind} record missing field {e}", lineno) from None
            except DataError as e:
                if e.line is None:
                    raise DataError(str(e), lineno) from None
                raise

    if not saw_split:
        raise DataError("dataset has no split record")
    ds = Dataset(scenes=scenes, objects=objects, sentences=sentences, split=split)
    validate_dataset(ds)
    return ds


def _parse_scene(rec) -> Scene:
    cells = np.asarray(rec["cells"], dtype=np.float64)  # (k, d)
    scene = Scene(
        scene_id=str(rec["scene_id"]),
        width=float(rec["width"]),
        height=float(rec["height"]),
        rows=int(rec["rows"]),
        cols=int(rec["cols"]),
        v_global=np.ascontiguousarray(cells.T),
        render=rec.get("render"),
        saliency={str(k): float(v) for k, v in rec["saliency"].items()}
        if rec.get("saliency") is not None
        else None,
    )
    if scene.width <= 0 or scene.height <= 0:
        raise DataError(f"scene {scene.scene_id}: non-positive dimensions")
    if cells.shape[0] != scene.k:
        raise DataError(f"scene {scene.scene_id}: {cells.shape[0]} cells != rows*cols {scene.k}")
    if not np.all(np.isfinite(cells)):
        raise DataError(f"scene {scene.scene_id}: non-finite feature")
    return scene


def _parse_object(rec) -> ObjectRef:
    box = tuple(float(v) for v in rec["box"])
    if len(box) != 4:
        raise DataError(f"object {rec['object_id']}: box must have 4 entries")
    local = np.asarray(rec["local_cells"], dtype=np.float64)  # (l, d)
    obj = ObjectRef(
        object_id=str(rec["object_id"]),
        scene_id=str(rec["scene_id"]),
        box=box,  # type: ignore[arg-type]
        category=str(rec["category"]),
        feature=np.asarray(rec["feature"], dtype=np.float64),
        v_local=np.ascontiguousarray(local.T),
        local_rows=int(rec["local_rows"]),
        local_cols=int(rec["local_cols"]),
    )
    if not (np.all(np.isfinite(obj.feature)) and np.all(np.isfinite(local))):
        raise DataError(f"object {obj.object_id}: non-finite feature")
    if local.shape[0] != obj.local_rows * obj.local_cols:
        raise DataError(f"object {obj.object_id}: local grid size mismatch")
    return obj


def _parse_sentence(rec) -> SentenceRecord:
    tokens = [str(t) for t in rec["tokens"]]
    if not tokens:
        raise DataError(f"sentence {rec['sentence_id']}: empty token list")
    responses = [
        WorkerResponse(
            worker_id=str(r["worker_id"]),
            chosen=str(r["chosen"]),
            correct=bool(r["correct"]),
            elapsed=float(r["elapsed"]),
        )
        for r in rec.get("responses", [])
    ]
    return SentenceRecord(
        sentence_id=str(rec["sentence_id"]),
        object_id=str(rec["object_id"]),
        tokens=tokens,
        responses=responses,
        rank=int(rec["rank"]) if rec.get("rank") is not None else None,
    )


def validate_dataset(ds: Dataset) -> None:
    """Referential integrity plus per-record invariants."""
    for obj in ds.objects.values():
        if obj.scene_id not in ds.scenes:
            raise DataError(f"object {obj.object_id} references missing scene {obj.scene_id}")
        scene = ds.scenes[obj.scene_id]
        x, y, w, h = obj.box
        if w <= 0 or h <= 0:
            raise DataError(f"object {obj.object_id}: degenerate box {obj.box}")
        if x < 0 or y < 0 or x + w > scene.width or y + h > scene.height:
            raise DataError(f"object {obj.object_id}: box {obj.box} outside image")
        if obj.feature.shape[0] != scene.v_global.shape[0]:
            raise DataError(f"object {obj.object_id}: feature width != scene feature width")
    for sent in ds.sentences.values():
        if sent.object_id not in ds.objects:
            raise DataError(
                f"sentence {sent.sentence_id} references missing object {sent.object_id}"
            )
        for r in sent.responses:
            if not r.worker_id:
                raise DataError(f"sentence {sent.sentence_id}: empty worker id")
            if r.elapsed <= 0:
                raise DataError(f"sentence {sent.sentence_id}: non-positive elapsed {r.elapsed}")
            if r.chosen == IMPOSSIBLE:
                if r.correct:
                    raise DataError(f"sentence {sent.sentence_id}: IMPOSSIBLE marked correct")
            elif r.correct != (r.chosen == sent.object_id):
                raise DataError(
                    f"sentence {sent.sentence_id}: correct flag inconsistent for {r.worker_id}"
                )
    seen: set[str] = set()
    for name in ("train", "val", "test"):
        ids = ds.split.part(name)
        for sid in ids:
            if sid not in ds.scenes:
                raise DataError(f"split {name} references missing scene {sid}")
            if sid in seen:
                raise DataError(f"scene {sid} appears in multiple split partitions")
        seen.update(ids)


# ---------------------------------------------------------------------------
# synthetic generation

COLORS = ["red", "blue", "green", "yellow", "white", "black", "purple", "orange"]
SIZES = ["small", "big"]
CATEGORIES = ["person", "car", "dog", "bike"]
LANDMARKS = ["tree", "fountain", "statue", "bench", "kiosk", "lamp"]

_COLOR_HEX = {
    "red": "#d03020",
    "blue": "#2040c0",
    "green": "#20a040",
    "yellow": "#d0c020",
    "white": "#e8e8e8",
    "black": "#202020",
    "purple": "#8030a0",
    "orange": "#e08020",
}
_LANDMARK_HEX = {
    "tree": "#1a6b2a",
    "fountain": "#3abd80",
    "statue": "#9a9a9a",
    "bench": "#7a5230",
    "kiosk": "#b03060",
    "lamp": "#d8c050",
}


@dataclass
class GenConfig:
    num_scenes: int = 500
    rows: int = 8
    cols: int = 8
    d: int = 32
    min_objects: int = 2
    max_objects: int = 6
    local_rows: int = 4
    local_cols: int = 4
    distractor_similarity: float = 0.2
    targets_per_scene: int = 2
    sentences_per_target: int = 5
    workers_per_sentence: int = 5
    worker_error_rate: float = 0.04
    width: float = 640.0
    height: float = 480.0
    seed: int = 0

    def validate(self) -> None:
        problems = []
        if self.num_scenes < 1:
            problems.append("num_scenes must be >= 1")
        if self.d < 8:
            problems.append("d must be >= 8")
        if self.min_objects < 2:
            problems.append("min_objects must be >= 2 (referring needs distractors)")
        if self.max_objects < self.min_objects:
            problems.append("max_objects < min_objects")
        if not 0.0 <= self.distractor_similarity <= 1.0:
            problems.append("distractor_similarity must be in [0, 1]")
        if self.rows < 1 or self.cols < 1 or self.local_rows < 1 or self.local_cols < 1:
            problems.append("grid dimensions must be positive")
        if self.targets_per_scene < 1 or self.sentences_per_target < 1:
            problems.append("targets and sentences per scene must be positive")
        if problems:
            raise DataError("; ".join(problems))


def _grid_centers(rows: int, cols: int, width: float, height: float) -> np.ndarray:
    xs = (np.arange(cols) + 0.5) * (width / cols)
    ys = (np.arange(rows) + 0.5) * (height / rows)
    gx, gy = np.meshgrid(xs, ys)  # row-major cells
    return np.stack([gx.reshape(-1), gy.reshape(-1)], axis=1)


def _codebook(rng: np.random.Generator, names: Sequence[str], d: int) -> dict[str, np.ndarray]:
    return {name: rng.normal(size=d) / np.sqrt(d) for name in names}


def gen_synthetic(cfg: GenConfig) -> Dataset:
    """Deterministic synthetic dataset for one seed."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    d = cfg.d

    color_code = _codebook(rng, COLORS, d)
    size_code = _codebook(rng, SIZES, d)
    cat_code = _codebook(rng, CATEGORIES, d)
    lm_code = _codebook(rng, LANDMARKS, d)

    scenes: dict[str, Scene] = {}
    objects: dict[str, ObjectRef] = {}
    sentences: dict[str, SentenceRecord] = {}

    for si in range(cfg.num_scenes):
        scene_id = f"s{si:05d}"
        _gen_scene(
            rng, cfg, scene_id, color_code, size_code, cat_code, lm_code, scenes, objects, sentences
        )

    scene_ids = sorted(scenes)
    n = len(scene_ids)
    n_val = max(1, n // 10) if n >= 3 else 0
    n_test = max(1, n // 10) if n >= 3 else 0
    split = DatasetSplit(
        train=scene_ids[: n - n_val - n_test],
        val=scene_ids[n - n_val - n_test : n - n_test],
        test=scene_ids[n - n_test :],
    )
    ds = Dataset(scenes=scenes, objects=objects, sentences=sentences, split=split)
    validate_dataset(ds)
    return ds


def _gen_scene(rng, cfg, scene_id, color_code, size_code, cat_code, lm_code, scenes, objects, sentences):
    d = cfg.d
    k = cfg.rows * cfg.cols
    centers = _grid_centers(cfg.rows, cfg.cols, cfg.width, cfg.height)
    n_obj = int(rng.integers(cfg.min_objects, cfg.max_objects + 1))

    # unique attribute combos first; similarity knob then copies combos
    combos: list[tuple[str, str, str]] = []
    taken = set()
    while len(combos) < n_obj:
        combo = (
            COLORS[rng.integers(len(COLORS))],
            SIZES[rng.integers(len(SIZES))],
            CATEGORIES[rng.integers(len(CATEGORIES))],
        )
        if combo not in taken:
            taken.add(combo)
            combos.append(combo)
    for i in range(1, n_obj):
        if rng.random() < cfg.distractor_similarity:
            j = int(rng.integers(i))
            combos[i] = combos[j]

    boxes = []
    for i in range(n_obj):
        size = combos[i][1]
        if size == "small":
            w = float(rng.uniform(30, 60))
            h = float(rng.uniform(40, 80))
        else:
            w = float(rng.uniform(90, 150))
            h = float(rng.uniform(110, 180))
        x = float(rng.uniform(0, cfg.width - w))
        y = float(rng.uniform(0, cfg.height - h))
        boxes.append((x, y, w, h))

    # landmarks at distinct cells
    n_lm = int(rng.integers(2, 5))
    lm_cells = rng.choice(k, size=min(n_lm, k), replace=False)
    lm_names = [str(n) for n in rng.choice(LANDMARKS, size=len(lm_cells), replace=False)]

    v_global = rng.normal(scale=0.05, size=(d, k))
    for cell, name in zip(lm_cells, lm_names):
        v_global[:, cell] += lm_code[name]

    obj_ids = [f"{scene_id}_o{i}" for i in range(n_obj)]
    feats = []
    for i in range(n_obj):
        color, size, cat = combos[i]
        feat = (
            color_code[color]
            + size_code[size]
            + cat_code[cat]
            + rng.normal(scale=0.05, size=d)
        )
        feats.append(feat)
        cx, cy = boxes[i][0] + boxes[i][2] / 2, boxes[i][1] + boxes[i][3] / 2
        cell = _cell_of_point(cx, cy, cfg.rows, cfg.cols, cfg.width, cfg.height)
        v_global[:, cell] += 0.5 * feat

    saliency = {}
    render_objects = {}
    for i, oid in enumerate(obj_ids):
        color, size, cat = combos[i]
        area = boxes[i][2] * boxes[i][3]
        same_code = sum(1 for j in range(n_obj) if combos[j] == combos[i]) - 1
        saliency[oid] = float(
            area / 400.0 * (1.0 + 0.5 * rng.random()) / (1.0 + 0.6 * same_code)
        )
        render_objects[oid] = _COLOR_HEX[color]

        l = cfg.local_rows * cfg.local_cols
        v_local = np.tile(feats[i][:, None], (1, l)) + rng.normal(scale=0.1, size=(d, l))
        objects[oid] = ObjectRef(
            object_id=oid,
            scene_id=scene_id,
            box=boxes[i],
            category=cat,
            feature=feats[i],
            v_local=v_local,
            local_rows=cfg.local_rows,
            local_cols=cfg.local_cols,
        )

    cell_hex = ["#606060"] * k
    shade = rng.integers(72, 112, size=k)
    for c in range(k):
        g = int(shade[c])
        cell_hex[c] = f"#{g:02x}{g:02x}{g:02x}"
    for cell, name in zip(lm_cells, lm_names):
        cell_hex[int(cell)] = _LANDMARK_HEX[name]

    scenes[scene_id] = Scene(
        scene_id=scene_id,
        width=cfg.width,
        height=cfg.height,
        rows=cfg.rows,
        cols=cfg.cols,
        v_global=v_global,
        render={"cells": cell_hex, "objects": render_objects},
        saliency=saliency,
    )

    # annotated instances: a deterministic random subset of objects
    n_targets = min(cfg.targets_per_scene, n_obj)
    target_idx = sorted(rng.choice(n_obj, size=n_targets, replace=False).tolist())
    lm_positions = centers[lm_cells.astype(int)]
    for ti in target_idx:
        _gen_sentences_for_target(
            rng, cfg, scene_id, ti, obj_ids, combos, boxes, lm_names, lm_positions, sentences
        )


def _cell_of_point(x, y, rows, cols, width, height) -> int:
    cx = min(int(x / width * cols), cols - 1)
    cy = min(int(y / height * rows), rows - 1)
    return cy * cols + cx


def _nearest_landmark(box, lm_names, lm_positions) -> str:
    cx, cy = box[0] + box[2] / 2, box[1] + box[3] / 2
    dists = np.hypot(lm_positions[:, 0] - cx, lm_positions[:, 1] - cy)
    return lm_names[int(np.argmin(dists))]


def _matching_objects(attrs, obj_ids, combos, boxes, lm_names, lm_positions) -> list[str]:
    """Objects consistent with every attribute a sentence mentions."""
    out = []
    for i, oid in enumerate(obj_ids):
        color, size, cat = combos[i]
        if attrs.get("color") is not None and color != attrs["color"]:
            continue
        if attrs.get("size") is not None and size != attrs["size"]:
            continue
        if cat != attrs["category"]:
            continue
        if attrs.get("landmark") is not None:
            if _nearest_landmark(boxes[i], lm_names, lm_positions) != attrs["landmark"]:
                continue
        out.append(oid)
    return out


def _gen_sentences_for_target(
    rng, cfg, scene_id, ti, obj_ids, combos, boxes, lm_names, lm_positions, sentences
):
    color, size, cat = combos[ti]
    lm = _nearest_landmark(boxes[ti], lm_names, lm_positions)
    templates = [
        {"color": color, "category": cat},
        {"size": size, "color": color, "category": cat},
        {"color": color, "category": cat, "landmark": lm},
        {"size": size, "category": cat},
        {"category": cat, "landmark": lm},
        {"size": size, "color": color, "category": cat, "landmark": lm},
    ]
    # always include the two most specific forms, fill up with random others
    pool = [templates[5], templates[2]] + [templates[i] for i in rng.permutation(4)]
    chosen: list[dict] = []
    seen_attrs = set()
    for attrs in pool:
        key = tuple(sorted(attrs.items()))
        if key in seen_attrs:
            continue
        seen_attrs.add(key)
        chosen.append(attrs)
        if len(chosen) == cfg.sentences_per_target:
            break
    while len(chosen) < cfg.sentences_per_target:
        chosen.append(pool[len(chosen) % len(pool)])

    for sj, attrs in enumerate(chosen):
        tokens = ["the"]
        if attrs.get("size"):
            tokens.append(attrs["size"])
        if attrs.get("color"):
            tokens.append(attrs["color"])
        tokens.append(attrs["category"])
        if attrs.get("landmark"):
            tokens += ["near", "the", attrs["landmark"]]

        matching = _matching_objects(attrs, obj_ids, combos, boxes, lm_names, lm_positions)
        target = obj_ids[ti]
        sid = f"{target}_r{sj}"
        responses = []
        for wi in range(cfg.workers_per_sentence):
            if matching and rng.random() >= cfg.worker_error_rate:
                pick = matching[int(rng.integers(len(matching)))]
            elif len(obj_ids) > 0:
                pick = obj_ids[int(rng.integers(len(obj_ids)))]
            else:
                pick = IMPOSSIBLE
            elapsed = (
                0.9
                + 0.15 * len(tokens)
                + 1.1 * max(0, len(matching) - 1)
                + 0.05 * len(obj_ids)
                + float(rng.lognormal(mean=-1.5, sigma=0.6))
            )
            responses.append(
                WorkerResponse(
                    worker_id=f"w{wi}",
                    chosen=pick,
                    correct=pick == target,
                    elapsed=elapsed,
                )
            )
        sentences[sid] = SentenceRecord(
            sentence_id=sid, object_id=target, tokens=tokens, responses=responses
        )
