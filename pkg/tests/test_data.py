"""Dataset model: persistence round-trips, integrity checks, generator."""

import numpy as np
import pytest

from reflab.data import (
    IMPOSSIBLE,
    DataError,
    GenConfig,
    gen_synthetic,
    load_dataset,
    save_dataset,
    validate_dataset,
)


def small_cfg(seed=0, **kw):
    base = dict(
        num_scenes=4,
        rows=3,
        cols=3,
        d=8,
        local_rows=2,
        local_cols=2,
        min_objects=2,
        max_objects=4,
        targets_per_scene=2,
        sentences_per_target=3,
        seed=seed,
    )
    base.update(kw)
    return GenConfig(**base)


def datasets_equal(a, b) -> bool:
    if sorted(a.scenes) != sorted(b.scenes):
        return False
    for sid in a.scenes:
        sa, sb = a.scenes[sid], b.scenes[sid]
        if (sa.width, sa.height, sa.rows, sa.cols) != (sb.width, sb.height, sb.rows, sb.cols):
            return False
        if not np.array_equal(sa.v_global, sb.v_global):
            return False
        if sa.render != sb.render or sa.saliency != sb.saliency:
            return False
    if sorted(a.objects) != sorted(b.objects):
        return False
    for oid in a.objects:
        oa, ob = a.objects[oid], b.objects[oid]
        if oa.box != ob.box or oa.category != ob.category:
            return False
        if not (np.array_equal(oa.feature, ob.feature) and np.array_equal(oa.v_local, ob.v_local)):
            return False
    if sorted(a.sentences) != sorted(b.sentences):
        return False
    for sid in a.sentences:
        ra, rb = a.sentences[sid], b.sentences[sid]
        if ra.tokens != rb.tokens or ra.object_id != rb.object_id or ra.rank != rb.rank:
            return False
        if [(w.worker_id, w.chosen, w.correct, w.elapsed) for w in ra.responses] != [
            (w.worker_id, w.chosen, w.correct, w.elapsed) for w in rb.responses
        ]:
            return False
    return (a.split.train, a.split.val, a.split.test) == (b.split.train, b.split.val, b.split.test)


class TestGenerator:
    def test_same_seed_bitwise_identical(self, tmp_path):
        a = gen_synthetic(small_cfg(seed=11))
        b = gen_synthetic(small_cfg(seed=11))
        pa, pb = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        save_dataset(a, pa)
        save_dataset(b, pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_zero_similarity_unique_attribute_codes(self):
        ds = gen_synthetic(small_cfg(seed=3, distractor_similarity=0.0, max_objects=4))
        # unique attribute codes imply unique pooled features up to noise;
        # check the render color + category + box-size bucket combination
        for sid in ds.scenes:
            objs = ds.objects_in_scene(sid)
            combos = [
                (ds.scenes[sid].render["objects"][o.object_id], o.category, o.box[2] > 75)
                for o in objs
            ]
            assert len(set(combos)) == len(combos)

    def test_impossible_config_rejected(self):
        with pytest.raises(DataError):
            gen_synthetic(small_cfg(min_objects=0, max_objects=0))
        with pytest.raises(DataError):
            gen_synthetic(small_cfg(d=4))

    def test_worker_invariants(self):
        ds = gen_synthetic(small_cfg(seed=5))
        for sent in ds.sentences.values():
            for r in sent.responses:
                assert r.elapsed > 0
                if r.chosen == IMPOSSIBLE:
                    assert not r.correct
                else:
                    assert r.correct == (r.chosen == sent.object_id)

    def test_generation_speed_budget(self):
        import time

        t0 = time.time()
        gen_synthetic(GenConfig(num_scenes=500, seed=0))
        assert time.time() - t0 < 10.0


class TestRoundTrip:
    def test_roundtrip_identity_on_random_configs(self, tmp_path):
        rng = np.random.default_rng(0)
        for trial in range(100):
            cfg = small_cfg(
                seed=int(rng.integers(1 << 30)),
                num_scenes=int(rng.integers(1, 4)),
                rows=int(rng.integers(2, 5)),
                cols=int(rng.integers(2, 5)),
                d=int(rng.integers(8, 17)),
                max_objects=int(rng.integers(2, 5)),
                distractor_similarity=float(rng.random()),
            )
            ds = gen_synthetic(cfg)
            path = tmp_path / f"ds{trial}.jsonl"
            save_dataset(ds, path)
            back = load_dataset(path)
            assert datasets_equal(ds, back), f"trial {trial}"

    def test_seventeen_digit_floats(self, tmp_path):
        ds = gen_synthetic(small_cfg(seed=1))
        path = tmp_path / "ds.jsonl"
        save_dataset(ds, path)
        back = load_dataset(path)
        sid = sorted(ds.scenes)[0]
        assert np.array_equal(ds.scenes[sid].v_global, back.scenes[sid].v_global)

    def test_exact_counts_fixture(self, tmp_path):
        lines = []
        mk = lambda rec: __import__("json").dumps(rec)
        for i in range(2):
            lines.append(
                mk(
                    {
                        "kind": "scene",
                        "schema_version": 1,
                        "scene_id": f"s{i}",
                        "width": 10,
                        "height": 10,
                        "rows": 1,
                        "cols": 1,
                        "cells": [[0.0] * 8],
                    }
                )
            )
        boxes = [(0, 0, 4, 4), (5, 5, 4, 4), (2, 2, 3, 3)]
        for j, box in enumerate(boxes):
            lines.append(
                mk(
                    {
                        "kind": "object",
                        "schema_version": 1,
                        "object_id": f"o{j}",
                        "scene_id": f"s{j % 2}",
                        "box": list(box),
                        "category": "person",
                        "feature": [0.1] * 8,
                        "local_rows": 1,
                        "local_cols": 1,
                        "local_cells": [[0.0] * 8],
                    }
                )
            )
        for n in range(5):
            lines.append(
                mk(
                    {
                        "kind": "sentence",
                        "schema_version": 1,
                        "sentence_id": f"r{n}",
                        "object_id": f"o{n % 3}",
                        "tokens": ["the", "person"],
                        "responses": [],
                    }
                )
            )
        lines.append(
            mk({"kind": "split", "schema_version": 1, "train": ["s0"], "val": [], "test": ["s1"]})
        )
        path = tmp_path / "fixture.jsonl"
        path.write_text("\n".join(lines) + "\n")
        ds = load_dataset(path)
        assert (len(ds.scenes), len(ds.objects), len(ds.sentences)) == (2, 3, 5)


class TestIntegrity:
    def _dump_and_patch(self, tmp_path, patch):
        ds = gen_synthetic(small_cfg(seed=2))
        path = tmp_path / "ds.jsonl"
        save_dataset(ds, path)
        text = path.read_text()
        text = patch(text)
        path.write_text(text)
        return path

    def test_sentence_with_missing_object_rejected(self, tmp_path):
        ds = gen_synthetic(small_cfg(seed=2))
        sid = sorted(ds.sentences)[0]
        ds.sentences[sid].object_id = "nope"
        with pytest.raises(DataError) as ei:
            validate_dataset(ds)
        assert sid in str(ei.value) or "nope" in str(ei.value)

    def test_malformed_record_has_line_number(self, tmp_path):
        path = self._dump_and_patch(tmp_path, lambda t: "not json\n" + t)
        with pytest.raises(DataError) as ei:
            load_dataset(path)
        assert "line 1" in str(ei.value)

    def test_wrong_schema_version_rejected(self, tmp_path):
        path = self._dump_and_patch(tmp_path, lambda t: t.replace('"schema_version":1', '"schema_version":99', 1))
        with pytest.raises(DataError) as ei:
            load_dataset(path)
        assert "schema_version" in str(ei.value)

    def test_non_positive_elapsed_rejected(self, tmp_path):
        ds = gen_synthetic(small_cfg(seed=2))
        sent = ds.sentences[sorted(ds.sentences)[0]]
        sent.responses[0].elapsed = 0.0
        with pytest.raises(DataError):
            validate_dataset(ds)

    def test_split_disjointness_enforced(self):
        ds = gen_synthetic(small_cfg(seed=2))
        ds.split.val.append(ds.split.train[0])
        with pytest.raises(DataError) as ei:
            validate_dataset(ds)
        assert "multiple split partitions" in str(ei.value)

    def test_box_outside_image_rejected(self):
        ds = gen_synthetic(small_cfg(seed=2))
        oid = sorted(ds.objects)[0]
        obj = ds.objects[oid]
        obj.box = (obj.box[0], obj.box[1], 1e6, obj.box[3])
        with pytest.raises(DataError):
            validate_dataset(ds)
