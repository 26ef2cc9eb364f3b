"""Shared fixtures: a hand-built width-8 / vocab-12 / 2-scene micro world."""

from dataclasses import dataclass

import numpy as np
import pytest

from reflab.data import Dataset, DatasetSplit, ObjectRef, Scene
from reflab.features import TargetParts, target_parts
from reflab.reinforcer import Reinforcer, ReinforcerConfig
from reflab.speaker import Speaker, SpeakerConfig, Vocabulary

MICRO_WORDS = ["red", "blue", "big", "small", "dog", "person", "tree", "near"]


@dataclass
class MicroWorld:
    ds: Dataset
    vocab: Vocabulary
    speaker: Speaker
    reinforcer: Reinforcer
    parts: dict[str, TargetParts]  # object_id -> parts

    def any_parts(self) -> TargetParts:
        return self.parts["s0_o0"]


def _scene(rng, sid, n_obj, d=8):
    scene = Scene(
        scene_id=sid,
        width=100.0,
        height=100.0,
        rows=2,
        cols=2,
        v_global=rng.normal(scale=0.5, size=(d, 4)),
    )
    objs = {}
    for i in range(n_obj):
        w, h = rng.uniform(15, 35, size=2)
        x = rng.uniform(0, 100 - w)
        y = rng.uniform(0, 100 - h)
        oid = f"{sid}_o{i}"
        objs[oid] = ObjectRef(
            object_id=oid,
            scene_id=sid,
            box=(float(x), float(y), float(w), float(h)),
            category="person",
            feature=rng.normal(scale=0.5, size=d),
            v_local=rng.normal(scale=0.5, size=(d, 4)),
            local_rows=2,
            local_cols=2,
        )
    return scene, objs


def make_micro(seed: int = 0) -> MicroWorld:
    rng = np.random.default_rng(seed)
    s0, o0 = _scene(rng, "s0", 3)
    s1, o1 = _scene(rng, "s1", 2)
    ds = Dataset(
        scenes={"s0": s0, "s1": s1},
        objects={**o0, **o1},
        sentences={},
        split=DatasetSplit(train=["s0"], val=[], test=["s1"]),
    )
    vocab = Vocabulary(MICRO_WORDS)
    assert len(vocab) == 12
    cfg = SpeakerConfig(d=8, vocab_size=12, k=4, l=4, diff_slots=2, max_len=4)
    speaker = Speaker(cfg, vocab, seed=seed)
    rcfg = ReinforcerConfig(d=8, vocab_size=12, diff_slots=2)
    reinforcer = Reinforcer(rcfg, vocab, seed=seed + 1)
    parts = {}
    for sid, objs in (("s0", o0), ("s1", o1)):
        scene = ds.scenes[sid]
        all_objs = list(objs.values())
        for oid, obj in objs.items():
            parts[oid] = target_parts(scene, all_objs, obj, slots=2)
    return MicroWorld(ds=ds, vocab=vocab, speaker=speaker, reinforcer=reinforcer, parts=parts)


@pytest.fixture
def micro() -> MicroWorld:
    return make_micro(seed=0)
