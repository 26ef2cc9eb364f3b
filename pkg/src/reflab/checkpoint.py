"""Versioned binary checkpoint container.

Layout: magic bytes ``RXL1``, an 8-byte little-endian header length, a JSON
header (metadata plus entry names/shapes in order), then the raw float64
little-endian parameter buffers in header order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Mapping

import numpy as np

from .grad.engine import as_float64
from .reinforcer import Reinforcer, ReinforcerConfig
from .speaker import Speaker, SpeakerConfig, Vocabulary

MAGIC = b"RXL1"


class CheckpointError(Exception):
    pass


def save_checkpoint(path, tensors: Mapping[str, np.ndarray], meta: dict) -> None:
    entries = []
    buffers = []
    for name, value in tensors.items():
        arr = as_float64(value)
        entries.append({"name": name, "shape": list(arr.shape)})
        buffers.append(arr.astype("<f8").tobytes())
    header = json.dumps({"version": 1, "meta": meta, "entries": entries}).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for buf in buffers:
            fh.write(buf)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {raw[:4]!r}")
    (hlen,) = struct.unpack("<Q", raw[4:12])
    header = json.loads(raw[12 : 12 + hlen].decode("utf-8"))
    if header.get("version") != 1:
        raise CheckpointError(f"unsupported checkpoint version {header.get('version')}")
    offset = 12 + hlen
    tensors: dict[str, np.ndarray] = {}
    for entry in header["entries"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        arr = np.frombuffer(raw[offset:end], dtype="<f8").astype(np.float64).reshape(shape)
        tensors[entry["name"]] = arr
        offset = end
    if offset != len(raw):
        raise CheckpointError(f"{path}: trailing bytes after parameter buffers")
    return tensors, header["meta"]


def _load_into(params, tensors: Mapping[str, np.ndarray]) -> None:
    own = params.tensors()
    missing = sorted(set(own) - set(tensors))
    if missing:
        raise CheckpointError(f"checkpoint missing parameters: {missing}")
    for name, t in own.items():
        arr = tensors[name]
        if arr.shape != t.data.shape:
            raise CheckpointError(
                f"parameter {name}: checkpoint shape {arr.shape} != model shape {t.data.shape}"
            )
        t.data = as_float64(arr)


def save_speaker(path, speaker: Speaker, step: int = 0, seed: int | None = None) -> None:
    meta = {
        "kind": "speaker",
        "step": step,
        "seed": seed,
        "config": {
            "d": speaker.cfg.d,
            "vocab_size": speaker.cfg.vocab_size,
            "k": speaker.cfg.k,
            "l": speaker.cfg.l,
            "diff_slots": speaker.cfg.diff_slots,
            "max_len": speaker.cfg.max_len,
            "sigma_init": speaker.cfg.sigma_init,
        },
        "vocab": speaker.vocab.content_tokens(),
    }
    save_checkpoint(path, {n: t.data for n, t in speaker.params.tensors().items()}, meta)


def load_speaker(path) -> tuple[Speaker, dict]:
    tensors, meta = load_checkpoint(path)
    if meta.get("kind") != "speaker":
        raise CheckpointError(f"{path} is not a speaker checkpoint")
    cfg = SpeakerConfig(**meta["config"])
    speaker = Speaker(cfg, Vocabulary(meta["vocab"]), seed=0)
    _load_into(speaker.params, tensors)
    return speaker, meta


def save_reinforcer(path, reinforcer: Reinforcer, step: int = 0, seed: int | None = None) -> None:
    meta = {
        "kind": "reinforcer",
        "step": step,
        "seed": seed,
        "config": {
            "d": reinforcer.cfg.d,
            "vocab_size": reinforcer.cfg.vocab_size,
            "diff_slots": reinforcer.cfg.diff_slots,
            "sigma_init": reinforcer.cfg.sigma_init,
        },
        "vocab": reinforcer.vocab.content_tokens(),
    }
    save_checkpoint(path, {n: t.data for n, t in reinforcer.params.tensors().items()}, meta)


def load_reinforcer(path) -> tuple[Reinforcer, dict]:
    tensors, meta = load_checkpoint(path)
    if meta.get("kind") != "reinforcer":
        raise CheckpointError(f"{path} is not a reinforcer checkpoint")
    cfg = ReinforcerConfig(**meta["config"])
    reinforcer = Reinforcer(cfg, Vocabulary(meta["vocab"]), seed=0)
    _load_into(reinforcer.params, tensors)
    return reinforcer, meta
