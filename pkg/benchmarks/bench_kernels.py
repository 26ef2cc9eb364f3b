#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Runs each hot kernel at decoder-realistic sizes plus one end-to-end
teacher-forced score/backward, and prints per-backend timings.

Usage: python benchmarks/bench_kernels.py [--d 32] [--repeat 2000]
"""

from __future__ import annotations

import argparse
import importlib
import time

import numpy as np


def _bench(fn, repeat):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def kernel_cases(mod, d, rng):
    pre = rng.normal(size=4 * d)
    c_prev = rng.normal(size=d)
    hc, cache = mod.lstm_gates_forward(pre, c_prev)
    cache = np.ascontiguousarray(cache)
    dh, dc = rng.normal(size=d), rng.normal(size=d)
    logits = rng.normal(size=2 * d + 17)
    y = mod.softmax_last(logits)
    dy = rng.normal(size=y.shape)
    p, g = rng.normal(size=4 * d * d), rng.normal(size=4 * d * d)
    m, v = np.zeros_like(p), np.zeros_like(p)
    return {
        "lstm_gates_forward": lambda: mod.lstm_gates_forward(pre, c_prev),
        "lstm_gates_backward": lambda: mod.lstm_gates_backward(cache, c_prev, dh, dc),
        "softmax_last": lambda: mod.softmax_last(logits),
        "softmax_last_backward": lambda: mod.softmax_last_backward(y, dy),
        "log_softmax_last": lambda: mod.log_softmax_last(logits),
        "adam_update": lambda: mod.adam_update(p, g, m, v, 1, 1e-3, 0.9, 0.999, 1e-8),
    }


def end_to_end(d, repeat):
    """Teacher-forced sentence score + backward under each backend."""
    import os
    import subprocess
    import sys

    script = r"""
import time
import numpy as np
from reflab.data import GenConfig, gen_synthetic
from reflab.features import target_parts
from reflab.grad import KERNEL_BACKEND, Tape, backward
from reflab.speaker import Speaker, SpeakerConfig, Vocabulary

d = %d
ds = gen_synthetic(GenConfig(num_scenes=2, d=d, seed=0))
vocab = Vocabulary.from_sentences(s.tokens for s in ds.sentences.values())
scene = next(iter(ds.scenes.values()))
objs = ds.objects_in_scene(scene.scene_id)
parts = target_parts(scene, objs, objs[0], 5)
sp = Speaker(SpeakerConfig(d=d, vocab_size=len(vocab), k=scene.k, l=16), vocab, seed=0)
ids = sp.vocab.encode(next(iter(ds.sentences.values())).tokens)
wrt = list(sp.params.tensors().values())

def once():
    with Tape() as tape:
        loss = sp.logprob_graph(parts, ids)
    backward(loss, tape, wrt=wrt)

once()
t0 = time.perf_counter()
n = %d
for _ in range(n):
    once()
print(f"{KERNEL_BACKEND}\t{(time.perf_counter()-t0)/n*1e3:.3f}")
""" % (d, max(20, repeat // 20))
    out = {}
    for backend in ("python", "cython"):
        env = dict(os.environ, REFLAB_KERNELS=backend)
        try:
            res = subprocess.run(
                [sys.executable, "-c", script], capture_output=True, text=True, env=env, check=True
            )
            name, ms = res.stdout.strip().split("\t")
            out[name] = float(ms)
        except subprocess.CalledProcessError as e:
            out[backend] = None if "ImportError" in e.stderr else e.stderr
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--d", type=int, default=32, help="model width")
    ap.add_argument("--repeat", type=int, default=2000)
    args = ap.parse_args()

    backends = {}
    backends["python"] = importlib.import_module("reflab.grad.kernels._pykern")
    try:
        backends["cython"] = importlib.import_module("reflab.grad.kernels._ckern")
    except ImportError:
        print("compiled extension not built; benchmarking the fallback only")

    rng = np.random.default_rng(0)
    rows = {}
    for name, mod in backends.items():
        for case, fn in kernel_cases(mod, args.d, rng).items():
            rows.setdefault(case, {})[name] = _bench(fn, args.repeat) * 1e6

    width = max(map(len, rows)) + 2
    header = f"{'kernel':<{width}}" + "".join(f"{b:>14}" for b in backends) + (
        f"{'speedup':>10}" if len(backends) == 2 else ""
    )
    print(header)
    for case, timings in rows.items():
        line = f"{case:<{width}}" + "".join(f"{timings[b]:>12.2f}us" for b in backends)
        if len(backends) == 2:
            line += f"{timings['python'] / timings['cython']:>9.2f}x"
        print(line)

    print("\nend-to-end teacher-forced score+backward (one sentence):")
    for name, ms in end_to_end(args.d, args.repeat).items():
        print(f"  {name:<8} {ms if isinstance(ms, float) else ms} ms")


if __name__ == "__main__":
    main()
