"""Shared test utilities: finite-difference oracle and gradient comparison."""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from reflab.grad import Tensor


def finite_diff(
    f: Callable[[], float],
    params: Mapping[str, Tensor],
    step: float = 1e-5,
) -> dict[str, np.ndarray]:
    """Central finite differences of the scalar ``f()`` w.r.t. each parameter.

    ``f`` must be a pure function of the current parameter values (evaluated
    without a tape); parameters are perturbed in place and restored.
    """
    out = {}
    for name, p in params.items():
        g = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            fp = f()
            flat[i] = orig - step
            fm = f()
            flat[i] = orig
            gflat[i] = (fp - fm) / (2.0 * step)
        out[name] = g
    return out


def assert_grads_close(
    analytic: Mapping[str, np.ndarray],
    numeric: Mapping[str, np.ndarray],
    rtol: float = 1e-4,
    atol: float = 1e-6,
) -> None:
    """Elementwise |a - n| <= atol + rtol * max(|a|, |n|), per parameter."""
    assert set(analytic) == set(numeric)
    for name in analytic:
        a = np.asarray(analytic[name])
        n = np.asarray(numeric[name])
        assert a.shape == n.shape, f"{name}: shape {a.shape} vs {n.shape}"
        err = np.abs(a - n) - (atol + rtol * np.maximum(np.abs(a), np.abs(n)))
        worst = float(err.max()) if err.size else 0.0
        assert worst <= 0.0, (
            f"gradient mismatch for {name}: worst excess {worst:.3e}\n"
            f"analytic {a.reshape(-1)[:8]}\nnumeric  {n.reshape(-1)[:8]}"
        )
