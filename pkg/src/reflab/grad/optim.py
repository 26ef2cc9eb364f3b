"""First-order optimizers over named parameter tensors."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from . import kernels as K
from .engine import NonFiniteValue, ShapeMismatch, Tensor


class Sgd:
    """Plain gradient descent: p <- p - lr * g."""

    def __init__(self, params: Mapping[str, Tensor], lr: float = 1e-3, seed: int | None = None):
        self.params = dict(params)
        self.lr = lr
        self.seed = seed
        self.step_count = 0

    def step(self, grads: Mapping[Tensor, np.ndarray]) -> None:
        self.step_count += 1
        for name, p in self.params.items():
            g = grads.get(p)
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise NonFiniteValue(f"gradient of {name}")
            if g.shape != p.data.shape:
                raise ShapeMismatch(f"sgd_step({name})", g.shape, p.data.shape)
            p.data -= self.lr * g


class Adam:
    """Bias-corrected Adam (Kingma & Ba) with fused kernel updates."""

    def __init__(
        self,
        params: Mapping[str, Tensor],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        seed: int | None = None,
    ):
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.seed = seed
        self.step_count = 0
        self._m = {name: np.zeros_like(p.data) for name, p in self.params.items()}
        self._v = {name: np.zeros_like(p.data) for name, p in self.params.items()}

    def step(self, grads: Mapping[Tensor, np.ndarray]) -> None:
        self.step_count += 1
        for name, p in self.params.items():
            g = grads.get(p)
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise NonFiniteValue(f"gradient of {name}")
            if g.shape != p.data.shape:
                raise ShapeMismatch(f"adam_step({name})", g.shape, p.data.shape)
            K.adam_update(
                p.data.reshape(-1),
                np.ascontiguousarray(g, dtype=np.float64).reshape(-1),
                self._m[name].reshape(-1),
                self._v[name].reshape(-1),
                self.step_count,
                self.lr,
                self.beta1,
                self.beta2,
                self.eps,
            )

    def state(self) -> dict:
        return {"step": self.step_count, "m": self._m, "v": self._v}
