"""Minimal dense-tensor engine: reverse-mode autodiff plus optimizers."""

from .kernels import BACKEND as KERNEL_BACKEND
from .optim import Adam, Sgd
from .engine import (
    EngineError,
    NonFiniteValue,
    ShapeMismatch,
    Tape,
    Tensor,
    backward,
    grads_of,
    tensor,
)

__all__ = [
    "Adam",
    "EngineError",
    "KERNEL_BACKEND",
    "NonFiniteValue",
    "Sgd",
    "ShapeMismatch",
    "Tape",
    "Tensor",
    "backward",
    "grads_of",
    "tensor",
]
