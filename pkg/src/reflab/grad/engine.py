"""Dense float64 tensors with a dynamic reverse-mode tape.

Every model in the package is built from the primitives here: values are
C-contiguous float64 numpy buffers, operations execute eagerly and, when a
``Tape`` is active, record an adjoint closure. ``backward`` replays the tape
in reverse to produce a gradient map. Broadcasting is deliberately limited
to scalar/row/column patterns; anything fancier raises ``ShapeMismatch``.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import kernels as K


class EngineError(Exception):
    """Base class for tensor-engine failures."""


class ShapeMismatch(EngineError):
    def __init__(self, primitive: str, *shapes):
        self.primitive = primitive
        self.shapes = shapes
        super().__init__(f"{primitive}: incompatible shapes {' vs '.join(map(str, shapes))}")


class NonFiniteValue(EngineError):
    def __init__(self, where: str):
        self.where = where
        super().__init__(f"non-finite value in {where}")


class Tensor:
    """Immutable-by-convention float64 array; hashed by identity."""

    __slots__ = ("data", "name")

    def __init__(self, data: np.ndarray, name: str | None = None):
        self.data = data
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data.reshape(()))

    def __repr__(self) -> str:
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.data.shape})"

    def __add__(self, other):
        return add(self, _as_tensor(other))

    def __radd__(self, other):
        return add(_as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, _as_tensor(other))

    def __rsub__(self, other):
        return sub(_as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, _as_tensor(other))

    def __rmul__(self, other):
        return mul(_as_tensor(other), self)

    def __truediv__(self, other):
        return div(self, _as_tensor(other))

    def __rtruediv__(self, other):
        return div(_as_tensor(other), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def as_float64(data) -> np.ndarray:
    """Contiguous float64 view/copy that keeps 0-d shapes intact
    (np.ascontiguousarray would promote scalars to shape (1,))."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim and not arr.flags["C_CONTIGUOUS"]:
        arr = np.ascontiguousarray(arr)
    return arr


def tensor(data, name: str | None = None) -> Tensor:
    """Wrap array-like data as an engine tensor (validated, float64)."""
    arr = as_float64(data)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"tensor({name or 'unnamed'})")
    return Tensor(arr, name)


_ACTIVE: list["Tape"] = []

# An adjoint closure receives the output gradient and an accumulator
# ``acc(tensor, grad)``; it must never mutate gradient arrays in place.
_Adjoint = Callable[[np.ndarray, Callable[[Tensor, np.ndarray], None]], None]


class Tape:
    """Ordered record of primitive applications for one backward pass."""

    __slots__ = ("_nodes", "_out_ids")

    def __init__(self):
        self._nodes: list[tuple[Tensor, _Adjoint]] = []
        self._out_ids: set[int] = set()

    def __enter__(self) -> "Tape":
        _ACTIVE.append(self)
        return self

    def __exit__(self, *exc):
        _ACTIVE.pop()
        return False

    def __len__(self) -> int:
        return len(self._nodes)

    def owns(self, t: Tensor) -> bool:
        return id(t) in self._out_ids

    def _record(self, out: Tensor, bwd: _Adjoint) -> None:
        self._nodes.append((out, bwd))
        self._out_ids.add(id(out))


def backward(root: Tensor, tape: Tape, wrt: Iterable[Tensor] | None = None):
    """Gradients of a scalar ``root`` w.r.t. every tensor on the tape.

    Returns a dict keyed by tensor identity. With ``wrt``, the result is
    restricted to those tensors, zero-filled for non-participants.
    """
    if root.data.size != 1:
        raise EngineError(f"backward root must be scalar, got shape {root.data.shape}")
    if not tape.owns(root):
        raise EngineError("backward root was not produced on this tape")

    grads: dict[Tensor, np.ndarray] = {root: np.ones_like(root.data)}

    def acc(t: Tensor, g: np.ndarray) -> None:
        cur = grads.get(t)
        grads[t] = g if cur is None else cur + g

    for out, bwd in reversed(tape._nodes):
        g = grads.get(out)
        if g is not None:
            bwd(g, acc)

    if wrt is not None:
        return {t: grads.get(t, np.zeros_like(t.data)) for t in wrt}
    return grads


def _as_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return tensor(x)


def _emit(name: str, data: np.ndarray, bwd: _Adjoint | None) -> Tensor:
    arr = as_float64(data)
    if not np.isfinite(arr).all():
        raise NonFiniteValue(name)
    out = Tensor(arr)
    if _ACTIVE and bwd is not None:
        _ACTIVE[-1]._record(out, bwd)
    return out


def _check_broadcast(name: str, a: Tensor, b: Tensor) -> None:
    try:
        res = np.broadcast_shapes(a.data.shape, b.data.shape)
    except ValueError:
        raise ShapeMismatch(name, a.data.shape, b.data.shape) from None
    # one side must keep its shape: permits scalar/row/column broadcast only
    if res != a.data.shape and res != b.data.shape:
        raise ShapeMismatch(name, a.data.shape, b.data.shape)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, s in enumerate(shape):
        if s == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise arithmetic


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast("add", a, b)

    def bwd(g, acc):
        acc(a, _unbroadcast(g, a.data.shape))
        acc(b, _unbroadcast(g, b.data.shape))

    return _emit("add", a.data + b.data, bwd)


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast("sub", a, b)

    def bwd(g, acc):
        acc(a, _unbroadcast(g, a.data.shape))
        acc(b, _unbroadcast(-g, b.data.shape))

    return _emit("sub", a.data - b.data, bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast("mul", a, b)

    def bwd(g, acc):
        acc(a, _unbroadcast(g * b.data, a.data.shape))
        acc(b, _unbroadcast(g * a.data, b.data.shape))

    return _emit("mul", a.data * b.data, bwd)


def div(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast("div", a, b)

    def bwd(g, acc):
        acc(a, _unbroadcast(g / b.data, a.data.shape))
        acc(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    with np.errstate(divide="ignore", invalid="ignore"):
        out = a.data / b.data
    return _emit("div", out, bwd)


def neg(a: Tensor) -> Tensor:
    def bwd(g, acc):
        acc(a, -g)

    return _emit("neg", -a.data, bwd)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    sa, sb = a.data.shape, b.data.shape
    if not (1 <= len(sa) <= 2 and 1 <= len(sb) <= 2) or sa[-1] != sb[0]:
        raise ShapeMismatch("matmul", sa, sb)

    def bwd(g, acc):
        if len(sa) == 2 and len(sb) == 2:
            acc(a, g @ b.data.T)
            acc(b, a.data.T @ g)
        elif len(sa) == 2:  # (m,n) @ (n,) -> (m,)
            acc(a, np.outer(g, b.data))
            acc(b, a.data.T @ g)
        elif len(sb) == 2:  # (n,) @ (n,p) -> (p,)
            acc(a, b.data @ g)
            acc(b, np.outer(a.data, g))
        else:  # (n,) @ (n,) -> ()
            acc(a, g * b.data)
            acc(b, g * a.data)

    return _emit("matmul", a.data @ b.data, bwd)


# ---------------------------------------------------------------------------
# nonlinearities


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)

    def bwd(g, acc):
        acc(a, g * out * (1.0 - out))

    return _emit("sigmoid", out, bwd)


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)

    def bwd(g, acc):
        acc(a, g * (1.0 - out * out))

    return _emit("tanh", out, bwd)


def exp(a: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        out = np.exp(a.data)

    def bwd(g, acc):
        acc(a, g * out)

    return _emit("exp", out, bwd)


def log(a: Tensor) -> Tensor:
    def bwd(g, acc):
        acc(a, g / a.data)

    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(a.data)
    return _emit("log", out, bwd)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def bwd(g, acc):
        acc(a, g * mask)

    return _emit("relu", np.where(mask, a.data, 0.0), bwd)


def softplus(a: Tensor) -> Tensor:
    def bwd(g, acc):
        x = a.data
        s = np.empty_like(x)
        pos = x >= 0
        s[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        s[~pos] = ex / (1.0 + ex)
        acc(a, g * s)

    return _emit("softplus", np.logaddexp(0.0, a.data), bwd)


def softmax(a: Tensor) -> Tensor:
    """Softmax over the last axis (max-subtracted)."""
    out = K.softmax_last(a.data)

    def bwd(g, acc):
        acc(a, K.softmax_last_backward(out, g))

    return _emit("softmax", out, bwd)


def log_softmax(a: Tensor) -> Tensor:
    out = K.log_softmax_last(a.data)

    def bwd(g, acc):
        acc(a, K.log_softmax_last_backward(out, g))

    return _emit("log_softmax", out, bwd)


def softmax_biased(a: Tensor, log_bias: np.ndarray) -> Tensor:
    """softmax(a + log_bias) for a constant bias that may contain -inf.

    -inf slots receive exactly zero mass; gradient flows to ``a`` only.
    """
    if a.data.shape != log_bias.shape:
        raise ShapeMismatch("softmax_biased", a.data.shape, log_bias.shape)
    z = a.data + log_bias
    m = z.max()
    if not np.isfinite(m):
        raise NonFiniteValue("softmax_biased (no finite logit)")
    y = np.exp(z - m)
    out = y / y.sum()

    def bwd(g, acc):
        acc(a, K.softmax_last_backward(out, g))

    return _emit("softmax_biased", out, bwd)


# ---------------------------------------------------------------------------
# shape & structure


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    orig = a.data.shape

    def bwd(g, acc):
        acc(a, g.reshape(orig))

    return _emit("reshape", a.data.reshape(shape), bwd)


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not parts:
        raise EngineError("concat of zero tensors")
    datas = [p.data for p in parts]
    base = datas[0].shape
    for d in datas[1:]:
        if len(d.shape) != len(base) or any(
            d.shape[i] != base[i] for i in range(len(base)) if i != axis
        ):
            raise ShapeMismatch("concat", *[d.shape for d in datas])
    sizes = [d.shape[axis] for d in datas]
    offsets = np.cumsum([0] + sizes)

    def bwd(g, acc):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(lo, hi)
            acc(p, g[tuple(idx)])

    return _emit("concat", np.concatenate(datas, axis=axis), bwd)


def stack_cols(parts: Sequence[Tensor]) -> Tensor:
    """Stack 1-D tensors of equal length as the columns of a matrix."""
    n = parts[0].data.shape
    for p in parts:
        if p.data.shape != n:
            raise ShapeMismatch("stack_cols", *[p.data.shape for p in parts])

    def bwd(g, acc):
        for j, p in enumerate(parts):
            acc(p, g[:, j])

    return _emit("stack_cols", np.stack([p.data for p in parts], axis=1), bwd)


def slice_axis(a: Tensor, axis: int, start: int, stop: int) -> Tensor:
    idx = [slice(None)] * a.data.ndim
    idx[axis] = slice(start, stop)
    idx = tuple(idx)

    def bwd(g, acc):
        full = np.zeros_like(a.data)
        full[idx] = g
        acc(a, full)

    return _emit("slice_axis", a.data[idx].copy(), bwd)


def row(a: Tensor, i: int) -> Tensor:
    """Row ``i`` of a matrix as a 1-D tensor."""
    if a.data.ndim != 2:
        raise ShapeMismatch("row", a.data.shape)

    def bwd(g, acc):
        full = np.zeros_like(a.data)
        full[i] = g
        acc(a, full)

    return _emit("row", a.data[i].copy(), bwd)


def pick(a: Tensor, i: int) -> Tensor:
    """Scalar element ``i`` of a 1-D tensor."""
    if a.data.ndim != 1:
        raise ShapeMismatch("pick", a.data.shape)

    def bwd(g, acc):
        full = np.zeros_like(a.data)
        full[i] = g
        acc(a, full)

    return _emit("pick", np.asarray(a.data[i]), bwd)


def embedding(table: Tensor, ids) -> Tensor:
    """Rows of an embedding table: int -> (d,), sequence -> (len, d)."""
    if table.data.ndim != 2:
        raise ShapeMismatch("embedding", table.data.shape)
    if isinstance(ids, (int, np.integer)):
        i = int(ids)

        def bwd_one(g, acc):
            full = np.zeros_like(table.data)
            full[i] = g
            acc(table, full)

        return _emit("embedding", table.data[i].copy(), bwd_one)

    idx = np.asarray(ids, dtype=np.intp)

    def bwd(g, acc):
        full = np.zeros_like(table.data)
        np.add.at(full, idx, g)
        acc(table, full)

    return _emit("embedding", table.data[idx], bwd)


# ---------------------------------------------------------------------------
# reductions


def total(a: Tensor) -> Tensor:
    """Sum of all elements (scalar)."""
    shape = a.data.shape

    def bwd(g, acc):
        acc(a, np.broadcast_to(g, shape))

    return _emit("sum", np.asarray(a.data.sum()), bwd)


def mean(a: Tensor) -> Tensor:
    shape = a.data.shape
    n = a.data.size

    def bwd(g, acc):
        acc(a, np.broadcast_to(g / n, shape))

    return _emit("mean", np.asarray(a.data.mean()), bwd)


def add_n(parts: Sequence[Tensor]) -> Tensor:
    if not parts:
        raise EngineError("add_n of zero tensors")
    base = parts[0].data.shape
    for p in parts:
        if p.data.shape != base:
            raise ShapeMismatch("add_n", *[p.data.shape for p in parts])
    out = parts[0].data.copy()
    for p in parts[1:]:
        out += p.data

    def bwd(g, acc):
        for p in parts:
            acc(p, g)

    return _emit("add_n", out, bwd)


# ---------------------------------------------------------------------------
# fused recurrent kernel


def lstm_gates(pre: Tensor, c_prev: Tensor) -> Tensor:
    """Fused LSTM gate block: (4d,) pre-activation + (d,) cell -> (2,d) [h; c]."""
    d = c_prev.data.shape[0]
    if pre.data.shape != (4 * d,):
        raise ShapeMismatch("lstm_gates", pre.data.shape, c_prev.data.shape)
    hc, cache = K.lstm_gates_forward(pre.data, c_prev.data)

    def bwd(g, acc):
        dpre, dc_prev = K.lstm_gates_backward(cache, c_prev.data, g[0], g[1])
        acc(pre, dpre)
        acc(c_prev, dc_prev)

    return _emit("lstm_gates", hc, bwd)


def grads_of(grads: Mapping[Tensor, np.ndarray], t: Tensor) -> np.ndarray:
    """Gradient buffer for ``t``, zero-filled when it did not participate."""
    g = grads.get(t)
    return np.zeros_like(t.data) if g is None else g
