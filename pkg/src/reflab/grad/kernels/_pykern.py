"""Pure-numpy kernel implementations.

Fallback twin of the compiled extension in ``_ckern.pyx``; both expose the
same functions with identical semantics so either can back the engine.
"""

from __future__ import annotations

import numpy as np


def lstm_gates_forward(pre, c_prev):
    """Fused LSTM gate block.

    ``pre`` is the (4d,) gate pre-activation laid out [i, f, g, o];
    ``c_prev`` the (d,) previous cell. Returns ``(hc, cache)`` where
    ``hc`` stacks the new hidden and cell states as a (2, d) array and
    ``cache`` is the (5, d) intermediate [i, f, g, o, tanh(c)] needed
    by the backward pass.
    """
    d = c_prev.shape[0]
    i = _sigmoid(pre[:d])
    f = _sigmoid(pre[d : 2 * d])
    g = np.tanh(pre[2 * d : 3 * d])
    o = _sigmoid(pre[3 * d :])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    hc = np.empty((2, d))
    hc[0] = h
    hc[1] = c
    cache = np.empty((5, d))
    cache[0] = i
    cache[1] = f
    cache[2] = g
    cache[3] = o
    cache[4] = tc
    return hc, cache


def lstm_gates_backward(cache, c_prev, dh, dc):
    """Adjoint of ``lstm_gates_forward``: returns ``(dpre, dc_prev)``."""
    i, f, g, o, tc = cache
    dc_total = dc + dh * o * (1.0 - tc * tc)
    d = c_prev.shape[0]
    dpre = np.empty(4 * d)
    dpre[:d] = dc_total * g * i * (1.0 - i)
    dpre[d : 2 * d] = dc_total * c_prev * f * (1.0 - f)
    dpre[2 * d : 3 * d] = dc_total * i * (1.0 - g * g)
    dpre[3 * d :] = dh * tc * o * (1.0 - o)
    dc_prev = dc_total * f
    return dpre, dc_prev


def softmax_last(x):
    """Stable softmax over the last axis of a 1-D or 2-D array."""
    m = x.max(axis=-1, keepdims=True)
    y = np.exp(x - m)
    y /= y.sum(axis=-1, keepdims=True)
    return y


def softmax_last_backward(y, dy):
    s = (y * dy).sum(axis=-1, keepdims=True)
    return y * (dy - s)


def log_softmax_last(x):
    m = x.max(axis=-1, keepdims=True)
    z = x - m
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def log_softmax_last_backward(y, dy):
    return dy - np.exp(y) * dy.sum(axis=-1, keepdims=True)


def adam_update(p, g, m, v, t, lr, beta1, beta2, eps):
    """Bias-corrected Adam step, applied in place to ``p``, ``m``, ``v``."""
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    p -= lr * mhat / (np.sqrt(vhat) + eps)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out
