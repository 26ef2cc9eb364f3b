# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel twins of ``_pykern``.

Fuses the per-step elementwise chains (LSTM gates, softmax rows, Adam)
into single C loops; at desk scale these chains, not BLAS, dominate the
training step.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt, tanh

cnp.import_array()


cdef inline double _sig(double x) nogil:
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    cdef double e = exp(x)
    return e / (1.0 + e)


def lstm_gates_forward(double[::1] pre, double[::1] c_prev):
    cdef Py_ssize_t d = c_prev.shape[0]
    cdef cnp.ndarray[double, ndim=2] hc = np.empty((2, d))
    cdef cnp.ndarray[double, ndim=2] cache = np.empty((5, d))
    cdef double[:, ::1] hcv = hc
    cdef double[:, ::1] cav = cache
    cdef Py_ssize_t j
    cdef double i, f, g, o, c, tc
    for j in range(d):
        i = _sig(pre[j])
        f = _sig(pre[d + j])
        g = tanh(pre[2 * d + j])
        o = _sig(pre[3 * d + j])
        c = f * c_prev[j] + i * g
        tc = tanh(c)
        hcv[0, j] = o * tc
        hcv[1, j] = c
        cav[0, j] = i
        cav[1, j] = f
        cav[2, j] = g
        cav[3, j] = o
        cav[4, j] = tc
    return hc, cache


def lstm_gates_backward(double[:, ::1] cache, double[::1] c_prev, dh_arr, dc_arr):
    cdef double[::1] dh = np.ascontiguousarray(dh_arr)
    cdef double[::1] dc = np.ascontiguousarray(dc_arr)
    cdef Py_ssize_t d = c_prev.shape[0]
    cdef cnp.ndarray[double, ndim=1] dpre = np.empty(4 * d)
    cdef cnp.ndarray[double, ndim=1] dc_prev = np.empty(d)
    cdef double[::1] dpv = dpre
    cdef double[::1] dcv = dc_prev
    cdef Py_ssize_t j
    cdef double i, f, g, o, tc, dct
    for j in range(d):
        i = cache[0, j]
        f = cache[1, j]
        g = cache[2, j]
        o = cache[3, j]
        tc = cache[4, j]
        dct = dc[j] + dh[j] * o * (1.0 - tc * tc)
        dpv[j] = dct * g * i * (1.0 - i)
        dpv[d + j] = dct * c_prev[j] * f * (1.0 - f)
        dpv[2 * d + j] = dct * i * (1.0 - g * g)
        dpv[3 * d + j] = dh[j] * tc * o * (1.0 - o)
        dcv[j] = dct * f
    return dpre, dc_prev


def softmax_last(x):
    x = np.ascontiguousarray(x)
    if x.ndim == 1:
        return _softmax_rows(x.reshape(1, -1))[0]
    return _softmax_rows(x)


def softmax_last_backward(y, dy):
    y = np.ascontiguousarray(y)
    dy = np.ascontiguousarray(dy)
    if y.ndim == 1:
        return _softmax_bwd_rows(y.reshape(1, -1), dy.reshape(1, -1))[0]
    return _softmax_bwd_rows(y, dy)


def log_softmax_last(x):
    x = np.ascontiguousarray(x)
    if x.ndim == 1:
        return _log_softmax_rows(x.reshape(1, -1))[0]
    return _log_softmax_rows(x)


def log_softmax_last_backward(y, dy):
    y = np.ascontiguousarray(y)
    dy = np.ascontiguousarray(dy)
    if y.ndim == 1:
        return _log_softmax_bwd_rows(y.reshape(1, -1), dy.reshape(1, -1))[0]
    return _log_softmax_bwd_rows(y, dy)


cdef _softmax_rows(double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((n, m))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t r, j
    cdef double mx, s
    for r in range(n):
        mx = x[r, 0]
        for j in range(1, m):
            if x[r, j] > mx:
                mx = x[r, j]
        s = 0.0
        for j in range(m):
            o[r, j] = exp(x[r, j] - mx)
            s += o[r, j]
        for j in range(m):
            o[r, j] /= s
    return out


cdef _softmax_bwd_rows(double[:, ::1] y, double[:, ::1] dy):
    cdef Py_ssize_t n = y.shape[0], m = y.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((n, m))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t r, j
    cdef double s
    for r in range(n):
        s = 0.0
        for j in range(m):
            s += y[r, j] * dy[r, j]
        for j in range(m):
            o[r, j] = y[r, j] * (dy[r, j] - s)
    return out


cdef _log_softmax_rows(double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((n, m))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t r, j
    cdef double mx, s
    for r in range(n):
        mx = x[r, 0]
        for j in range(1, m):
            if x[r, j] > mx:
                mx = x[r, j]
        s = 0.0
        for j in range(m):
            s += exp(x[r, j] - mx)
        s = log(s)
        for j in range(m):
            o[r, j] = x[r, j] - mx - s
    return out


cdef _log_softmax_bwd_rows(double[:, ::1] y, double[:, ::1] dy):
    cdef Py_ssize_t n = y.shape[0], m = y.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((n, m))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t r, j
    cdef double s
    for r in range(n):
        s = 0.0
        for j in range(m):
            s += dy[r, j]
        for j in range(m):
            o[r, j] = dy[r, j] - exp(y[r, j]) * s
    return out


def adam_update(double[::1] p, double[::1] g, double[::1] m, double[::1] v,
                long t, double lr, double beta1, double beta2, double eps):
    cdef Py_ssize_t n = p.shape[0]
    cdef double bc1 = 1.0 - beta1**t
    cdef double bc2 = 1.0 - beta2**t
    cdef Py_ssize_t j
    cdef double mhat, vhat
    for j in range(n):
        m[j] = beta1 * m[j] + (1.0 - beta1) * g[j]
        v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j]
        mhat = m[j] / bc1
        vhat = v[j] / bc2
        p[j] -= lr * mhat / (sqrt(vhat) + eps)
