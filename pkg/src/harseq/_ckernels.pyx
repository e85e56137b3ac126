# cython: language_level=3
"""Compiled dynamic-programming kernels.

Drop-in replacement for ``harseq._pykernels``; same signatures, same tie
rules. Inputs must be float64 arrays.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, INFINITY

cnp.import_array()

NAME = "cython"


cdef inline double _lse2(double a, double b) noexcept nogil:
    if a == -INFINITY:
        return b
    if b == -INFINITY:
        return a
    if a > b:
        return a + log(1.0 + exp(b - a))
    return b + log(1.0 + exp(a - b))


def chain_forward(const double[::1] init, const double[:, ::1] trans, const double[:, ::1] emit):
    cdef Py_ssize_t T = emit.shape[0], C = emit.shape[1]
    cdef Py_ssize_t t, a, b
    cdef double mx, acc, v
    out = np.empty((T, C))
    cdef double[:, ::1] alpha = out
    with nogil:
        for b in range(C):
            alpha[0, b] = init[b] + emit[0, b]
        for t in range(1, T):
            for b in range(C):
                mx = -INFINITY
                for a in range(C):
                    v = alpha[t - 1, a] + trans[a, b]
                    if v > mx:
                        mx = v
                if mx == -INFINITY:
                    alpha[t, b] = -INFINITY
                    continue
                acc = 0.0
                for a in range(C):
                    acc += exp(alpha[t - 1, a] + trans[a, b] - mx)
                alpha[t, b] = mx + log(acc) + emit[t, b]
    return out


def chain_backward(const double[:, ::1] trans, const double[:, ::1] emit):
    cdef Py_ssize_t T = emit.shape[0], C = emit.shape[1]
    cdef Py_ssize_t t, a, b
    cdef double mx, acc, v
    out = np.empty((T, C))
    cdef double[:, ::1] beta = out
    with nogil:
        for a in range(C):
            beta[T - 1, a] = 0.0
        for t in range(T - 2, -1, -1):
            for a in range(C):
                mx = -INFINITY
                for b in range(C):
                    v = trans[a, b] + emit[t + 1, b] + beta[t + 1, b]
                    if v > mx:
                        mx = v
                if mx == -INFINITY:
                    beta[t, a] = -INFINITY
                    continue
                acc = 0.0
                for b in range(C):
                    acc += exp(trans[a, b] + emit[t + 1, b] + beta[t + 1, b] - mx)
                beta[t, a] = mx + log(acc)
    return out


def edge_expectation(const double[:, ::1] alpha, const double[:, ::1] beta,
                     const double[:, ::1] trans, const double[:, ::1] emit, double log_z):
    cdef Py_ssize_t T = emit.shape[0], C = emit.shape[1]
    cdef Py_ssize_t t, a, b
    cdef double base
    out = np.zeros((C, C))
    cdef double[:, ::1] acc = out
    with nogil:
        for t in range(1, T):
            for a in range(C):
                base = alpha[t - 1, a] - log_z
                for b in range(C):
                    acc[a, b] += exp(base + trans[a, b] + emit[t, b] + beta[t, b])
    return out


def chain_viterbi(const double[::1] init, const double[:, ::1] trans, const double[:, ::1] emit):
    cdef Py_ssize_t T = emit.shape[0], C = emit.shape[1]
    cdef Py_ssize_t t, a, b, arg
    cdef double mx, v
    suffix_arr = np.zeros((T, C))
    path_arr = np.empty(T, dtype=np.int64)
    cdef double[:, ::1] suffix = suffix_arr
    cdef cnp.int64_t[::1] path = path_arr
    cdef double score
    with nogil:
        for t in range(T - 2, -1, -1):
            for a in range(C):
                mx = -INFINITY
                for b in range(C):
                    v = trans[a, b] + emit[t + 1, b] + suffix[t + 1, b]
                    if v > mx:
                        mx = v
                suffix[t, a] = mx
        arg = 0
        mx = -INFINITY
        for b in range(C):
            v = init[b] + emit[0, b] + suffix[0, b]
            if v > mx or b == 0:
                mx = v
                arg = b
        path[0] = arg
        score = mx
        for t in range(1, T):
            a = path[t - 1]
            arg = 0
            mx = -INFINITY
            for b in range(C):
                v = trans[a, b] + emit[t, b] + suffix[t, b]
                if v > mx or b == 0:
                    mx = v
                    arg = b
            path[t] = arg
    return path_arr, float(score)


def hsmm_viterbi(const double[::1] log_pi, const double[:, ::1] log_trans,
                 const double[:, ::1] log_dur, const double[:, ::1] emit):
    cdef Py_ssize_t T = emit.shape[0], C = emit.shape[1]
    cdef Py_ssize_t d_max = log_dur.shape[1]
    cdef Py_ssize_t t, s, c, cp, d, dm, src, bestk
    cdef double v, val, best

    cum_arr = np.zeros((T + 1, C))
    cum_arr[1:] = np.cumsum(np.asarray(emit), axis=0)
    best_any_arr = np.full((T + 1, C), -np.inf)
    best_full_arr = np.full((T + 1, C), -np.inf)
    best_len_arr = np.zeros((T + 1, C), dtype=np.int64)
    entry_arr = np.full((T + 1, C), -np.inf)
    entry_src_arr = np.full((T + 1, C), -2, dtype=np.int64)
    path_arr = np.empty(T, dtype=np.int64)

    cdef double[:, ::1] cum = cum_arr
    cdef double[:, ::1] best_any = best_any_arr
    cdef double[:, ::1] best_full = best_full_arr
    cdef cnp.int64_t[:, ::1] best_len = best_len_arr
    cdef double[:, ::1] entry = entry_arr
    cdef cnp.int64_t[:, ::1] entry_src = entry_src_arr
    cdef cnp.int64_t[::1] path = path_arr
    cdef bint full
    cdef double score

    with nogil:
        for c in range(C):
            entry[0, c] = log_pi[c]
            entry_src[0, c] = -3
        for t in range(1, T + 1):
            s = t - 1
            if s > 0:
                for c in range(C):
                    val = -INFINITY
                    src = 0
                    for cp in range(C):
                        if cp == c:
                            continue
                        v = best_any[s, cp] + log_trans[cp, c]
                        if v > val:
                            val = v
                            src = cp
                    if best_full[s, c] > val:
                        entry[s, c] = best_full[s, c]
                        entry_src[s, c] = -1
                    else:
                        entry[s, c] = val
                        entry_src[s, c] = src
            dm = d_max if d_max < t else t
            for c in range(C):
                best = -INFINITY
                bestk = 0
                for d in range(1, dm + 1):
                    s = t - d
                    v = entry[s, c] + log_dur[c, d - 1] + (cum[t, c] - cum[s, c])
                    if v > best:
                        best = v
                        bestk = d - 1
                    if d == d_max:
                        best_full[t, c] = v
                best_any[t, c] = best
                best_len[t, c] = bestk + 1

        c = 0
        score = -INFINITY
        for cp in range(C):
            if best_any[T, cp] > score or cp == 0:
                score = best_any[T, cp]
                c = cp
        t = T
        full = False
        while t > 0:
            if full:
                d = d_max
            else:
                d = best_len[t, c]
            s = t - d
            for cp in range(s, t):
                path[cp] = c
            if s == 0:
                break
            src = entry_src[s, c]
            if src == -1:
                full = True
            else:
                full = False
                c = src
            t = s
    return path_arr, float(score)
