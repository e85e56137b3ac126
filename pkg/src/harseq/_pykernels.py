"""Pure-numpy dynamic-programming kernels.

Reference implementation of the hot loops used by the sequence models.
``harseq._ckernels`` implements the same functions in Cython; both must
return identical results up to floating-point summation order.

All score arrays are natural-log potentials. ``emit`` is ``T x C``,
``trans[a, b]`` scores the move from class ``a`` to class ``b``.
"""
import numpy as np

NAME = "python"


def _lse_rows(m):
    """log-sum-exp over the last axis, -inf safe."""
    mx = np.max(m, axis=-1)
    safe = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(m - safe[..., None]), axis=-1)) + safe
    return out


def chain_forward(init, trans, emit):
    T, C = emit.shape
    alpha = np.empty((T, C))
    alpha[0] = init + emit[0]
    for t in range(1, T):
        alpha[t] = _lse_rows(alpha[t - 1][None, :] + trans.T) + emit[t]
    return alpha


def chain_backward(trans, emit):
    T, C = emit.shape
    beta = np.empty((T, C))
    beta[T - 1] = 0.0
    for t in range(T - 2, -1, -1):
        beta[t] = _lse_rows(trans + (emit[t + 1] + beta[t + 1])[None, :])
    return beta


def edge_expectation(alpha, beta, trans, emit, log_z):
    """Sum over positions of pairwise marginals p(y[t-1]=a, y[t]=b)."""
    T, C = emit.shape
    if T < 2:
        return np.zeros((C, C))
    right = emit[1:] + beta[1:]
    logp = alpha[:-1, :, None] + trans[None, :, :] + right[:, None, :] - log_z
    return np.exp(logp).sum(axis=0)


def chain_viterbi(init, trans, emit):
    """Best label path; exact ties go to the lexicographically smallest path.

    Suffix maxima are computed first so the path can be read off left to
    right, taking the smallest class that still reaches the optimum.
    """
    T, C = emit.shape
    best_suffix = np.zeros((T, C))
    for t in range(T - 2, -1, -1):
        best_suffix[t] = np.max(trans + (emit[t + 1] + best_suffix[t + 1])[None, :], axis=1)
    path = np.empty(T, dtype=np.int64)
    first = init + emit[0] + best_suffix[0]
    path[0] = int(np.argmax(first))
    score = float(first[path[0]])
    for t in range(1, T):
        cand = trans[path[t - 1]] + emit[t] + best_suffix[t]
        path[t] = int(np.argmax(cand))
    return path, score


def hsmm_viterbi(log_pi, log_trans, log_dur, emit):
    """Explicit-duration MAP segmentation.

    Segments have lengths 1..d_max. A segment may be followed by another of
    the same class only when it has length exactly d_max (continuation of a
    long run, no transition score); otherwise classes must change and pay
    ``log_trans``. Returns the per-position labels and the best score.
    """
    T, C = emit.shape
    d_max = log_dur.shape[1]
    cum = np.zeros((T + 1, C))
    np.cumsum(emit, axis=0, out=cum[1:])

    neg = -np.inf
    best_any = np.full((T + 1, C), neg)     # best prefix ending at t with class c
    best_full = np.full((T + 1, C), neg)    # ... and a last segment of length d_max
    best_len = np.zeros((T + 1, C), dtype=np.int64)
    entry = np.full((T + 1, C), neg)        # best score for a segment of class c starting at s
    entry_src = np.full((T + 1, C), -2, dtype=np.int64)  # -1 continuation, >=0 previous class
    entry[0] = log_pi
    entry_src[0] = -3

    cls = np.arange(C)
    for t in range(1, T + 1):
        s = t - 1
        if s > 0:
            # switching into c from c' != c
            cand = best_any[s][:, None] + log_trans  # [c', c]
            cand[cls, cls] = neg
            src = np.argmax(cand, axis=0)
            val = cand[src, cls]
            cont = best_full[s]
            use_cont = cont > val
            entry[s] = np.where(use_cont, cont, val)
            entry_src[s] = np.where(use_cont, -1, src)
        dmax_t = min(d_max, t)
        starts = t - np.arange(1, dmax_t + 1)                 # d = 1..dmax_t
        seg = entry[starts] + log_dur[:, :dmax_t].T + (cum[t] - cum[starts])
        k = np.argmax(seg, axis=0)
        best_any[t] = seg[k, cls]
        best_len[t] = k + 1
        if t >= d_max:
            best_full[t] = seg[d_max - 1]

    path = np.empty(T, dtype=np.int64)
    c = int(np.argmax(best_any[T]))
    score = float(best_any[T, c])
    t = T
    full = False
    while t > 0:
        d = d_max if full else int(best_len[t, c])
        s = t - d
        path[s:t] = c
        if s == 0:
            break
        src = int(entry_src[s, c])
        if src == -1:
            full = True
        else:
            full = False
            c = src
        t = s
    return path, score
