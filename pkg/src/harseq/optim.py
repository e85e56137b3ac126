"""Limited-memory BFGS with a strong-Wolfe line search.

The objective is a callable returning ``(value, gradient)``. The search
direction comes from the usual two-loop recursion over the most recent
curvature pairs, scaled by ``s'y / y'y`` of the newest pair. Step lengths
are found by bracketing and cubic-interpolation zoom until both Wolfe
conditions hold.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

# a pair is stored only if s'y > CURVATURE_EPS * y'y (scale-free positivity test)
CURVATURE_EPS = 1e-12


class LineSearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class LbfgsOptions:
    memory: int = 10
    max_iter: int = 200
    grad_tol: float = 1e-5
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    max_line_search_steps: int = 40
    check_wolfe: bool = False  # assert both conditions on every accepted step

    def __post_init__(self):
        if not 0 < self.wolfe_c1 < self.wolfe_c2 < 1:
            raise ValueError("need 0 < wolfe_c1 < wolfe_c2 < 1")
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        if self.max_iter < 0 or self.max_line_search_steps < 1:
            raise ValueError("iteration limits must be positive")


@dataclass
class LbfgsResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    iterations: int
    evaluations: int
    reason: str  # "converged" | "max_iter" | "line_search_failed"
    history: list = field(default_factory=list)  # objective after each accepted step

    @property
    def grad_max_norm(self) -> float:
        return float(np.max(np.abs(self.grad))) if self.grad.size else 0.0

    @property
    def converged(self) -> bool:
        return self.reason == "converged"


def _cubic_min(a, fa, ga, b, fb, gb, lo, hi):
    """Minimiser of the cubic through (a, fa, ga), (b, fb, gb), clipped to [lo, hi]."""
    d1 = ga + gb - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - ga * gb
    if disc >= 0.0:
        d2 = math.copysign(math.sqrt(disc), b - a)
        denom = gb - ga + 2.0 * d2
        if denom != 0.0:
            t = b - (b - a) * (gb + d2 - d1) / denom
            if math.isfinite(t):
                return min(max(t, lo), hi)
    return 0.5 * (lo + hi)


class _Line:
    """phi(alpha) = f(x + alpha d) with evaluation bookkeeping."""

    def __init__(self, fun, x, d):
        self.fun, self.x, self.d = fun, x, d
        self.evals = 0
        self.best = None  # (f, alpha, g) of the lowest value seen

    def __call__(self, alpha):
        self.evals += 1
        f, g = self.fun(self.x + alpha * self.d)
        f = float(f)
        g = np.asarray(g, dtype=np.float64)
        if math.isfinite(f) and (self.best is None or f < self.best[0]):
            self.best = (f, alpha, g)
        return f, g, float(g @ self.d)


def strong_wolfe(fun, x, f0, g0, d, alpha0, c1=1e-4, c2=0.9, max_steps=40):
    """Return ``(alpha, f, g, evals)`` meeting the strong Wolfe conditions.

    Raises :class:`LineSearchError` (carrying the best point seen in
    ``.best`` and the evaluation count in ``.evals``) when no acceptable
    step is found within ``max_steps`` evaluations.
    """
    phi = _Line(fun, x, d)
    dg0 = float(g0 @ d)
    if not dg0 < 0:
        raise LineSearchError("not a descent direction")

    def fail(msg):
        err = LineSearchError(msg)
        err.best, err.evals = phi.best, phi.evals
        return err

    def zoom(lo, hi):
        # lo/hi are (alpha, f, dg); lo always satisfies sufficient decrease
        while phi.evals < max_steps:
            a_lo, f_lo, dg_lo = lo[:3]
            a_hi, f_hi, dg_hi = hi[:3]
            left, right = min(a_lo, a_hi), max(a_lo, a_hi)
            width = right - left
            if width <= 1e-16 * max(1.0, right):
                break
            a = _cubic_min(a_lo, f_lo, dg_lo, a_hi, f_hi, dg_hi,
                           left + 0.1 * width, right - 0.1 * width)
            f, g, dg = phi(a)
            if not math.isfinite(f) or f > f0 + c1 * a * dg0 or f >= f_lo:
                hi = (a, f if math.isfinite(f) else math.inf, dg if math.isfinite(dg) else 0.0, g)
                continue
            if abs(dg) <= -c2 * dg0:
                return a, f, g
            if dg * (a_hi - a_lo) >= 0:
                hi = lo
            lo = (a, f, dg, g)
        raise fail("zoom did not find an acceptable step")

    prev = (0.0, f0, dg0, g0)
    a = alpha0
    first = True
    while phi.evals < max_steps:
        f, g, dg = phi(a)
        if not (math.isfinite(f) and math.isfinite(dg)):
            # overshoot into an invalid region: shrink toward the last good step
            a = prev[0] + 0.5 * (a - prev[0])
            continue
        if f > f0 + c1 * a * dg0 or (not first and f >= prev[1]):
            a, f, g = zoom(prev, (a, f, dg, g))
            return a, f, g, phi.evals
        if abs(dg) <= -c2 * dg0:
            return a, f, g, phi.evals
        if dg >= 0:
            a, f, g = zoom((a, f, dg, g), prev)
            return a, f, g, phi.evals
        # still descending: extrapolate
        a_next = _cubic_min(prev[0], prev[1], prev[2], a, f, dg, a + 1.01 * (a - prev[0]), 10.0 * a)
        prev = (a, f, dg, g)
        a = a_next
        first = False
    raise fail("line search exceeded its evaluation budget")


def two_loop(g, pairs, gamma):
    """Apply the inverse-Hessian approximation to ``g``."""
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    r = gamma * q
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * (y @ r)
        r += (a - b) * s
    return r


def lbfgs_minimize(fun, x0, opts: LbfgsOptions | None = None) -> LbfgsResult:
    opts = opts or LbfgsOptions()
    x = np.array(x0, dtype=np.float64)
    f, g = fun(x)
    f = float(f)
    g = np.asarray(g, dtype=np.float64).copy()
    if not (math.isfinite(f) and np.all(np.isfinite(g))):
        raise ValueError("objective is not finite at the starting point")
    evals = 1
    pairs = deque(maxlen=opts.memory)
    history = [f]
    it = 0
    reason = "max_iter"
    while True:
        if g.size == 0 or np.max(np.abs(g)) < opts.grad_tol:
            reason = "converged"
            break
        if it >= opts.max_iter:
            break
        if pairs:
            s, y, _ = pairs[-1]
            d = -two_loop(g, list(pairs), (s @ y) / (y @ y))
            alpha0 = 1.0
        else:
            d = -g
            alpha0 = min(1.0, 1.0 / float(np.linalg.norm(g)))
        if not float(g @ d) < 0:
            pairs.clear()
            d = -g
            alpha0 = min(1.0, 1.0 / float(np.linalg.norm(g)))
        dg0 = float(g @ d)
        try:
            alpha, f_new, g_new, n = strong_wolfe(fun, x, f, g, d, alpha0, opts.wolfe_c1,
                                                  opts.wolfe_c2, opts.max_line_search_steps)
        except LineSearchError as exc:
            evals += getattr(exc, "evals", 0)
            best = getattr(exc, "best", None)
            if best is not None and best[0] < f:
                x = x + best[1] * d
                f, g = best[0], best[2]
                history.append(f)
            reason = "line_search_failed"
            break
        evals += n
        if opts.check_wolfe:
            dg_new = float(g_new @ d)
            assert f_new <= f + opts.wolfe_c1 * alpha * dg0, "sufficient decrease violated"
            assert abs(dg_new) <= -opts.wolfe_c2 * dg0, "curvature condition violated"
        s = alpha * d
        y = g_new - g
        sy = float(s @ y)
        if sy > CURVATURE_EPS * float(y @ y):
            pairs.append((s, y, 1.0 / sy))
        x = x + s
        f, g = f_new, np.asarray(g_new, dtype=np.float64)
        history.append(f)
        it += 1
    return LbfgsResult(x, f, g, it, evals, reason, history)
