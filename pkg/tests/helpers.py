"""Small constructors shared by the tests."""
import numpy as np

from harseq.dataset import TimesliceSequence
from harseq.features import FeatureConfig, FeatureSequence


def make_fs(f, labels):
    f = np.asarray(f, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.int64)
    rows = np.arange(len(labels))
    return FeatureSequence(f, labels, np.stack([rows, rows], axis=1), FeatureConfig())


def make_seq(x, y=None, start_ts=0):
    x = np.asarray(x, dtype=np.uint8)
    if y is None:
        y = np.zeros(x.shape[0], dtype=np.int64)
    return TimesliceSequence(start_ts, x, np.asarray(y))


def random_quadratic(seed, n=20, cond=1e3):
    """Convex quadratic with condition number exactly ``cond``.

    Returns ``(fun, x_star)``; ``fun`` is written around its minimiser so
    the value does not sit on a rounding floor near the optimum.
    """
    rng = np.random.default_rng(seed)
    eig = rng.uniform(1.0, cond, n)
    eig[0], eig[1] = 1.0, cond
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    H = (q * eig) @ q.T
    b = rng.normal(size=n)
    x_star = np.linalg.solve(H, b)

    def fun(x):
        d = x - x_star
        return 0.5 * d @ H @ d, H @ x - b

    return fun, x_star


def rosenbrock(x, a=1.0, b=100.0):
    f = (a - x[0]) ** 2 + b * (x[1] - x[0] ** 2) ** 2
    g = np.array([-2 * (a - x[0]) - 4 * b * x[0] * (x[1] - x[0] ** 2),
                  2 * b * (x[1] - x[0] ** 2)])
    return f, g
