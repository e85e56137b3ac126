"""Linear-chain conditional random field over binary features.

Feature functions are the minimal complete set for a first-order chain:
one weight per (class, input feature) plus a per-class bias, a full
class-to-class transition table and per-class initial-state weights.
Training minimises the L2-regularised negative conditional log-likelihood
with L-BFGS, starting from all-zero weights.

The flat parameter vector is always ordered ``init (C) | trans (C*C,
row-major) | emit (C*(F+1), row-major)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .optim import LbfgsOptions, lbfgs_minimize

DEFAULT_REG = 1.0


class CrfError(ValueError):
    pass


class CrfTrainingError(RuntimeError):
    pass


def n_params(C: int, F: int) -> int:
    return C + C * C + C * (F + 1)


def unpack(theta: np.ndarray, C: int, F: int):
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (n_params(C, F),):
        raise CrfError(f"parameter vector has shape {theta.shape}, expected ({n_params(C, F)},)")
    w_init = theta[:C]
    w_trans = theta[C:C + C * C].reshape(C, C)
    w_emit = theta[C + C * C:].reshape(C, F + 1)
    return w_init, w_trans, w_emit


def pack(w_init, w_trans, w_emit) -> np.ndarray:
    return np.concatenate([np.ravel(w_init), np.ravel(w_trans), np.ravel(w_emit)]).astype(np.float64)


@dataclass(frozen=True, eq=False)
class CrfModel:
    w_init: np.ndarray
    w_trans: np.ndarray
    w_emit: np.ndarray
    lambda_reg: float = DEFAULT_REG
    diagnostics: dict = field(default_factory=dict)

    kind = "crf"

    def __post_init__(self):
        for name in ("w_init", "w_trans", "w_emit"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise CrfError(f"{name} has non-finite entries")
            object.__setattr__(self, name, arr)
        C = self.w_init.shape[0]
        if self.w_trans.shape != (C, C) or self.w_emit.ndim != 2 or self.w_emit.shape[0] != C:
            raise CrfError("inconsistent CRF weight shapes")

    @property
    def C(self):
        return self.w_init.shape[0]

    @property
    def F(self):
        return self.w_emit.shape[1] - 1

    @property
    def theta(self):
        return pack(self.w_init, self.w_trans, self.w_emit)

    @classmethod
    def from_theta(cls, theta, C, F, lambda_reg=DEFAULT_REG, diagnostics=None):
        w_init, w_trans, w_emit = unpack(theta, C, F)
        return cls(w_init.copy(), w_trans.copy(), w_emit.copy(), lambda_reg, diagnostics or {})

    def node_scores(self, f) -> np.ndarray:
        f = np.asarray(f)
        if f.ndim != 2 or f.shape[1] != self.F:
            raise CrfError(f"feature width {f.shape[-1]} does not match model width {self.F}")
        return f.astype(np.float64) @ self.w_emit[:, :-1].T + self.w_emit[:, -1]

    def predict(self, seq):
        return crf_viterbi(self, seq)

    def params(self):
        return {"lambda_reg": self.lambda_reg, "w_init": self.w_init,
                "w_trans": self.w_trans, "w_emit": self.w_emit}

    @classmethod
    def from_params(cls, p):
        return cls(p["w_init"], p["w_trans"], p["w_emit"], p["lambda_reg"])


def _features(seq):
    return seq.f if hasattr(seq, "f") else np.asarray(seq)


def crf_score(model: CrfModel, seq, labels) -> float:
    """Unnormalised log-potential of one labelling."""
    f = _features(seq)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (f.shape[0],):
        raise CrfError(f"{labels.shape[0]} labels for {f.shape[0]} positions")
    if labels.size and (labels.min() < 0 or labels.max() >= model.C):
        raise CrfError("label out of range")
    node = model.node_scores(f)
    total = model.w_init[labels[0]] + node[np.arange(labels.size), labels].sum()
    total += model.w_trans[labels[:-1], labels[1:]].sum()
    return float(total)


def crf_log_partition(model: CrfModel, seq, return_backward: bool = False):
    """log Z(X) by the forward recursion.

    With ``return_backward`` the backward-recursion value is returned as a
    second element; the two agree to rounding.
    """
    node = model.node_scores(_features(seq))
    if node.shape[0] == 0:
        raise CrfError("empty sequence")
    alpha = kernels.chain_forward(model.w_init, model.w_trans, node)
    log_z = float(np.logaddexp.reduce(alpha[-1]))
    if not return_backward:
        return log_z
    beta = kernels.chain_backward(model.w_trans, node)
    return log_z, float(np.logaddexp.reduce(model.w_init + node[0] + beta[0]))


def crf_marginals(model: CrfModel, seq):
    """Node marginals (T x C) and per-position edge marginals ((T-1) x C x C)."""
    node = model.node_scores(_features(seq))
    alpha = kernels.chain_forward(model.w_init, model.w_trans, node)
    beta = kernels.chain_backward(model.w_trans, node)
    log_z = np.logaddexp.reduce(alpha[-1])
    nodes = np.exp(alpha + beta - log_z)
    edges = np.exp(alpha[:-1, :, None] + model.w_trans[None] + (node[1:] + beta[1:])[:, None, :] - log_z)
    return nodes, edges


def crf_viterbi(model: CrfModel, seq) -> np.ndarray:
    node = model.node_scores(_features(seq))
    if node.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    path, _ = kernels.chain_viterbi(model.w_init, model.w_trans, node)
    return path


class CrfObjective:
    """Negative conditional log-likelihood over a fixed training set.

    Design matrices and empirical feature counts are built once; each call
    does one forward-backward pass per sequence, in a fixed order.
    """

    def __init__(self, dataset, C: int, F: int, lambda_reg: float = DEFAULT_REG):
        self.C, self.F, self.lambda_reg = C, F, float(lambda_reg)
        self.seqs = []
        emp_init = np.zeros(C)
        emp_trans = np.zeros((C, C))
        emp_emit = np.zeros((C, F + 1))
        for seq in dataset:
            f = _features(seq)
            y = np.asarray(seq.labels, dtype=np.int64)
            if f.ndim != 2 or f.shape[1] != F:
                raise CrfError(f"feature width {f.shape[-1]} does not match {F}")
            if f.shape[0] != y.shape[0]:
                raise CrfError("labels and features have different lengths")
            if f.shape[0] == 0:
                continue
            if y.min() < 0 or y.max() >= C:
                raise CrfError(f"label outside 0..{C - 1}")
            x1 = np.hstack([f.astype(np.float64), np.ones((f.shape[0], 1))])
            onehot = np.zeros((y.size, C))
            onehot[np.arange(y.size), y] = 1.0
            emp_init[y[0]] += 1
            np.add.at(emp_trans, (y[:-1], y[1:]), 1)
            emp_emit += onehot.T @ x1
            self.seqs.append((x1, y))
        if not self.seqs:
            raise CrfError("empty training set")
        self.empirical = pack(emp_init, emp_trans, emp_emit)

    def __call__(self, theta):
        C = self.C
        w_init, w_trans, w_emit = unpack(theta, C, self.F)
        g_init = np.zeros(C)
        g_trans = np.zeros((C, C))
        g_emit = np.zeros((C, self.F + 1))
        nll = 0.0
        for x1, y in self.seqs:
            node = x1 @ w_emit.T
            alpha = kernels.chain_forward(w_init, w_trans, node)
            beta = kernels.chain_backward(w_trans, node)
            log_z = np.logaddexp.reduce(alpha[-1])
            gold = w_init[y[0]] + node[np.arange(y.size), y].sum() + w_trans[y[:-1], y[1:]].sum()
            nll += log_z - gold
            marg = np.exp(alpha + beta - log_z)
            g_init += marg[0]
            g_trans += kernels.edge_expectation(alpha, beta, w_trans, node, log_z)
            g_emit += marg.T @ x1
        grad = pack(g_init, g_trans, g_emit) - self.empirical
        theta = np.asarray(theta, dtype=np.float64)
        nll += 0.5 * self.lambda_reg * float(theta @ theta)
        grad += self.lambda_reg * theta
        if not (np.isfinite(nll) and np.all(np.isfinite(grad))):
            raise FloatingPointError("non-finite CRF objective")
        return float(nll), grad


def crf_nll_grad(theta, dataset, C: int, F: int, lambda_reg: float = DEFAULT_REG):
    """(NLL, gradient) at ``theta`` for a list of feature sequences."""
    return CrfObjective(dataset, C, F, lambda_reg)(theta)


def crf_fit(dataset, C: int, F: int | None = None, lambda_reg: float = DEFAULT_REG,
            lbfgs_opts: LbfgsOptions | None = None) -> CrfModel:
    dataset = list(dataset)
    if not dataset:
        raise CrfError("empty training set")
    if F is None:
        F = dataset[0].width
    objective = CrfObjective(dataset, C, F, lambda_reg)
    opts = lbfgs_opts or LbfgsOptions()
    try:
        res = lbfgs_minimize(objective, np.zeros(n_params(C, F)), opts)
    except (FloatingPointError, ValueError) as exc:
        raise CrfTrainingError(f"CRF training failed: {exc}") from exc
    diag = {"iterations": res.iterations, "reason": res.reason,
            "grad_max_norm": res.grad_max_norm, "nll": res.fun,
            "evaluations": res.evaluations}
    return CrfModel.from_theta(res.x, C, F, lambda_reg, diag)
