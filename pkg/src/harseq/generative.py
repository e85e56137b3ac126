"""Naive Bayes, HMM and explicit-duration HSMM over binary features.

Labels are observed, so every model is fitted by smoothed counting
(maximum likelihood with additive smoothing). All parameters live in
natural-log space.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

DEFAULT_ALPHA = 0.01
DEFAULT_D_MAX = 120


class ModelError(ValueError):
    pass


def _check_data(data, C):
    data = list(data)
    if not data or sum(d.T for d in data) == 0:
        raise ModelError("empty training set")
    F = data[0].width
    for d in data:
        if d.width != F:
            raise ModelError(f"inconsistent feature widths {F} and {d.width}")
        if d.labels.size and (d.labels.min() < 0 or d.labels.max() >= C):
            raise ModelError(f"label outside 0..{C - 1}")
    return data, F


def _normalize_log(counts, axis=-1):
    counts = np.asarray(counts, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.log(counts) - np.log(counts.sum(axis=axis, keepdims=True))


@dataclass(frozen=True, eq=False)
class BernoulliEmissions:
    """log p(x_i = 1 | c) and log p(x_i = 0 | c) per class and feature."""

    log_on: np.ndarray   # C x F
    log_off: np.ndarray  # C x F

    @classmethod
    def fit(cls, data, C, alpha):
        F = data[0].width
        on = np.zeros((C, F))
        n = np.zeros(C)
        for d in data:
            onehot = np.zeros((d.T, C))
            onehot[np.arange(d.T), d.labels] = 1.0
            on += onehot.T @ d.f.astype(np.float64)
            n += onehot.sum(axis=0)
        p = (on + alpha) / (n[:, None] + 2 * alpha)
        return cls(np.log(p), np.log1p(-p))

    @property
    def width(self):
        return self.log_on.shape[1]

    def scores(self, f: np.ndarray) -> np.ndarray:
        """T x C matrix of log p(x_t | c)."""
        if f.shape[1] != self.width:
            raise ModelError(f"feature width {f.shape[1]} does not match model width {self.width}")
        f = f.astype(np.float64)
        return f @ (self.log_on - self.log_off).T + self.log_off.sum(axis=1)


# ---------------------------------------------------------------------------
# Naive Bayes

@dataclass(frozen=True, eq=False)
class NbModel:
    log_prior: np.ndarray
    emissions: BernoulliEmissions
    alpha: float

    kind = "nb"

    @property
    def log_theta(self):
        return self.emissions.log_on

    @property
    def C(self):
        return self.log_prior.shape[0]

    @property
    def F(self):
        return self.emissions.width

    def predict(self, seq):
        return nb_predict(self, seq)

    def params(self):
        return {"alpha": self.alpha, "log_prior": self.log_prior,
                "log_on": self.emissions.log_on, "log_off": self.emissions.log_off}

    @classmethod
    def from_params(cls, p):
        return cls(p["log_prior"], BernoulliEmissions(p["log_on"], p["log_off"]), p["alpha"])


def nb_fit(data, C: int, alpha: float = DEFAULT_ALPHA) -> NbModel:
    if alpha <= 0:
        raise ModelError("alpha must be > 0")
    data, _ = _check_data(data, C)
    counts = np.zeros(C)
    for d in data:
        counts += np.bincount(d.labels, minlength=C)
    log_prior = _normalize_log(counts + alpha)
    return NbModel(log_prior, BernoulliEmissions.fit(data, C, alpha), alpha)


def nb_predict(model: NbModel, seq) -> np.ndarray:
    f = seq.f if hasattr(seq, "f") else np.asarray(seq)
    scores = model.emissions.scores(f) + model.log_prior
    return np.argmax(scores, axis=1)


# ---------------------------------------------------------------------------
# HMM

@dataclass(frozen=True, eq=False)
class HmmModel:
    log_pi: np.ndarray
    log_A: np.ndarray
    emissions: BernoulliEmissions
    alpha_trans: float
    alpha_emit: float

    kind = "hmm"

    @property
    def C(self):
        return self.log_pi.shape[0]

    @property
    def F(self):
        return self.emissions.width

    def predict(self, seq):
        return hmm_viterbi(self, seq)

    def params(self):
        return {"alpha_trans": self.alpha_trans, "alpha_emit": self.alpha_emit,
                "log_pi": self.log_pi, "log_A": self.log_A,
                "log_on": self.emissions.log_on, "log_off": self.emissions.log_off}

    @classmethod
    def from_params(cls, p):
        return cls(p["log_pi"], p["log_A"], BernoulliEmissions(p["log_on"], p["log_off"]),
                   p["alpha_trans"], p["alpha_emit"])


def hmm_fit(data, C: int, alpha_trans: float = DEFAULT_ALPHA,
            alpha_emit: float = DEFAULT_ALPHA) -> HmmModel:
    if alpha_trans <= 0 or alpha_emit <= 0:
        raise ModelError("smoothing constants must be > 0")
    data, _ = _check_data(data, C)
    first = np.zeros(C)
    bigrams = np.zeros((C, C))
    for d in data:
        if d.T == 0:
            continue
        first[d.labels[0]] += 1
        np.add.at(bigrams, (d.labels[:-1], d.labels[1:]), 1)
    return HmmModel(_normalize_log(first + alpha_trans), _normalize_log(bigrams + alpha_trans),
                    BernoulliEmissions.fit(data, C, alpha_emit), alpha_trans, alpha_emit)


def hmm_viterbi(model: HmmModel, seq) -> np.ndarray:
    f = seq.f if hasattr(seq, "f") else np.asarray(seq)
    if f.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    path, _ = kernels.chain_viterbi(model.log_pi, model.log_A, model.emissions.scores(f))
    return path


def hmm_log_joint(model: HmmModel, f: np.ndarray, labels) -> float:
    """log p(y, X) of one labelling under the HMM."""
    labels = np.asarray(labels)
    e = model.emissions.scores(f)
    total = model.log_pi[labels[0]] + e[np.arange(len(labels)), labels].sum()
    total += model.log_A[labels[:-1], labels[1:]].sum()
    return float(total)


# ---------------------------------------------------------------------------
# HSMM

@dataclass(frozen=True, eq=False)
class HsmmModel:
    """Explicit-duration HSMM.

    ``log_D[c, d-1]`` is the log-probability of a run of class ``c`` lasting
    ``d`` data points, ``d = 1..d_max``. Runs longer than ``d_max`` are
    chained ``d_max``-long chunks of the same class followed by a remainder;
    a same-class chunk follows only a full-length chunk and pays no
    transition score.
    """

    log_pi: np.ndarray
    log_A: np.ndarray  # zero diagonal in probability space
    log_D: np.ndarray
    emissions: BernoulliEmissions
    alpha_trans: float
    alpha_emit: float
    alpha_dur: float

    kind = "hsmm"

    @property
    def C(self):
        return self.log_pi.shape[0]

    @property
    def F(self):
        return self.emissions.width

    @property
    def d_max(self):
        return self.log_D.shape[1]

    def predict(self, seq):
        return hsmm_viterbi(self, seq)

    def params(self):
        return {"alpha_trans": self.alpha_trans, "alpha_emit": self.alpha_emit,
                "alpha_dur": self.alpha_dur, "log_pi": self.log_pi, "log_A": self.log_A,
                "log_D": self.log_D, "log_on": self.emissions.log_on,
                "log_off": self.emissions.log_off}

    @classmethod
    def from_params(cls, p):
        return cls(p["log_pi"], p["log_A"], p["log_D"],
                   BernoulliEmissions(p["log_on"], p["log_off"]),
                   p["alpha_trans"], p["alpha_emit"], p["alpha_dur"])


def label_runs(labels) -> list[tuple[int, int]]:
    """(class, length) for every maximal run of equal labels."""
    labels = np.asarray(labels)
    if labels.size == 0:
        return []
    starts = np.concatenate([[0], np.flatnonzero(labels[1:] != labels[:-1]) + 1])
    lengths = np.diff(np.append(starts, labels.size))
    return list(zip(labels[starts].tolist(), lengths.tolist()))


def chunk_lengths(length: int, d_max: int) -> list[int]:
    """Split a run into d_max-long chunks plus a remainder."""
    q, r = divmod(length, d_max)
    return [d_max] * q + ([r] if r else [])


def hsmm_fit(data, C: int, d_max: int = DEFAULT_D_MAX, alpha_trans: float = DEFAULT_ALPHA,
             alpha_emit: float = DEFAULT_ALPHA, alpha_dur: float = DEFAULT_ALPHA) -> HsmmModel:
    if d_max < 1:
        raise ModelError("d_max must be >= 1")
    if min(alpha_trans, alpha_emit, alpha_dur) <= 0:
        raise ModelError("smoothing constants must be > 0")
    data, _ = _check_data(data, C)
    first = np.zeros(C)
    trans = np.zeros((C, C))
    dur = np.zeros((C, d_max))
    for d in data:
        runs = label_runs(d.labels)
        if not runs:
            continue
        first[runs[0][0]] += 1
        for (a, _), (b, _) in zip(runs, runs[1:]):
            trans[a, b] += 1
        for c, n in runs:
            for k in chunk_lengths(n, d_max):
                dur[c, k - 1] += 1
    trans += alpha_trans
    np.fill_diagonal(trans, 0.0)
    if C > 1:
        log_A = _normalize_log(trans)
    else:
        log_A = np.full((1, 1), -np.inf)
    return HsmmModel(_normalize_log(first + alpha_trans), log_A, _normalize_log(dur + alpha_dur),
                     BernoulliEmissions.fit(data, C, alpha_emit), alpha_trans, alpha_emit, alpha_dur)


def hsmm_viterbi(model: HsmmModel, seq) -> np.ndarray:
    f = seq.f if hasattr(seq, "f") else np.asarray(seq)
    if f.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    path, _ = kernels.hsmm_viterbi(model.log_pi, model.log_A, model.log_D,
                                   model.emissions.scores(f))
    return path


def hsmm_log_joint(model: HsmmModel, f: np.ndarray, segments) -> float:
    """Score a labelled segmentation ``[(class, length), ...]``.

    Returns -inf for segmentations the model forbids (length outside
    1..d_max, or a same-class repeat after a short segment).
    """
    e = model.emissions.scores(f)
    total, t = 0.0, 0
    prev = None
    for c, d in segments:
        if not 1 <= d <= model.d_max:
            return -np.inf
        if prev is None:
            total += model.log_pi[c]
        elif prev[0] == c:
            if prev[1] != model.d_max:
                return -np.inf
        else:
            total += model.log_A[prev[0], c]
        total += model.log_D[c, d - 1] + e[t:t + d, c].sum()
        t += d
        prev = (c, d)
    return float(total)
