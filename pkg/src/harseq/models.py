"""Uniform fit/predict/serialise front for the four model families."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import crf, generative
from .optim import LbfgsOptions

FORMAT_VERSION = 1
MODEL_KINDS = ("nb", "hmm", "hsmm", "crf")


@dataclass(frozen=True)
class ModelOptions:
    alpha: float = generative.DEFAULT_ALPHA
    d_max: int = generative.DEFAULT_D_MAX
    reg: float = crf.DEFAULT_REG
    max_iter: int = 200
    grad_tol: float = 1e-5

    def to_dict(self):
        return {"alpha": self.alpha, "d_max": self.d_max, "reg": self.reg,
                "max_iter": self.max_iter, "grad_tol": self.grad_tol}

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


def fit(kind: str, data, C: int, opts: ModelOptions | None = None):
    opts = opts or ModelOptions()
    data = list(data)
    if kind == "nb":
        return generative.nb_fit(data, C, opts.alpha)
    if kind == "hmm":
        return generative.hmm_fit(data, C, opts.alpha, opts.alpha)
    if kind == "hsmm":
        return generative.hsmm_fit(data, C, opts.d_max, opts.alpha, opts.alpha, opts.alpha)
    if kind == "crf":
        lb = LbfgsOptions(max_iter=opts.max_iter, grad_tol=opts.grad_tol)
        return crf.crf_fit(data, C, data[0].width, opts.reg, lb)
    raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


def predict(model, seq) -> np.ndarray:
    return model.predict(seq)


# ---------------------------------------------------------------------------
# JSON documents: {"format_version", "model", "C", "F", "config", "params"}

_CLASSES = {"nb": generative.NbModel, "hmm": generative.HmmModel,
            "hsmm": generative.HsmmModel, "crf": crf.CrfModel}


def _encode(v):
    if isinstance(v, np.ndarray):
        return _encode(v.tolist())
    if isinstance(v, list):
        return [_encode(x) for x in v]
    if isinstance(v, float) and math.isinf(v):
        return None if v < 0 else "inf"  # null stands for log(0)
    return v


def _decode(v):
    if isinstance(v, list):
        return np.array([_decode(x) for x in v], dtype=np.float64)
    if v is None:
        return -math.inf
    if v == "inf":
        return math.inf
    return v


def model_to_dict(model, config=None, extra=None) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "model": model.kind,
        "C": int(model.C),
        "F": int(model.F),
        "config": config.to_dict() if hasattr(config, "to_dict") else config,
        "params": {k: _encode(v) for k, v in model.params().items()},
    }
    if extra:
        doc.update(extra)
    return doc


def model_from_dict(doc: dict):
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('format_version')!r}")
    kind = doc.get("model")
    if kind not in _CLASSES:
        raise ValueError(f"unknown model kind {kind!r}")
    params = {k: _decode(v) for k, v in doc["params"].items()}
    model = _CLASSES[kind].from_params(params)
    if model.C != doc["C"] or model.F != doc["F"]:
        raise ValueError("model document dimensions do not match its parameters")
    return model


def save_model(path, model, config=None, extra=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model, config, extra), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path):
    """Returns ``(model, document)``."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return model_from_dict(doc), doc
