"""Backend selection for the dynamic-programming kernels.

The compiled Cython module is used when it imports; otherwise the numpy
reference in ``_pykernels`` takes over. Set ``HARSEQ_PURE_PYTHON=1`` to
force the fallback, or call :func:`set_backend` at runtime.
"""
import os

import numpy as np

from . import _pykernels

_BACKENDS = {"python": _pykernels}
try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    _BACKENDS["cython"] = _ckernels

if os.environ.get("HARSEQ_PURE_PYTHON") or _ckernels is None:
    _impl = _pykernels
else:
    _impl = _ckernels


def available_backends():
    return sorted(_BACKENDS)


def backend_name():
    return _impl.NAME


def get_backend(name):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available; have {available_backends()}") from None


def set_backend(name):
    """Switch the process-wide backend; returns the previous name."""
    global _impl
    prev = _impl.NAME
    _impl = get_backend(name)
    return prev


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def chain_forward(init, trans, emit):
    return _impl.chain_forward(_f64(init), _f64(trans), _f64(emit))


def chain_backward(trans, emit):
    return _impl.chain_backward(_f64(trans), _f64(emit))


def edge_expectation(alpha, beta, trans, emit, log_z):
    return _impl.edge_expectation(_f64(alpha), _f64(beta), _f64(trans), _f64(emit), float(log_z))


def chain_viterbi(init, trans, emit):
    return _impl.chain_viterbi(_f64(init), _f64(trans), _f64(emit))


def hsmm_viterbi(log_pi, log_trans, log_dur, emit):
    return _impl.hsmm_viterbi(_f64(log_pi), _f64(log_trans), _f64(log_dur), _f64(emit))
