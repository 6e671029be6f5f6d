"""Log-domain reductions that tolerate all ``-inf`` inputs without warnings."""

from __future__ import annotations

import numpy as np


def logsumexp(a, axis=None):
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0:
        return -np.inf if axis is None else np.full(np.delete(a.shape, axis), -np.inf)
    m = np.max(a, axis=axis, keepdims=True)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m_safe), axis=axis, keepdims=True)) + m_safe
    out = np.where(np.isneginf(m), -np.inf, out)
    if axis is None:
        return float(out.reshape(()))
    return np.squeeze(out, axis=axis)


def log1mexp(x):
    """``log(1 - exp(x))`` for ``x <= 0``."""
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.where(x > -0.693, np.log(-np.expm1(x)), np.log1p(-np.exp(x)))


def logdiffexp(a, b):
    """``log(exp(a) - exp(b))`` for ``a >= b``."""
    return a + log1mexp(np.minimum(b - a, 0.0))
