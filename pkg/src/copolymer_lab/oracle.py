"""Brute-force references computed by summing over all ``2**N`` paths.

Independent of both DP engines: every quantity is a direct weighted sum over
the enumerated path table, so these functions are only usable for ``N <= 20``.
"""

from __future__ import annotations

import math

import numpy as np

from .core.params import ModelParams, as_omega
from .logmath import logsumexp
from .walks import PathTable, path_table

_CACHE: dict[int, PathTable] = {}


def _table(N: int) -> PathTable:
    t = _CACHE.get(N)
    if t is None:
        t = _CACHE[N] = path_table(N)
    return t


def occupation_of(table: PathTable, variant: str) -> np.ndarray:
    if variant == "pinning":
        return (table.positions[:, 1:] == 0).sum(axis=1)
    return table.occupation


def log_path_weights(params: ModelParams, omega) -> np.ndarray:
    """``log(2**-N * exp(-2 lam sum (omega_n + h) Delta_n))`` for every path."""
    N = params.N
    om = as_omega(omega, N)
    t = _table(N)
    ind = (t.positions[:, 1:] == 0) if params.variant == "pinning" else t.delta
    return -2.0 * params.lam * (ind @ (om + params.h)) - N * math.log(2.0)


def _endpoint_mask(params: ModelParams, endpoint: str | None = None) -> np.ndarray:
    t = _table(params.N)
    endpoint = endpoint or params.endpoint
    if endpoint == "constrained":
        return t.positions[:, -1] == 0
    return np.ones(t.positions.shape[0], dtype=bool)


def log_partition(params: ModelParams, omega, endpoint: str | None = None) -> float:
    lw = log_path_weights(params, omega)
    return logsumexp(lw[_endpoint_mask(params, endpoint)])


def log_spectrum(params: ModelParams, omega) -> tuple[np.ndarray, np.ndarray]:
    """(m values, log Z(Omega^a, occupation = m))."""
    N = params.N
    lw = log_path_weights(params, omega)
    mask = _endpoint_mask(params)
    occ = occupation_of(_table(N), params.variant)
    ms = np.arange(N // 2 + 1) if params.variant == "pinning" else np.arange(0, N + 1, 2)
    return ms, np.array([logsumexp(lw[mask & (occ == m)]) for m in ms])


def log_last_exit(params: ModelParams, omega, ell: int) -> float:
    t = _table(params.N)
    lw = log_path_weights(params, omega)
    return logsumexp(lw[t.last_exit <= ell])


def _A_sets(N: int) -> np.ndarray:
    """Indicator of ``A = {n : Delta_n = 1} | {0}`` over ``n = 0..N``."""
    t = _table(N)
    A = np.zeros((t.delta.shape[0], N + 1), dtype=bool)
    A[:, 0] = True
    A[:, 1:] = t.delta
    return A


def two_sided_event(N: int, ell1: int, ell2: int) -> np.ndarray:
    A = _A_sets(N)
    times = np.arange(N + 1)
    half = N // 2
    first = np.where(A & (times <= half), times, -1).max(axis=1)
    second = np.where(A & (times >= half), times, N + 1).min(axis=1)
    second = np.where(second == N + 1, N, second)
    return (first <= ell1) | (second >= N - ell2)


def log_two_sided(params: ModelParams, omega, ell1: int, ell2: int) -> float:
    lw = log_path_weights(params, omega)
    mask = _endpoint_mask(params, "constrained") & two_sided_event(params.N, ell1, ell2)
    return logsumexp(lw[mask])


def gibbs_probabilities(params: ModelParams, omega, extra_mask: np.ndarray | None = None) -> np.ndarray:
    lw = log_path_weights(params, omega)
    mask = _endpoint_mask(params)
    if extra_mask is not None:
        mask = mask & extra_mask
    lw = np.where(mask, lw, -np.inf)
    return np.exp(lw - logsumexp(lw))


def delta_marginals(params: ModelParams, omega, m: int | None = None) -> np.ndarray:
    t = _table(params.N)
    extra = None if m is None else occupation_of(t, params.variant) == m
    p = gibbs_probabilities(params, omega, extra)
    ind = (t.positions[:, 1:] == 0) if params.variant == "pinning" else t.delta
    return p @ ind


def endpoint_marginal(params: ModelParams, omega) -> np.ndarray:
    N = params.N
    t = _table(N)
    p = gibbs_probabilities(params.with_(endpoint="free"), omega)
    return np.bincount(t.positions[:, -1] + N, weights=p, minlength=2 * N + 1)
