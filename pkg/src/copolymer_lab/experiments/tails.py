"""Occupation and last-exit tails averaged over disorder.

Each replica contributes an exact Gibbs probability (from the occupation
spectrum or the last-exit profile), so the only randomness is the disorder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from ..core.excursion import last_exit_profile, occupation_spectrum
from ..core.params import ModelParams
from ..core.position import two_sided_exit_partition
from ..core.excursion import partition
from ..disorder import DisorderLaw, annealed_beta, h_lower, sample
from ..errors import InvalidArgument
from ..parallel import map_replicas
from .common import linear_fit, stderr


@dataclass(frozen=True)
class TailCurve:
    kind: str
    grid: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    reference: np.ndarray | None
    fit_slope: float
    fit_slope_se: float
    n_replicas: int
    passed: bool | None
    notes: str = ""


def _validate_common(params: ModelParams, n_replicas: int) -> None:
    if params.variant != "copolymer":
        raise InvalidArgument("tail experiments are defined for the copolymer", field="variant")
    if n_replicas < 2:
        raise InvalidArgument("n_replicas must be >= 2", field="replicas")


def _tail_at(spec_tail: np.ndarray, spec_m: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """``P(occupation >= m)`` for arbitrary integer ``m`` from the tail over the spectrum support."""
    idx = np.searchsorted(spec_m, grid, side="left")
    padded = np.append(spec_tail, 0.0)
    return padded[idx]


def _replica_tail(r: int, params: ModelParams, law: DisorderLaw, grid: np.ndarray, seed: int) -> np.ndarray:
    spec = occupation_spectrum(params, sample(law, params.N, seed, r))
    return _tail_at(spec.tail(), spec.m, grid)


def occupation_tail_samples(params: ModelParams, law, m_grid, n_replicas: int, seed: int,
                            workers: int | None = None) -> np.ndarray:
    """Per-replica ``P^a_{N,omega}(occupation >= m)``; shape (replicas, grid)."""
    _validate_common(params, n_replicas)
    law = DisorderLaw.parse(law)
    grid = np.asarray(list(m_grid), dtype=np.int64)
    if grid.size == 0 or np.any(grid < 0):
        raise InvalidArgument("m grid must be nonempty and nonnegative", field="m_grid")
    rows = map_replicas(partial(_replica_tail, params=params, law=law, grid=grid, seed=seed),
                        range(n_replicas), workers)
    return np.vstack(rows)


def deloc_tail_experiment(params: ModelParams, law, m_grid, n_replicas: int, seed: int,
                          workers: int | None = None) -> TailCurve:
    """Disorder-averaged occupation tail against the envelope ``exp(-beta m) / (1 - exp(-beta))``."""
    law = DisorderLaw.parse(law)
    grid = np.asarray(list(m_grid), dtype=np.int64)
    samples = occupation_tail_samples(params, law, grid, n_replicas, seed, workers)
    mean, se = samples.mean(axis=0), stderr(samples)
    beta = annealed_beta(law, params.lam, params.h) if params.lam > 0 else 0.0
    fit = _log_fit(grid, mean, se)
    if beta > 0:
        ref = np.exp(-beta * grid) / (-math.expm1(-beta))
        passed = bool(np.all(mean <= ref + 3.0 * se))
        notes = f"beta={beta:.6g}"
    else:
        ref, passed, notes = None, None, f"beta={beta:.6g} <= 0: envelope not applicable"
    return TailCurve("occupation", grid, mean, se, ref, fit.slope, fit.slope_se, n_replicas, passed, notes)


def _log_fit(x, mean, se):
    ok = mean > 0
    if ok.sum() < 2:
        return linear_fit([0.0, 1.0], [0.0, 0.0])
    y = np.log(mean[ok])
    # delta method: var(log mean) ~ (se / mean)^2
    rel = np.where(se[ok] > 0, se[ok] / mean[ok], np.nan)
    w = None
    if np.all(np.isfinite(rel)) and np.all(rel > 0):
        w = 1.0 / rel**2
    return linear_fit(np.asarray(x, dtype=np.float64)[ok], y, w)


def deloc_tail_interior(params: ModelParams, law, m_grid, n_replicas: int, seed: int, q_hat: float = 3.0,
                        apply_criterion: bool | None = None, workers: int | None = None) -> TailCurve:
    """Exponential-decay fit of the occupation tail over ``m >= q_hat log N``.

    The pass criterion (negative slope at 3 standard errors) is applied by
    default only when ``h >= h_lower(lam)``, i.e. outside the region that the
    lower bound certifies as localized.
    """
    law = DisorderLaw.parse(law)
    grid = np.asarray(list(m_grid), dtype=np.int64)
    samples = occupation_tail_samples(params, law, grid, n_replicas, seed, workers)
    mean, se = samples.mean(axis=0), stderr(samples)
    cut = q_hat * math.log(params.N)
    sel = grid >= cut
    if sel.sum() < 2:
        raise InvalidArgument(f"need at least two grid points with m >= {cut:.1f}", field="m_grid")
    fit = _log_fit(grid[sel], mean[sel], se[sel])
    if apply_criterion is None:
        apply_criterion = params.lam > 0 and params.h >= h_lower(law, params.lam)
    passed = bool(fit.slope + 3.0 * fit.slope_se < 0) if apply_criterion else None
    notes = f"fit window m >= {cut:.3f} (q_hat={q_hat})" + ("" if apply_criterion else "; criterion not applied")
    return TailCurve("occupation-interior", grid, mean, se, None, fit.slope, fit.slope_se, n_replicas, passed, notes)


def _replica_last_exit(r: int, params: ModelParams, law: DisorderLaw, grid: np.ndarray, seed: int) -> np.ndarray:
    prof = last_exit_profile(params, sample(law, params.N, seed, r))
    return prof.probability_above()[grid // 2]


def last_exit_experiment(params: ModelParams, law, ell_grid, n_replicas: int, seed: int,
                         slope_band: tuple[float, float] = (-0.7, -0.3), workers: int | None = None) -> TailCurve:
    """``1 - E[P^f(max A <= l)]`` and its log-log slope against ``l + 1``."""
    _validate_common(params, n_replicas)
    if params.endpoint != "free":
        raise InvalidArgument("last-exit experiment requires endpoint='free'", field="endpoint")
    law = DisorderLaw.parse(law)
    grid = np.asarray(list(ell_grid), dtype=np.int64)
    if np.any(grid % 2) or np.any(grid < 0) or np.any(grid > params.N):
        raise InvalidArgument("ell grid must be even values in [0, N]", field="ell_grid")
    rows = map_replicas(partial(_replica_last_exit, params=params, law=law, grid=grid, seed=seed),
                        range(n_replicas), workers)
    samples = np.vstack(rows)
    mean, se = samples.mean(axis=0), stderr(samples)
    fit = _log_fit(np.log(grid + 1.0), mean, se)
    scaled = mean * np.sqrt(grid + 1.0)
    envelope_c = float(np.max((mean + 3.0 * se) * np.sqrt(grid + 1.0)))
    ref = envelope_c / np.sqrt(grid + 1.0)
    in_band = slope_band[0] <= fit.slope <= slope_band[1]
    passed = bool(in_band and np.all(mean <= ref))
    notes = f"envelope c={envelope_c:.6g}; max/min of mean*sqrt(l+1) = {scaled.max() / max(scaled.min(), 1e-300):.4g}"
    return TailCurve("last-exit", grid, mean, se, ref, fit.slope, fit.slope_se, n_replicas, passed, notes)


def _replica_two_sided(r: int, params: ModelParams, law: DisorderLaw, grid: np.ndarray, seed: int) -> np.ndarray:
    omega = sample(law, params.N, seed, r)
    logZc = partition(params, omega).logZ
    return np.array([-math.expm1(two_sided_exit_partition(params, omega, int(l), int(l)) - logZc) for l in grid])


def two_sided_experiment(params: ModelParams, law, ell_grid, n_replicas: int, seed: int,
                         workers: int | None = None) -> TailCurve:
    """Complement of the two-sided exit event at the constrained endpoint with ``l1 = l2 = l``.

    Reported against the envelope ``c / sqrt(l^2 + 1)``; no pass criterion.
    """
    _validate_common(params, n_replicas)
    if params.endpoint != "constrained":
        raise InvalidArgument("two-sided experiment requires endpoint='constrained'", field="endpoint")
    law = DisorderLaw.parse(law)
    grid = np.asarray(list(ell_grid), dtype=np.int64)
    rows = map_replicas(partial(_replica_two_sided, params=params, law=law, grid=grid, seed=seed),
                        range(n_replicas), workers)
    samples = np.clip(np.vstack(rows), 0.0, 1.0)
    mean, se = samples.mean(axis=0), stderr(samples)
    fit = _log_fit(np.log(grid + 1.0), mean, se)
    c = float(np.max(mean * np.sqrt(grid.astype(float) ** 2 + 1.0)))
    ref = c / np.sqrt(grid.astype(float) ** 2 + 1.0)
    return TailCurve("two-sided", grid, mean, se, ref, fit.slope, fit.slope_se, n_replicas, None,
                     f"envelope c={c:.6g}")
