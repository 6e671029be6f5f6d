"""Free-energy estimation, the localization detector, and critical-curve bisection.

Detector. For each replica the entropy-corrected free-endpoint value

    G_N = (log Z^f_N - log p_plus(N)) / N  >= 0

is fitted as ``G_inf + a / N`` over the upper half of the ``N`` grid; the
replica mean of ``G_inf`` estimates ``F``. Subtracting ``log p_plus(N)``
removes the ``log N / N`` drift that a delocalized free chain would otherwise
show, so the ``1/N`` fit form is appropriate on both sides of the transition.
The point is flagged localized when ``mean - 3 * stderr > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from ..core.excursion import free_log_partition_profile, partition
from ..core.params import ModelParams
from ..disorder import DisorderLaw, critical_bounds, sample
from ..errors import EstimationFailed, InvalidArgument
from ..parallel import map_replicas
from ..walks import walk_tables_for
from .common import check_grid, stderr

METHOD = "entropy-corrected free endpoint, per-replica fit G_N = G_inf + a/N over the upper half of the grid"


@dataclass(frozen=True)
class FreeEnergyEstimate:
    lam: float
    h: float
    law: str
    N_grid: np.ndarray
    mean_Fc: np.ndarray
    se_Fc: np.ndarray
    mean_Ff: np.ndarray
    se_Ff: np.ndarray
    n_replicas: int
    F_inf: float
    F_inf_se: float
    method: str
    localized_flag: bool
    indeterminate: bool = False

    @property
    def lower_bound(self) -> float:
        return self.F_inf - 3.0 * self.F_inf_se

    def constrained_bound_ok(self) -> bool:
        """``E[F^c_N] <= 3 stderr`` at every ``N`` (expected whenever the point is delocalized)."""
        return bool(np.all(self.mean_Fc <= 3.0 * self.se_Fc + 1e-15))


def _replica_values(r: int, lam: float, h: float, law: DisorderLaw, Ns: np.ndarray, fit_Ns: np.ndarray,
                    seed: int) -> tuple[np.ndarray, np.ndarray, float]:
    N = int(Ns[-1])
    omega = sample(law, N, seed, r).values
    pt = partition(ModelParams(lam, h, N, "free"), omega)
    Fc = pt.logZ_c[Ns // 2] / Ns
    lzf = free_log_partition_profile(pt, omega, Ns)
    Ff = lzf / Ns
    tables = walk_tables_for(N)
    sel = np.searchsorted(Ns, fit_Ns)
    G = (lzf[sel] - tables.log_p_plus[fit_Ns]) / fit_Ns
    A = np.vstack([np.ones(fit_Ns.size), 1.0 / fit_Ns]).T
    g_inf = float(np.linalg.lstsq(A, G, rcond=None)[0][0]) if fit_Ns.size > 1 else float(G[0])
    return Fc, Ff, g_inf


def free_energy_estimate(lam: float, h: float, law, N_grid, n_replicas: int, seed: int,
                         workers: int | None = None) -> FreeEnergyEstimate:
    law = DisorderLaw.parse(law)
    Ns = check_grid("N", N_grid, minimum=2)
    if n_replicas < 50:
        raise InvalidArgument("n_replicas must be >= 50", field="replicas")
    if lam < 0:
        raise InvalidArgument("lambda must be >= 0", field="lambda")
    ModelParams(lam, h, int(Ns[-1]))  # validates h
    fit_Ns = Ns[Ns.size // 2:]
    if lam == 0:
        # unweighted walk: Z^f = 1 and Z^c = u_N exactly; no disorder enters
        tables = walk_tables_for(int(Ns[-1]))
        zeros = np.zeros(Ns.size)
        Fc = tables.log_u[Ns] / Ns
        return FreeEnergyEstimate(lam, h, law.value, Ns, Fc, zeros, zeros.copy(), zeros.copy(), n_replicas,
                                  0.0, 0.0, METHOD, False)
    rows = map_replicas(partial(_replica_values, lam=lam, h=h, law=law, Ns=Ns, fit_Ns=fit_Ns, seed=seed),
                        range(n_replicas), workers)
    Fc = np.vstack([r[0] for r in rows])
    Ff = np.vstack([r[1] for r in rows])
    G = np.array([r[2] for r in rows])
    g_mean = float(G.mean())
    g_se = float(stderr(G))
    localized = g_mean - 3.0 * g_se > 0
    indeterminate = (not localized) and g_mean - g_se > 0
    return FreeEnergyEstimate(lam, h, law.value, Ns, Fc.mean(axis=0), stderr(Fc), Ff.mean(axis=0), stderr(Ff),
                              n_replicas, g_mean, g_se, METHOD, bool(localized), bool(indeterminate))


@dataclass(frozen=True)
class CriticalPointEstimate:
    lam: float
    law: str
    h_hat: float
    interval: tuple[float, float]
    h_lower: float
    h_upper: float
    evaluations: list = field(default_factory=list)  # (h, F_inf, F_inf_se, localized, indeterminate)
    indeterminate_band: tuple[float, float] | None = None

    def intersects_bounds(self) -> bool:
        return self.interval[0] <= self.h_upper and self.interval[1] >= self.h_lower


def critical_point_estimate(lam: float, law, N_grid, n_replicas: int, tol_h: float = 0.01, seed: int = 0,
                            workers: int | None = None) -> CriticalPointEstimate:
    """Bisection on ``h`` with the localization detector, starting from ``[0, h_upper + 0.5]``."""
    law = DisorderLaw.parse(law)
    if not lam > 0:
        raise InvalidArgument("lambda must be > 0", field="lambda")
    if not tol_h > 0:
        raise InvalidArgument("tol_h must be > 0", field="tol_h")
    bounds = critical_bounds(law, lam)
    evals = []

    def detect(h: float) -> bool:
        est = free_energy_estimate(lam, h, law, N_grid, n_replicas, seed, workers)
        evals.append((h, est.F_inf, est.F_inf_se, est.localized_flag, est.indeterminate))
        return est.localized_flag

    a, b = 0.0, bounds.h_upper + 0.5
    diag = {"lam": lam, "law": law.value, "bracket": [a, b]}
    if detect(b):
        raise EstimationFailed("detector reports localization at the upper end of the bracket",
                               {**diag, "evaluations": evals})
    if not detect(a):
        raise EstimationFailed("detector reports delocalization at h = 0", {**diag, "evaluations": evals})
    while b - a > tol_h:
        mid = 0.5 * (a + b)
        if detect(mid):
            a = mid
        else:
            b = mid
    band_h = [e[0] for e in evals if e[4]]
    band = (min(band_h), max(band_h)) if band_h else None
    return CriticalPointEstimate(lam, law.value, 0.5 * (a + b), (a, b), bounds.h_lower, bounds.h_upper,
                                 evals, band)


def monotone_within_confidence(estimates: list[CriticalPointEstimate]) -> bool:
    """Estimates ordered by increasing ``lam`` are nondecreasing up to their intervals."""
    est = sorted(estimates, key=lambda e: e.lam)
    return all(e0.interval[0] <= e1.interval[1] for e0, e1 in zip(est, est[1:]))


@dataclass(frozen=True)
class SlopeReport:
    law: str
    lam: np.ndarray
    ratio: np.ndarray
    ratio_lo: np.ndarray
    ratio_hi: np.ndarray
    in_band: np.ndarray  # ratio within [2/3 - 0.05, 1 + 0.05]
    trend_slope: float  # least-squares slope of ratio vs lam


def slope_at_origin(law, lam_grid, N_grid, n_replicas: int, tol_h: float = 0.01, seed: int = 0,
                    workers: int | None = None) -> SlopeReport:
    """``h_c(lam) / lam`` on a grid of small couplings."""
    law = DisorderLaw.parse(law)
    lams = np.asarray(list(lam_grid), dtype=np.float64)
    if lams.size == 0 or np.any(lams <= 0):
        raise InvalidArgument("lambda grid must contain positive values", field="lambda")
    ests = [critical_point_estimate(float(l), law, N_grid, n_replicas, tol_h, seed, workers) for l in lams]
    ratio = np.array([e.h_hat for e in ests]) / lams
    lo = np.array([e.interval[0] for e in ests]) / lams
    hi = np.array([e.interval[1] for e in ests]) / lams
    in_band = (ratio >= 2 / 3 - 0.05) & (ratio <= 1 + 0.05)
    trend = float(np.polyfit(lams, ratio, 1)[0]) if lams.size > 1 else math.nan
    return SlopeReport(law.value, lams, ratio, lo, hi, in_band, trend)


def ratios_overlap(a: SlopeReport, b: SlopeReport, lam: float) -> bool:
    """Whether the two laws' ratio intervals overlap at ``lam``."""
    i = int(np.argmin(np.abs(a.lam - lam)))
    j = int(np.argmin(np.abs(b.lam - lam)))
    return bool(a.ratio_lo[i] <= b.ratio_hi[j] and b.ratio_lo[j] <= a.ratio_hi[i])
