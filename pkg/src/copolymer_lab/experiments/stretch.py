"""Growth of ``N^{1/2 - delta'} Z^f_{tau_N}`` along the atypical-stretch stopping times."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from ..core.longrange import constrained_log_partition_longrange, free_log_partition_longrange
from ..disorder import DisorderLaw, DisorderStream, atypical_stretch_scan, delta_exponent
from ..errors import InvalidArgument
from ..parallel import map_replicas
from .common import check_grid


@dataclass(frozen=True)
class StretchGrowthReport:
    lam: float
    h: float
    q: float
    law: str
    delta: float
    delta_prime: float
    N_grid: np.ndarray
    tau: np.ndarray  # (replicas, grid)
    log_Zf_tau: np.ndarray  # (replicas, grid)
    log_statistic: np.ndarray  # (1/2 - delta') log N + log Z^f_tau
    median_log_statistic: np.ndarray
    median_log_tau_ratio: np.ndarray  # median of log tau_N / log N
    fraction_increasing: float  # replicas whose statistic increases along the grid
    median_increasing: bool
    tau_ratio_ok: bool  # last median ratio in [0.8, 1.2]

    @property
    def passed(self) -> bool:
        return self.median_increasing and self.tau_ratio_ok


def _replica(r: int, lam: float, h: float, q: float, law: DisorderLaw, Ns: np.ndarray, seed: int,
             max_length: int) -> tuple[np.ndarray, np.ndarray]:
    stream = DisorderStream(law, seed, r, max_length=max_length)
    taus = np.array([atypical_stretch_scan(stream, h, q, int(N), lam=lam).tau_N for N in Ns])
    T = int(taus.max())
    omega = stream.values(T)
    logZc = constrained_log_partition_longrange(omega, lam, h, T)
    logZf = np.array([free_log_partition_longrange(omega, lam, h, int(t), logZc) for t in taus])
    return taus, logZf


def stretch_growth_experiment(lam: float, h: float, law, q: float, N_grid, n_replicas: int, seed: int,
                              delta_prime: float = 0.0, max_length: int = 50_000_000,
                              workers: int | None = None) -> StretchGrowthReport:
    law = DisorderLaw.parse(law)
    if not lam > 0:
        raise InvalidArgument("lambda must be > 0", field="lambda")
    if not q < h:
        raise InvalidArgument(f"need q < h, got q={q}, h={h}", field="q")
    Ns = check_grid("N", N_grid, minimum=2)
    delta = delta_exponent(law, lam, h)
    rows = map_replicas(partial(_replica, lam=lam, h=h, q=q, law=law, Ns=Ns, seed=seed, max_length=max_length),
                        range(n_replicas), workers)
    tau = np.vstack([r[0] for r in rows])
    lz = np.vstack([r[1] for r in rows])
    logN = np.log(Ns.astype(np.float64))
    stat = (0.5 - delta_prime) * logN + lz
    med = np.median(stat, axis=0)
    ratio = np.median(np.log(tau) / logN, axis=0)
    frac = float(np.mean(np.all(np.diff(stat, axis=1) > 0, axis=1))) if Ns.size > 1 else math.nan
    return StretchGrowthReport(lam, h, q, law.value, delta, delta_prime, Ns, tau, lz, stat, med, ratio, frac,
                               bool(np.all(np.diff(med) > 0)), bool(0.8 <= ratio[-1] <= 1.2))
