"""Difference of disorder-averaged free energies between two disorder laws."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from ..core.excursion import partition
from ..core.params import ModelParams
from ..disorder import DisorderLaw, sample
from ..errors import InvalidArgument
from ..parallel import map_replicas
from .common import linear_fit, stderr

MIN_SIGNIFICANT = 4


@dataclass(frozen=True)
class InterpolationCurve:
    law1: str
    law2: str
    v: float
    N: int
    endpoint: str
    lam: np.ndarray
    mean1: np.ndarray
    mean2: np.ndarray
    diff: np.ndarray
    se: np.ndarray
    significant: np.ndarray
    slope: float | None
    slope_se: float | None
    intercept: float | None
    status: str  # pass | fail | inconclusive
    n_replicas: int


def _replica_F(r: int, params: ModelParams, law: DisorderLaw, seed: int) -> float:
    return partition(params, sample(law, params.N, seed, r)).free_energy


def _mean_F(params: ModelParams, law: DisorderLaw, n: int, seed: int, workers) -> tuple[float, float]:
    vals = np.array(map_replicas(partial(_replica_F, params=params, law=law, seed=seed), range(n), workers))
    return float(vals.mean()), float(stderr(vals))


def interpolation_experiment(v: float, lam_grid, law1, law2, N: int, n_replicas: int, seed: int,
                             endpoint: str = "free", slope_threshold: float = 2.5, sigma: float = 2.0,
                             workers: int | None = None) -> InterpolationCurve:
    """``|E1 F - E2 F|`` at ``h = v lam`` and its log-log slope in ``lam``.

    The two laws use unrelated seeds (``seed`` and ``seed + 1``), so the
    pooled standard error assumes independent samples.
    """
    law1, law2 = DisorderLaw.parse(law1), DisorderLaw.parse(law2)
    lams = np.asarray(list(lam_grid), dtype=np.float64)
    if lams.size == 0 or np.any(lams <= 0) or np.any(lams > 1):
        raise InvalidArgument("lambda grid must lie in (0, 1]", field="lambda")
    if v < 0:
        raise InvalidArgument("v must be >= 0", field="v")
    m1, m2, s1, s2 = [], [], [], []
    for lam in lams:
        p = ModelParams(float(lam), v * float(lam), N, endpoint)
        a, sa = _mean_F(p, law1, n_replicas, seed, workers)
        b, sb = _mean_F(p, law2, n_replicas, seed + 1, workers)
        m1.append(a), s1.append(sa), m2.append(b), s2.append(sb)
    m1, m2, s1, s2 = map(np.array, (m1, m2, s1, s2))
    diff = np.abs(m1 - m2)
    se = np.sqrt(s1**2 + s2**2)
    sig = diff >= sigma * se
    if sig.sum() < MIN_SIGNIFICANT:
        return InterpolationCurve(law1.value, law2.value, v, N, endpoint, lams, m1, m2, diff, se, sig,
                                  None, None, None, "inconclusive", n_replicas)
    x = np.log(lams[sig])
    y = np.log(diff[sig])
    fit = linear_fit(x, y, weights=(diff[sig] / se[sig]) ** 2)
    status = "pass" if fit.slope >= slope_threshold else "fail"
    return InterpolationCurve(law1.value, law2.value, v, N, endpoint, lams, m1, m2, diff, se, sig,
                              fit.slope, fit.slope_se, fit.intercept, status, n_replicas)
