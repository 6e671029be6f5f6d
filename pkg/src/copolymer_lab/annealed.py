"""Exact annealed partition functions and their Monte-Carlo quenched counterparts.

Averaging the disorder weight monomer by monomer gives, for any event on
which the occupation equals ``m``,

    E[Z(Omega_m)] = P(Omega_m) * exp(-beta * m),  beta = 2 lam h - log M(2 lam).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .core.excursion import occupation_spectrum
from .core.params import ModelParams
from .disorder import DisorderLaw, annealed_beta, h_upper, sample
from .errors import InvalidArgument
from .logmath import logsumexp
from .parallel import map_replicas
from .walks import WalkTables, log_occupation_law


@dataclass(frozen=True)
class AnnealedReport:
    beta: float
    m: np.ndarray
    log_annealed_by_m: np.ndarray
    log_annealed_total: float
    endpoint: str
    mc_mean: np.ndarray | None = field(default=None, repr=False)
    mc_stderr: np.ndarray | None = field(default=None, repr=False)
    z_scores: np.ndarray | None = field(default=None, repr=False)
    n_replicas: int = 0

    def max_abs_z(self) -> float:
        if self.z_scores is None:
            return float("nan")
        z = self.z_scores[np.isfinite(self.z_scores)]
        return float(np.max(np.abs(z))) if z.size else 0.0

    def to_record(self) -> dict:
        rec = {
            "beta": self.beta,
            "endpoint": self.endpoint,
            "m": self.m.tolist(),
            "log_annealed_by_m": self.log_annealed_by_m.tolist(),
            "log_annealed_total": self.log_annealed_total,
            "n_replicas": self.n_replicas,
        }
        if self.mc_mean is not None:
            rec["mc_mean"] = self.mc_mean.tolist()
            rec["mc_stderr"] = self.mc_stderr.tolist()
            rec["z_scores"] = [None if not math.isfinite(z) else z for z in self.z_scores.tolist()]
        return rec


def _require_copolymer(params: ModelParams) -> None:
    if params.variant != "copolymer":
        raise InvalidArgument("annealed computations are implemented for the copolymer only", field="variant")


def annealed_spectrum(params: ModelParams, law, tables: WalkTables | None = None) -> AnnealedReport:
    """Exact ``log E[Z(Omega^a, occupation = m)]`` for every even ``m``."""
    _require_copolymer(params)
    law = DisorderLaw.parse(law)
    beta = annealed_beta(law, params.lam, params.h) if params.lam > 0 else 0.0
    m = np.arange(0, params.N + 1, 2)
    by_m = log_occupation_law(params.N, params.endpoint) - beta * m
    return AnnealedReport(beta, m, by_m, logsumexp(by_m), params.endpoint)


def _replica_spectrum(r: int, params: ModelParams, law: DisorderLaw, seed: int) -> np.ndarray:
    omega = sample(law, params.N, seed, r)
    return occupation_spectrum(params, omega).logZ_by_m


def annealed_vs_quenched(params: ModelParams, law, tables: WalkTables | None, n_replicas: int, seed: int,
                         workers: int | None = None) -> AnnealedReport:
    """Monte-Carlo average of the quenched ``Z(Omega_m)`` against the exact annealed value."""
    if n_replicas < 100:
        raise InvalidArgument("n_replicas must be >= 100", field="replicas")
    exact = annealed_spectrum(params, law, tables)
    law = DisorderLaw.parse(law)
    rows = map_replicas(partial(_replica_spectrum, params=params, law=law, seed=seed), range(n_replicas), workers)
    logs = np.vstack(rows)  # (replicas, m)
    anchor = logs.max(axis=0)
    x = np.exp(logs - anchor)
    mean = np.array([math.fsum(col) for col in x.T]) / n_replicas
    var = np.array([math.fsum(c) for c in ((x - mean) ** 2).T]) / (n_replicas - 1)
    se = np.sqrt(var / n_replicas)
    exact_scaled = np.exp(exact.log_annealed_by_m - anchor)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, (mean - exact_scaled) / se, np.where(np.isclose(mean, exact_scaled, rtol=1e-12), 0.0, np.inf))
    return AnnealedReport(exact.beta, exact.m, exact.log_annealed_by_m, exact.log_annealed_total, params.endpoint,
                          mc_mean=mean * np.exp(anchor), mc_stderr=se * np.exp(anchor), z_scores=z,
                          n_replicas=n_replicas)


@dataclass(frozen=True)
class SupermartingaleReport:
    N: np.ndarray
    log_mean_Zf: np.ndarray
    beta: float
    strongly_delocalized: bool
    nonincreasing: bool
    sqrtN_ratio: float  # max/min of sqrt(N) E[Z^f_N] over the grid

    @property
    def ok(self) -> bool:
        return self.nonincreasing or not self.strongly_delocalized


def supermartingale_diagnostic(params: ModelParams, law, tables: WalkTables | None, N_grid) -> SupermartingaleReport:
    """Exact ``E[Z^f_N]`` over a grid; nonincreasing in ``N`` whenever ``h >= h_upper(lam)``."""
    _require_copolymer(params)
    law = DisorderLaw.parse(law)
    Ns = np.asarray(sorted(int(n) for n in N_grid))
    vals = np.array([annealed_spectrum(params.with_(N=int(n), endpoint="free"), law).log_annealed_total for n in Ns])
    beta = annealed_beta(law, params.lam, params.h) if params.lam > 0 else 0.0
    strong = params.lam > 0 and params.h >= h_upper(law, params.lam)
    nonincreasing = bool(np.all(np.diff(vals) <= 1e-12 * (1 + np.abs(vals[:-1]))))
    scaled = vals + 0.5 * np.log(Ns)
    ratio = float(np.exp(scaled.max() - scaled.min()))
    return SupermartingaleReport(Ns, vals, beta, strong, nonincreasing, ratio)


def enumerated_disorder_average(params: ModelParams) -> np.ndarray:
    """Exact ``E[Z(Omega_m)]`` for Bernoulli disorder by summing over all ``2**N`` sign vectors.

    Independent of the closed form: every (path, disorder) pair is visited.
    Returns the linear-scale values indexed like ``annealed_spectrum(...).m``.
    """
    from .walks import path_table

    _require_copolymer(params)
    N = params.N
    t = path_table(N)
    signs = t.steps.astype(np.float64)  # the rows run over every +-1 vector once
    keep = t.positions[:, -1] == 0 if params.endpoint == "constrained" else np.ones(len(t.steps), bool)
    delta = t.delta[keep].astype(np.float64)
    occ = t.occupation[keep]
    lw = -2.0 * params.lam * (delta @ (signs.T + params.h)) - N * math.log(2.0)
    path_avg = np.exp(lw).mean(axis=1)
    ms = np.arange(0, N + 1, 2)
    return np.array([path_avg[occ == m].sum() for m in ms])
