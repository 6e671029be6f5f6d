"""Concentration of the restricted free energy ``F_{N,omega}(Omega_m)`` and the Lipschitz bound."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from ..core.checks import lipschitz_check
from ..core.excursion import occupation_spectrum
from ..core.params import ModelParams
from ..disorder import DisorderLaw, _generator, sample
from ..errors import InvalidArgument
from ..parallel import map_replicas


@dataclass(frozen=True)
class LipschitzTrials:
    n_trials: int
    violations: int
    max_ratio: float  # max lhs / rhs over trials with rhs > 0
    max_excess: float  # max lhs - rhs

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _trial(t: int, params: ModelParams, law: DisorderLaw, seed: int) -> tuple[float, float, bool]:
    N = params.N
    rng = _generator(seed, t)
    m = 2 * int(rng.integers(0, N // 2 + 1))
    omega = sample(law, N, seed, 2 * t).values
    mode = t % 3
    if mode == 0:  # independent second draw
        other = sample(law, N, seed, 2 * t + 1).values
    elif mode == 1:  # small Gaussian perturbation
        other = omega + rng.uniform(1e-3, 0.5) * rng.standard_normal(N)
    else:  # a few coordinates changed
        other = omega.copy()
        idx = rng.choice(N, size=int(rng.integers(1, 6)), replace=False)
        other[idx] += rng.uniform(-3, 3, size=idx.size)
    return lipschitz_check(params, omega, other, m)


def lipschitz_trials(params: ModelParams, law, n_trials: int, seed: int, workers: int | None = None) -> LipschitzTrials:
    """Randomized ``(omega, omega', m)`` trials of the Lipschitz inequality."""
    law = DisorderLaw.parse(law)
    res = map_replicas(partial(_trial, params=params, law=law, seed=seed), range(n_trials), workers)
    lhs = np.array([r[0] for r in res])
    rhs = np.array([r[1] for r in res])
    ok = np.array([r[2] for r in res])
    pos = rhs > 0
    ratio = float(np.max(lhs[pos] / rhs[pos])) if pos.any() else 0.0
    return LipschitzTrials(n_trials, int((~ok).sum()), ratio, float(np.max(lhs - rhs)))


@dataclass(frozen=True)
class ConcentrationReport:
    m: int
    n_replicas: int
    lipschitz: LipschitzTrials
    mean: float
    sd: float
    sd_envelope: float  # 4 lam sqrt(m) / N
    kappa: float  # fitted sub-Gaussian constant: tail <= exp(-u^2 N^2 / (kappa lam^2 m))
    tail_u: np.ndarray  # in units of sd
    tail_empirical: np.ndarray
    tail_envelope: np.ndarray
    passed: bool


def _replica_F(r: int, params: ModelParams, law: DisorderLaw, m: int, seed: int) -> float:
    return occupation_spectrum(params, sample(law, params.N, seed, r)).free_energy(m)


def concentration_experiment(params: ModelParams, law, m: int, n_replicas: int, seed: int,
                             n_pairs: int | None = None, workers: int | None = None) -> ConcentrationReport:
    """Lipschitz trials plus an empirical sub-Gaussian fit of the upper tail.

    ``kappa`` is fitted by matching the variance proxy to the sample variance,
    ``kappa = 2 sd^2 N^2 / (lam^2 m)``; the envelope ``exp(-u^2 / (2 sd^2))``
    is then compared with the empirical upper tail at ``u = 2 sd`` and ``3 sd``.
    """
    law = DisorderLaw.parse(law)
    N = params.N
    if m % 2 or not 0 <= m <= N:
        raise InvalidArgument(f"m must be even in [0, N], got {m}", field="m")
    if n_replicas < 10:
        raise InvalidArgument("n_replicas must be >= 10", field="replicas")
    lip = lipschitz_trials(params, law, n_pairs or n_replicas, seed + 1, workers)
    F = np.array(map_replicas(partial(_replica_F, params=params, law=law, m=m, seed=seed), range(n_replicas), workers))
    mean = float(F.mean())
    sd = float(F.std(ddof=1))
    sd_env = 4.0 * params.lam * math.sqrt(m) / N
    u = np.array([2.0, 3.0])
    dev = F - mean
    emp = np.array([(dev > k * sd).mean() for k in u]) if sd > 0 else np.zeros(2)
    if sd > 0 and params.lam > 0 and m > 0:
        kappa = 2.0 * sd**2 * N**2 / (params.lam**2 * m)
        env = np.exp(-(u**2) / 2.0)
    else:
        kappa, env = 0.0, np.ones(2)
    passed = lip.passed and sd <= sd_env + 1e-15 and bool(np.all(emp <= env))
    return ConcentrationReport(m, n_replicas, lip, mean, sd, sd_env, kappa, u, emp, env, passed)
