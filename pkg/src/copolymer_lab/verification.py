"""Oracle-equivalence and invariant suites used by ``oracle-verify`` and the test suite."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .annealed import annealed_spectrum, enumerated_disorder_average
from .core.checks import shift_identity_check
from .core.excursion import last_exit_profile, occupation_spectrum, partition, sample_occupations
from .core.params import ModelParams
from .core.position import delta_marginals, endpoint_marginal, partition_position_engine, two_sided_exit_partition
from .disorder import DisorderLaw, _generator, sample
from .logmath import logsumexp
from .walks import build_walk_tables, walk_tables_for

ORACLE_TOL = 1e-12
ENGINE_TOL = 1e-10


def _log_dev(a, b) -> float:
    """Relative deviation of log values; matching infinities count as zero."""
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    both_inf = np.isneginf(a) & np.isneginf(b)
    if np.any(np.isneginf(a) != np.isneginf(b)):
        return math.inf
    with np.errstate(invalid="ignore"):
        d = np.abs(a - b) / np.maximum(1.0, np.abs(b))
    d = np.where(both_inf, 0.0, d)
    return float(np.max(d)) if d.size else 0.0


def _prob_dev(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


@dataclass
class SuiteReport:
    name: str
    deviations: dict = field(default_factory=dict)  # quantity -> max deviation
    tolerances: dict = field(default_factory=dict)
    configs: int = 0

    def record(self, key: str, value: float, tol: float) -> None:
        self.deviations[key] = max(self.deviations.get(key, 0.0), value)
        self.tolerances[key] = tol

    @property
    def failures(self) -> list[str]:
        return [k for k, v in self.deviations.items() if not v <= self.tolerances[k]]

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values(), default=0.0)


def random_configuration(rng: np.random.Generator, N: int, seed: int, index: int):
    law = list(DisorderLaw)[index % 3]
    lam = float(rng.uniform(0, 2))
    h = float(rng.uniform(0, 2))
    return law, lam, h, sample(law, N, seed, index).values


def oracle_suite(N_values=(2, 4, 6, 8, 10, 12, 14, 16), n_configs: int = 50, seed: int = 0) -> SuiteReport:
    """Compare every partition-type operation with brute-force enumeration."""
    rep = SuiteReport("oracle")
    rng = _generator(seed, 10**6)
    for c in range(n_configs):
        N = int(N_values[c % len(N_values)])
        law, lam, h, om = random_configuration(rng, N, seed, c)
        for endpoint in ("free", "constrained"):
            p = ModelParams(lam, h, N, endpoint)
            pt = partition(p, om)
            ref = oracle.log_partition(p, om)
            rep.record("partition/excursion", _log_dev(pt.logZ, ref), ORACLE_TOL)
            rep.record("partition/position", _log_dev(partition_position_engine(p, om).logZ, ref), ORACLE_TOL)
            rep.record("spectrum", _log_dev(occupation_spectrum(p, om).logZ_by_m, oracle.log_spectrum(p, om)[1]),
                       ORACLE_TOL)
            rep.record("delta_marginals", _prob_dev(delta_marginals(p, om), oracle.delta_marginals(p, om)), ORACLE_TOL)
            m = 2 * int(rng.integers(0, N // 2 + 1))
            rep.record("delta_marginals|m", _prob_dev(delta_marginals(p, om, m), oracle.delta_marginals(p, om, m)),
                       ORACLE_TOL)
            pin = p.with_(variant="pinning", h=float(rng.uniform(-2, 2)))
            rep.record("pinning/partition", _log_dev(partition(pin, om).logZ, oracle.log_partition(pin, om)), ORACLE_TOL)
            rep.record("pinning/spectrum",
                       _log_dev(occupation_spectrum(pin, om).logZ_by_m, oracle.log_spectrum(pin, om)[1]), ORACLE_TOL)
        pf = ModelParams(lam, h, N, "free")
        prof = last_exit_profile(pf, om)
        ref_below = [oracle.log_last_exit(pf, om, int(l)) for l in prof.ell]
        rep.record("last_exit", _log_dev(prof.log_below, ref_below), ORACLE_TOL)
        ref_above = [_log_complement_last_exit(pf, om, int(l)) for l in prof.ell]
        rep.record("last_exit/complement", _log_dev(prof.log_above, ref_above), ORACLE_TOL)
        rep.record("endpoint_marginal", _prob_dev(endpoint_marginal(pf, om), oracle.endpoint_marginal(pf, om)),
                   ORACLE_TOL)
        pc = ModelParams(lam, h, N, "constrained")
        for l1 in range(0, N // 2 + 1, 2):
            for l2 in range(0, N // 2 + 1, 2):
                rep.record("two_sided", _log_dev(two_sided_exit_partition(pc, om, l1, l2),
                                                 oracle.log_two_sided(pc, om, l1, l2)), ORACLE_TOL)
        rep.configs += 1
    return rep


def _log_complement_last_exit(p: ModelParams, om, ell: int) -> float:
    t = oracle._table(p.N)
    return logsumexp(oracle.log_path_weights(p, om)[t.last_exit > ell])


def engine_agreement(N_values=(200, 500, 1000, 2000), n_configs: int = 20, seed: int = 1) -> SuiteReport:
    rep = SuiteReport("engines")
    rng = _generator(seed, 10**6)
    for c in range(n_configs):
        N = int(N_values[c % len(N_values)])
        law, lam, h, om = random_configuration(rng, N, seed, c)
        for endpoint in ("free", "constrained"):
            p = ModelParams(lam, h, N, endpoint)
            a = partition(p, om)
            b = partition_position_engine(p, om)
            rep.record(f"logZ/{endpoint}", abs(a.logZ - b.logZ) / (1.0 + abs(b.logZ)), ENGINE_TOL)
            rep.record("logZ_c/all-k", float(np.max(np.abs(a.logZ_c - b.logZ_c) / (1.0 + np.abs(b.logZ_c)))),
                       ENGINE_TOL)
        rep.configs += 1
    return rep


def annealed_enumeration_suite(N_values=(2, 4, 6, 8, 10, 12), seed: int = 2) -> SuiteReport:
    rep = SuiteReport("annealed-enumeration")
    rng = _generator(seed, 0)
    for N in N_values:
        for endpoint in ("free", "constrained"):
            p = ModelParams(float(rng.uniform(0, 2)), float(rng.uniform(0, 2)), int(N), endpoint)
            exact = np.exp(annealed_spectrum(p, DisorderLaw.BERNOULLI).log_annealed_by_m)
            enum = enumerated_disorder_average(p)
            rep.record("annealed/enumeration", float(np.max(np.abs(exact - enum) / np.maximum(enum, 1e-300))), 1e-12)
            rep.configs += 1
    return rep


# ---------------------------------------------------------------------------
# invariants


def sampler_histogram_check(params: ModelParams, omega, n_samples: int, seed: int, min_expected: float = 5.0):
    """z-scores of the sampled occupation histogram against the exact spectrum.

    Bins with expected count below ``min_expected`` are pooled into one tail bin.
    """
    spec = occupation_spectrum(params, omega)
    p = spec.probabilities()
    occ, _ = sample_occupations(params, omega, _generator(seed, 0), n_samples)
    counts = np.bincount(occ // 2, minlength=p.size)[: p.size]
    keep = p * n_samples >= min_expected
    obs = list(counts[keep]) + ([counts[~keep].sum()] if (~keep).any() else [])
    exp_p = list(p[keep]) + ([p[~keep].sum()] if (~keep).any() else [])
    obs = np.asarray(obs, dtype=np.float64)
    exp_p = np.asarray(exp_p)
    se = np.sqrt(exp_p * (1 - exp_p) / n_samples)
    z = np.where(se > 0, (obs / n_samples - exp_p) / np.where(se > 0, se, 1.0), np.where(obs > 0, np.inf, 0.0))
    return z


def invariant_suite(seed: int = 3, n_configs: int = 20, sampler_samples: int = 100_000) -> SuiteReport:
    rep = SuiteReport("invariants")
    rng = _generator(seed, 10**6)
    # renewal identity of the walk kernels: u_n = sum_k f_k u_{n-k}
    tab = build_walk_tables(2000)
    u = np.exp(tab.log_u[0::2])
    f = np.exp(tab.log_f[0::2])
    conv = np.convolve(f, u)[: u.size]
    rep.record("renewal/u=f*u", float(np.max(np.abs(conv[1:] - u[1:]) / u[1:])), 1e-12)
    # with lam = 0 the constrained partition function is u_N
    p0 = ModelParams(0.0, 0.5, 2000, "constrained")
    pt0 = partition(p0, np.zeros(2000))
    rep.record("renewal/lam=0", _log_dev(pt0.logZ_c, tab.log_u[0::2]), 1e-12)

    for c in range(n_configs):
        N = int(rng.choice([20, 60, 100, 200]))
        law, lam, h, om = random_configuration(rng, N, seed, c)
        tables = walk_tables_for(N)
        for endpoint in ("free", "constrained"):
            p = ModelParams(lam, h, N, endpoint)
            pt = partition(p, om)
            spec = occupation_spectrum(p, om)
            rep.record("spectrum/logsumexp", abs(spec.logZ - pt.logZ) / (1 + abs(pt.logZ)), ENGINE_TOL)
            lower = tables.log_p_plus[N] if endpoint == "free" else tables.log_p_pos_end0[N]
            rep.record("lower-bound", max(0.0, lower - pt.logZ), 0.0)
            hs = np.linspace(0, 2, 9)
            vals = [partition(p.with_(h=float(x)), om).logZ for x in hs]
            rep.record("h-monotone", max(0.0, float(np.max(np.diff(vals)))), 1e-12)
            m = 2 * int(rng.integers(0, N // 2 + 1))
            eps = float(rng.uniform(0, h)) if h > 0 else 0.0
            chk = shift_identity_check(p, om, eps, m)
            rep.record("shift-identity", abs(chk.log_ratio - chk.expected) / (1 + abs(chk.log_ratio)), 1e-10)
            dm = delta_marginals(p, om)
            rep.record("marginals/sum=mean", abs(float(dm.sum()) - spec.mean()), 1e-8)
        rep.configs += 1

    for endpoint in ("free", "constrained"):
        p = ModelParams(0.8, 0.3, 60, endpoint)
        om = sample(DisorderLaw.GAUSSIAN, 60, seed, 999).values
        z = sampler_histogram_check(p, om, sampler_samples, seed)
        rep.record(f"sampler/{endpoint} max|z|", float(np.max(np.abs(z))), 3.0)
    return rep
