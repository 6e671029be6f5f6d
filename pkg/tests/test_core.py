from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.stats import binom

from copolymer_lab import oracle
from copolymer_lab.core.checks import lipschitz_check, shift_identity_check
from copolymer_lab.core.excursion import (last_exit_partition, last_exit_profile, occupation_spectrum, partition,
                                          sample_occupations, sample_skeleton)
from copolymer_lab.core.params import ModelParams
from copolymer_lab.core.position import (column_masses, delta_marginals, endpoint_marginal,
                                         partition_position_engine, two_sided_exit_partition)
from copolymer_lab.disorder import DisorderLaw, _generator, sample
from copolymer_lab.errors import BudgetExceeded, InvalidArgument
from copolymer_lab.walks import occupation_law, walk_tables_for

ENDPOINTS = ("free", "constrained")


def rel_log(a, b):
    return abs(a - b) / max(1.0, abs(b))


def test_two_step_example():
    p = ModelParams(0.5, 0.0, 2, "constrained")
    Z = math.exp(partition(p, [1.0, 1.0]).logZ)
    assert Z == pytest.approx((1 + math.exp(-2)) / 4, rel=1e-15)
    assert Z == pytest.approx(0.2838338, abs=1e-7)  # not the rounded 0.283838 (ledgered)
    assert math.exp(partition_position_engine(p, [1.0, 1.0]).logZ) == pytest.approx(Z, rel=1e-14)
    assert math.exp(oracle.log_partition(p, [1.0, 1.0])) == pytest.approx(Z, rel=1e-14)


@pytest.mark.parametrize("endpoint", ENDPOINTS)
def test_lambda_zero(endpoint):
    N = 50
    om = sample("gaussian", N, 1).values
    p = ModelParams(0.0, 0.7, N, endpoint)
    pt = partition(p, om)
    t = walk_tables_for(N)
    assert pt.logZ == pytest.approx(0.0 if endpoint == "free" else t.log_u[N], abs=1e-13)
    spec = occupation_spectrum(p, om)
    assert np.allclose(np.exp(spec.logZ_by_m), occupation_law(N, endpoint), rtol=1e-12)
    if endpoint == "free":
        assert np.allclose(delta_marginals(p, om), 0.5, atol=1e-13)
        n = np.arange(-N, N + 1)
        ref = np.where((n + N) % 2 == 0, binom.pmf((n + N) // 2, N, 0.5), 0.0)
        assert np.allclose(endpoint_marginal(p, om), ref, atol=1e-14)
        masses = column_masses(p, om)
        for k in (1, 7, 20):
            refk = np.where((n + k) % 2 == 0, binom.pmf((n + k) // 2, k, 0.5), 0.0)
            refk[np.abs(n) > k] = 0.0
            assert np.allclose(masses[k], refk, atol=1e-14)


@pytest.mark.parametrize("law", list(DisorderLaw))
@pytest.mark.parametrize("N", [2, 6, 12])
def test_against_oracle(law, N):
    rng = np.random.default_rng(N)
    for endpoint in ENDPOINTS:
        for variant in ("copolymer", "pinning"):
            h = float(rng.uniform(0, 2)) if variant == "copolymer" else float(rng.uniform(-1, 1))
            p = ModelParams(float(rng.uniform(0, 2)), h, N, endpoint, variant)
            om = sample(law, N, 7, N).values
            ref = oracle.log_partition(p, om)
            assert rel_log(partition(p, om).logZ, ref) < 1e-12
            assert rel_log(partition_position_engine(p, om).logZ, ref) < 1e-12
            m_ref, lz_ref = oracle.log_spectrum(p, om)
            spec = occupation_spectrum(p, om)
            mask = np.isfinite(lz_ref)
            assert np.array_equal(np.isfinite(spec.logZ_by_m), mask)
            assert np.max(np.abs(spec.logZ_by_m[mask] - lz_ref[mask])) < 1e-12 * max(1, np.max(np.abs(lz_ref[mask])))
            assert np.allclose(delta_marginals(p, om), oracle.delta_marginals(p, om), atol=1e-12)


def test_restricted_partitions_against_oracle():
    N = 12
    om = sample("gaussian", N, 3).values
    pf = ModelParams(0.9, 0.4, N, "free")
    prof = last_exit_profile(pf, om)
    for ell in range(0, N + 1, 2):
        assert rel_log(prof.log_below[ell // 2], oracle.log_last_exit(pf, om, ell)) < 1e-12
    assert last_exit_partition(pf, om, 4) == pytest.approx(oracle.log_last_exit(pf, om, 4), rel=1e-12)
    assert prof.log_below[-1] == pytest.approx(partition(pf, om).logZ, rel=1e-14)
    assert prof.log_below[0] == pytest.approx(walk_tables_for(N).log_u[N], rel=1e-14)
    assert np.allclose(endpoint_marginal(pf, om), oracle.endpoint_marginal(pf, om), atol=1e-13)
    pc = ModelParams(0.9, 0.4, N, "constrained")
    for l1, l2 in [(2, 4), (0, 0), (6, 2), (4, 6)]:
        assert rel_log(two_sided_exit_partition(pc, om, l1, l2), oracle.log_two_sided(pc, om, l1, l2)) < 1e-12
    assert two_sided_exit_partition(pc, om, N // 2, N // 2) == pytest.approx(partition(pc, om).logZ, rel=1e-13)


def test_engines_agree_large_N():
    for law in DisorderLaw:
        N = 200
        om = sample(law, N, 8).values
        for endpoint in ENDPOINTS:
            p = ModelParams(1.3, 0.6, N, endpoint)
            a, b = partition(p, om), partition_position_engine(p, om)
            assert abs(a.logZ - b.logZ) <= 1e-10 * (1 + abs(b.logZ))


def test_spectrum_consistency_and_m0():
    N = 100
    om = sample("bernoulli", N, 2).values
    t = walk_tables_for(N)
    for endpoint in ENDPOINTS:
        p = ModelParams(1.0, 0.4, N, endpoint)
        spec = occupation_spectrum(p, om)
        assert spec.logZ == pytest.approx(partition(p, om).logZ, rel=1e-12)
        m0 = t.log_u[N] if endpoint == "free" else t.log_u[N] - math.log(N / 2 + 1)
        assert spec.logZ_by_m[0] == pytest.approx(m0, rel=1e-13)
        assert float(delta_marginals(p, om).sum()) == pytest.approx(spec.mean(), rel=1e-9)
    with pytest.raises(BudgetExceeded):
        occupation_spectrum(ModelParams(1.0, 0.4, 700), np.zeros(700))


def test_shift_identity_and_lipschitz(rng):
    N = 100
    om = rng.normal(size=N)
    p = ModelParams(1.1, 0.8, N, "free")
    for m in (0, 10, 50, 100):
        chk = shift_identity_check(p, om, 0.3, m)
        assert chk.ok
        assert shift_identity_check(p, om, 0.0, m).log_ratio == 0.0
    with pytest.raises(InvalidArgument):
        shift_identity_check(p, om, 1.0, 10)
    lhs, rhs, ok = lipschitz_check(p, om, om, 20)
    assert lhs == 0 and ok
    lhs, rhs, ok = lipschitz_check(p, om, rng.normal(size=N), 0)
    assert lhs == pytest.approx(0.0, abs=1e-15) and ok
    for _ in range(10):
        lhs, rhs, ok = lipschitz_check(p, om, om + rng.normal(scale=0.2, size=N), int(rng.integers(0, 51)) * 2)
        assert ok


def test_sampler_determinism_and_symmetry():
    N = 40
    om = sample("gaussian", N, 4).values
    p = ModelParams(0.8, 0.3, N, "free")
    a = sample_occupations(p, om, _generator(1, 2), 500)
    b = sample_occupations(p, om, _generator(1, 2), 500)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    sk1 = [sample_skeleton(p, om, _generator(5, 0)) for _ in range(3)]
    sk2 = [sample_skeleton(p, om, _generator(5, 0)) for _ in range(3)]
    assert sk1 == sk2
    g = _generator(9, 0)
    p0 = ModelParams(0.0, 0.0, N, "constrained")
    signs = np.concatenate([sample_skeleton(p0, om, g).signs for _ in range(2000)])
    assert abs(signs.mean()) < 4 / math.sqrt(signs.size)
    for sk in sk1:
        assert sk.zeros[0] == 0 and all(b > a for a, b in zip(sk.zeros, sk.zeros[1:]))
        assert 0 <= sk.occupation <= N and sk.occupation % 2 == 0


def test_validation():
    with pytest.raises(InvalidArgument, match="lambda"):
        ModelParams(-1.0, 0.0, 10)
    with pytest.raises(InvalidArgument) as exc:
        ModelParams(1.0, 0.0, 11)
    assert exc.value.field == "N"
    with pytest.raises(InvalidArgument):
        ModelParams(1.0, -0.1, 10)
    ModelParams(1.0, -0.1, 10, variant="pinning")
    with pytest.raises(InvalidArgument):
        partition(ModelParams(1.0, 0.0, 10), np.zeros(8))
