"""Small-budget runs of the disorder-averaged experiments (the full-size runs live in test_acceptance)."""

from __future__ import annotations

import math

import numpy as np
import pytest

from copolymer_lab.core.params import ModelParams
from copolymer_lab.errors import EstimationFailed, InvalidArgument
from copolymer_lab.experiments.common import check_grid, linear_fit, result_record
from copolymer_lab.experiments.concentration import concentration_experiment, lipschitz_trials
from copolymer_lab.experiments.free_energy import (critical_point_estimate, free_energy_estimate,
                                                   monotone_within_confidence)
from copolymer_lab.experiments.interpolation import interpolation_experiment
from copolymer_lab.experiments.meander import ks_against_meander, meander_cdf, meander_endpoint_check
from copolymer_lab.experiments.stretch import stretch_growth_experiment
from copolymer_lab.experiments.tails import (deloc_tail_experiment, deloc_tail_interior, last_exit_experiment,
                                             two_sided_experiment)
from copolymer_lab.parallel import anchored_mean, map_replicas


def _square(r):
    return r * r


def test_map_replicas_order_independent_of_workers():
    assert map_replicas(_square, range(10), 1) == map_replicas(_square, range(10), 2) == [r * r for r in range(10)]


def test_anchored_mean():
    lv = np.log([1e-300, 2e-300, 3e-300])
    lm, rel = anchored_mean(lv)
    assert math.exp(lm) == pytest.approx(2e-300, rel=1e-14)
    assert rel == pytest.approx(math.sqrt(1 / 3) / 2, rel=1e-12)


def test_linear_fit_and_grid():
    fit = linear_fit([0, 1, 2, 3], [1, 3, 5, 7])
    assert fit.slope == pytest.approx(2) and fit.intercept == pytest.approx(1)
    assert list(check_grid("N", [2, 4, 6])) == [2, 4, 6]
    with pytest.raises(InvalidArgument):
        check_grid("N", [2, 3])
    rec = result_record("x", {"a": np.float64(1.5), "b": np.array([1, 2]), "c": math.inf}, 1, True)
    assert rec["schema_version"] == 1 and rec["result"] == {"a": 1.5, "b": [1, 2], "c": None}


def test_free_energy_localized_and_delocalized():
    Ns = list(range(20, 121, 20))
    loc = free_energy_estimate(1.0, 0.1, "gaussian", Ns, 50, 0)
    assert loc.localized_flag and loc.F_inf > 0
    deloc = free_energy_estimate(1.0, 1.5, "gaussian", Ns, 50, 0)
    assert not deloc.localized_flag and deloc.constrained_bound_ok()
    zero = free_energy_estimate(0.0, 0.5, "gaussian", Ns, 50, 0)
    assert zero.F_inf == 0.0 and not zero.localized_flag
    with pytest.raises(InvalidArgument):
        free_energy_estimate(1.0, 0.1, "gaussian", Ns, 10, 0)


def test_free_energy_deterministic():
    a = free_energy_estimate(0.7, 0.3, "bernoulli", [20, 40, 60], 50, 9)
    b = free_energy_estimate(0.7, 0.3, "bernoulli", [20, 40, 60], 50, 9)
    assert np.array_equal(a.mean_Ff, b.mean_Ff) and a.F_inf == b.F_inf


def test_critical_point_small():
    est = critical_point_estimate(1.0, "gaussian", list(range(40, 201, 40)), 50, tol_h=0.05, seed=1)
    assert est.interval[1] - est.interval[0] <= 0.05
    assert 0 < est.h_hat < est.h_upper + 0.5
    assert len(est.evaluations) >= 3
    other = critical_point_estimate(0.5, "gaussian", list(range(40, 201, 40)), 50, tol_h=0.05, seed=1)
    assert monotone_within_confidence([est, other])
    with pytest.raises(EstimationFailed):
        # at N = 2 the detector cannot see localization even at h = 0
        critical_point_estimate(0.05, "gaussian", [2, 4], 50, tol_h=0.05, seed=1)


def test_tail_experiments_small():
    p = ModelParams(1.0, 1.5, 60)
    curve = deloc_tail_experiment(p, "gaussian", range(2, 21, 2), 20, 0)
    assert curve.passed and curve.reference[0] == pytest.approx(math.exp(-2) / (1 - math.exp(-1)))
    interior = deloc_tail_interior(p, "gaussian", range(2, 41, 2), 20, 0)
    assert interior.passed and interior.fit_slope < 0
    with pytest.raises(InvalidArgument):
        deloc_tail_interior(p, "gaussian", [2, 4], 20, 0)
    le = last_exit_experiment(ModelParams(1.0, 1.5, 200), "gaussian", range(4, 65, 4), 20, 0)
    assert le.fit_slope < 0 and np.all(np.diff(le.mean) <= 1e-15)
    ts = two_sided_experiment(ModelParams(1.0, 1.5, 40, "constrained"), "gaussian", range(0, 21, 2), 10, 0)
    assert ts.passed is None and ts.mean[-1] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(InvalidArgument):
        last_exit_experiment(ModelParams(1.0, 1.5, 40, "constrained"), "gaussian", [4], 10, 0)


def test_concentration_small():
    p = ModelParams(1.0, 0.5, 40)
    lip = lipschitz_trials(p, "gaussian", 30, 0)
    assert lip.passed and lip.violations == 0 and lip.max_ratio <= 1
    rep = concentration_experiment(p, "gaussian", 10, 60, 0, n_pairs=20)
    assert rep.sd <= rep.sd_envelope and rep.lipschitz.passed
    with pytest.raises(InvalidArgument):
        concentration_experiment(p, "gaussian", 11, 60, 0)


def test_interpolation_small():
    cur = interpolation_experiment(0.8, [0.2, 0.4, 0.6, 0.8], "bernoulli", "gaussian", 40, 30, 0)
    assert cur.status in ("pass", "fail", "inconclusive")
    assert np.allclose(cur.diff, np.abs(cur.mean1 - cur.mean2))
    with pytest.raises(InvalidArgument):
        interpolation_experiment(0.8, [0.5, 1.5], "bernoulli", "gaussian", 40, 30, 0)


def test_meander_tools():
    assert meander_cdf(0.0) == 0.0 and meander_cdf(10.0) == pytest.approx(1.0)
    N = 400
    s = np.arange(-N, N + 1)
    # discretized meander law on the even lattice: KS distance should be small
    x = (s + 1) / math.sqrt(N)
    cdf = meander_cdf(np.where(s % 2 == 0, x, (s) / math.sqrt(N)))
    prob = np.where(s % 2 == 0, np.diff(np.concatenate(([0.0], cdf))), 0.0)
    prob = np.where(s >= 0, prob, 0.0)
    ks, _ = ks_against_meander(prob / prob.sum(), N)
    assert ks < 0.02
    rep = meander_endpoint_check(ModelParams(1.0, 1.5, 100), "gaussian", 10, 0)
    assert 0 <= rep.ks <= 1 and rep.negative_mass < 0.2
    with pytest.raises(InvalidArgument):
        meander_endpoint_check(ModelParams(1.0, 1.5, 100, "constrained"), "gaussian", 10, 0)


def test_stretch_small():
    rep = stretch_growth_experiment(0.5, 0.4, "bernoulli", -0.2, [100, 1000], 3, 0)
    assert rep.tau.shape == (3, 2) and np.all(rep.tau[:, 1] >= rep.tau[:, 0])
    assert np.all(np.isfinite(rep.log_Zf_tau))
    with pytest.raises(InvalidArgument):
        stretch_growth_experiment(0.5, 0.4, "bernoulli", 0.5, [100], 2, 0)
