from __future__ import annotations

import math

import numpy as np
import pytest

from copolymer_lab.annealed import (annealed_spectrum, annealed_vs_quenched, enumerated_disorder_average,
                                    supermartingale_diagnostic)
from copolymer_lab.core.params import ModelParams
from copolymer_lab.disorder import h_upper
from copolymer_lab.errors import InvalidArgument
from copolymer_lab.walks import occupation_law


@pytest.mark.parametrize("endpoint", ["free", "constrained"])
@pytest.mark.parametrize("N", [2, 6, 10, 12])
def test_double_enumeration(endpoint, N):
    p = ModelParams(0.8, 0.35, N, endpoint)
    exact = np.exp(annealed_spectrum(p, "bernoulli").log_annealed_by_m)
    assert np.allclose(enumerated_disorder_average(p), exact, rtol=1e-13, atol=0)


def test_beta_and_shape():
    rep = annealed_spectrum(ModelParams(1.0, 1.5, 20), "gaussian")
    assert rep.beta == pytest.approx(1.0)
    rep0 = annealed_spectrum(ModelParams(0.0, 1.5, 20), "gaussian")
    assert np.allclose(np.exp(rep0.log_annealed_by_m), occupation_law(20, "free"))
    rc = annealed_spectrum(ModelParams(1.0, 1.5, 20, "constrained"), "gaussian")
    assert np.allclose(np.diff(rc.log_annealed_by_m), -2 * rc.beta)


def test_lambda_zero_monte_carlo_is_exact():
    rep = annealed_vs_quenched(ModelParams(0.0, 0.3, 20), "bernoulli", None, 100, 0)
    assert np.allclose(rep.mc_mean, np.exp(rep.log_annealed_by_m), rtol=1e-12)
    assert rep.max_abs_z() == 0.0
    with pytest.raises(InvalidArgument):
        annealed_vs_quenched(ModelParams(0.5, 0.3, 20), "bernoulli", None, 50, 0)


def test_monte_carlo_light_tails():
    rep = annealed_vs_quenched(ModelParams(0.15, 0.3, 20), "bernoulli", None, 2000, 3)
    assert rep.max_abs_z() <= 3.5
    rec = rep.to_record()
    assert rec["n_replicas"] == 2000 and len(rec["z_scores"]) == 11


def test_supermartingale():
    lam = 1.0
    Ns = list(range(20, 201, 20))
    strict = supermartingale_diagnostic(ModelParams(lam, 1.2, 20), "gaussian", None, Ns)
    assert strict.strongly_delocalized and strict.nonincreasing and strict.ok
    assert np.all(np.diff(strict.log_mean_Zf) < 0)
    edge = supermartingale_diagnostic(ModelParams(lam, h_upper("gaussian", lam), 20), "gaussian", None, Ns)
    assert np.allclose(edge.log_mean_Zf, 0.0, atol=1e-12)
    below = supermartingale_diagnostic(ModelParams(lam, 0.5, 20), "gaussian", None, Ns)
    assert not below.strongly_delocalized and not below.nonincreasing and below.ok
