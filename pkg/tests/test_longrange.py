from __future__ import annotations

import numpy as np
import pytest

from copolymer_lab.core import longrange
from copolymer_lab.core.excursion import free_log_partition_profile, partition
from copolymer_lab.core.params import ModelParams
from copolymer_lab.disorder import DisorderLaw, sample


@pytest.mark.parametrize("law", list(DisorderLaw))
@pytest.mark.parametrize("N", [2, 10, 600, 3000])
def test_matches_exact_engine(law, N):
    om = sample(law, N, 21).values
    for lam, h in ((0.0, 0.3), (0.5, 0.4), (1.7, 1.2)):
        pt = partition(ModelParams(lam, h, N, "free"), om)
        lz = longrange.constrained_log_partition_longrange(om, lam, h, N)
        assert np.max(np.abs(lz - pt.logZ_c) / (1 + np.abs(pt.logZ_c))) < 1e-11
        zf = longrange.free_log_partition_longrange(om, lam, h, N, lz)
        assert abs(zf - pt.logZ_f) <= 1e-11 * (1 + abs(pt.logZ_f))


def test_free_value_from_longer_table():
    N, T = 400, 1000
    om = sample("bernoulli", T, 2).values
    lz = longrange.constrained_log_partition_longrange(om, 0.5, 0.4, T)
    pt = partition(ModelParams(0.5, 0.4, T, "free"), om)
    Ns = np.array([100, 400, 1000])
    prof = free_log_partition_profile(pt, om, Ns)
    for n, ref in zip(Ns, prof):
        assert longrange.free_log_partition_longrange(om, 0.5, 0.4, int(n), lz) == pytest.approx(ref, rel=1e-11)


def test_python_leaf_matches_compiled_leaf(monkeypatch):
    N = 1200
    om = sample("gaussian", N, 4).values
    fast = longrange.constrained_log_partition_longrange(om, 1.0, 0.5, N)
    monkeypatch.setattr(longrange, "_leaf_kernel", longrange._leaf_kernel_py)
    slow = longrange.constrained_log_partition_longrange(om, 1.0, 0.5, N)
    assert np.allclose(fast, slow, rtol=1e-13, atol=1e-13)


def test_large_N_is_finite():
    N = 200_000
    om = sample("bernoulli", N, 1).values
    lz = longrange.constrained_log_partition_longrange(om, 0.5, 0.4, N)
    assert np.all(np.isfinite(lz))
    assert np.all(np.diff(lz) < 5.0)
