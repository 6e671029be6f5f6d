"""Property-based checks of the exact engines (hypothesis)."""

from __future__ import annotations

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from copolymer_lab import oracle
from copolymer_lab.core.checks import lipschitz_check
from copolymer_lab.core.excursion import occupation_spectrum, partition
from copolymer_lab.core.params import ModelParams
from copolymer_lab.core.position import partition_position_engine
from copolymer_lab.walks import walk_tables_for

small_N = st.integers(1, 6).map(lambda k: 2 * k)
lam_s = st.floats(0, 2, allow_nan=False)
h_s = st.floats(0, 2, allow_nan=False)
endpoint_s = st.sampled_from(["free", "constrained"])


def omega_s(N):
    return st.lists(st.floats(-3, 3, allow_nan=False), min_size=N, max_size=N).map(np.array)


@settings(max_examples=60, deadline=None)
@given(N=small_N, lam=lam_s, h=h_s, endpoint=endpoint_s, data=st.data())
def test_partition_equals_enumeration(N, lam, h, endpoint, data):
    om = data.draw(omega_s(N))
    p = ModelParams(lam, h, N, endpoint)
    ref = oracle.log_partition(p, om)
    assert abs(partition(p, om).logZ - ref) <= 1e-12 * max(1, abs(ref))
    assert abs(partition_position_engine(p, om).logZ - ref) <= 1e-12 * max(1, abs(ref))


@settings(max_examples=40, deadline=None)
@given(N=st.integers(2, 40).map(lambda k: 2 * k), lam=lam_s, h=h_s, endpoint=endpoint_s, data=st.data())
def test_monotone_in_h_and_lower_bound(N, lam, h, endpoint, data):
    om = data.draw(omega_s(N))
    p = ModelParams(lam, h, N, endpoint)
    a = partition(p, om).logZ
    b = partition(p.with_(h=h + 0.25), om).logZ
    assert b <= a + 1e-12
    t = walk_tables_for(N)
    floor = t.log_u[N] if endpoint == "free" else t.log_u[N] - math.log(N / 2 + 1)
    assert a >= floor - 1e-12  # non-negative paths carry weight one


@settings(max_examples=30, deadline=None)
@given(N=st.integers(2, 25).map(lambda k: 2 * k), lam=lam_s, h=h_s, data=st.data())
def test_lipschitz_property(N, lam, h, data):
    om = data.draw(omega_s(N))
    om2 = data.draw(omega_s(N))
    m = 2 * data.draw(st.integers(0, N // 2))
    lhs, rhs, ok = lipschitz_check(ModelParams(lam, h, N), om, om2, m)
    assert ok


@settings(max_examples=30, deadline=None)
@given(N=st.integers(2, 30).map(lambda k: 2 * k), lam=lam_s, h=h_s, endpoint=endpoint_s, data=st.data())
def test_spectrum_partitions_total(N, lam, h, endpoint, data):
    om = data.draw(omega_s(N))
    p = ModelParams(lam, h, N, endpoint)
    spec = occupation_spectrum(p, om)
    assert abs(spec.logZ - partition(p, om).logZ) <= 1e-11 * (1 + abs(spec.logZ))
    assert abs(spec.probabilities().sum() - 1) < 1e-12
