from __future__ import annotations

import math

import numpy as np
import pytest

from copolymer_lab.errors import BudgetExceeded, InvalidArgument
from copolymer_lab.walks import (build_walk_tables, enumerate_paths, even_log_u, occupation_law, path_table,
                                 walk_tables_for)


def test_small_kernel_values():
    t = build_walk_tables(8)
    assert t.u(0) == 1.0
    assert t.u(2) == pytest.approx(0.5, abs=1e-15)
    assert t.u(4) == pytest.approx(3 / 8, abs=1e-15)
    assert t.f(2) == pytest.approx(0.5, abs=1e-15)
    assert t.f(4) == pytest.approx(1 / 8, abs=1e-15)
    assert t.p_plus(4) == pytest.approx(3 / 16, abs=1e-15)
    assert t.p_plus(0) == 1.0
    assert t.p_pos_end0(2) == pytest.approx(0.25, abs=1e-15)


def test_kernels_match_path_counts():
    N = 12
    tab = path_table(N)
    S = tab.positions
    t = build_walk_tables(N)
    for n in range(2, N + 1, 2):
        returns = np.mean(S[:, n] == 0)
        first = np.mean((S[:, n] == 0) & np.all(S[:, 1:n] != 0, axis=1))
        positive = np.mean(np.all(S[:, 1 : n + 1] > 0, axis=1))
        assert t.u(n) == pytest.approx(returns, rel=1e-13)
        assert t.f(n) == pytest.approx(first, rel=1e-13)
        assert t.p_plus(n) == pytest.approx(positive, rel=1e-13)


def test_even_log_u_large_and_consistent():
    lu = even_log_u(10**6)
    assert np.all(np.isfinite(lu)) and np.all(np.diff(lu) < 0)
    # Stirling: u_{2n} ~ 1 / sqrt(pi n)
    n = 10**6
    assert math.exp(lu[n]) * math.sqrt(math.pi * n) == pytest.approx(1.0, rel=1e-6)
    assert np.allclose(lu[:501], build_walk_tables(1000).log_u[0::2], rtol=0, atol=1e-14)


@pytest.mark.parametrize("endpoint", ["free", "constrained"])
def test_occupation_law_sums_to_total(endpoint):
    for N in (2, 10, 100, 1000):
        p = occupation_law(N, endpoint)
        total = 1.0 if endpoint == "free" else walk_tables_for(N).u(N)
        assert p.sum() == pytest.approx(total, rel=1e-12)


def test_occupation_law_matches_enumeration_arcsine():
    N = 10
    tab = path_table(N)
    emp = np.bincount(tab.occupation, minlength=N + 1)[0::2] / tab.steps.shape[0]
    assert np.allclose(emp, occupation_law(N, "free"), atol=1e-14)


def test_enumeration_and_validation():
    paths = list(enumerate_paths(4))
    assert len(paths) == 16
    assert sum(p.prob for p in paths) == 1
    with pytest.raises(BudgetExceeded):
        path_table(22)
    with pytest.raises(InvalidArgument):
        build_walk_tables(7)
    with pytest.raises(InvalidArgument):
        build_walk_tables(2 * 10**6)
