"""Simple random walk combinatorics in log-domain, plus a brute-force path enumerator.

All tables are indexed by time: ``log_u[k]`` is ``log P(S_k = 0)`` and is
``-inf`` at odd ``k``. Probabilities are never formed in linear scale during
construction, so tables up to ``n_max = 10**6`` are exact to rounding.

The zero-sign convention: when ``S_n = 0`` the step is counted on the side
of ``S_{n-1}``. Equivalently ``Delta_n = 1`` iff the edge ``(S_{n-1}, S_n)``
lies in the lower half-plane.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, NamedTuple

import numpy as np

from .errors import BudgetExceeded, InvalidArgument, require_even

ENUMERATION_CAP = 20
N_MAX_TABLES = 10**6


@dataclass(frozen=True)
class WalkTables:
    n_max: int
    log_u: np.ndarray
    log_f: np.ndarray
    log_p_plus: np.ndarray
    log_p_pos_end0: np.ndarray

    def u(self, k: int) -> float:
        return float(np.exp(self.log_u[k]))

    def f(self, k: int) -> float:
        return float(np.exp(self.log_f[k]))

    def p_plus(self, m: int) -> float:
        return float(np.exp(self.log_p_plus[m]))

    def p_pos_end0(self, k: int) -> float:
        return float(np.exp(self.log_p_pos_end0[k]))

    def covers(self, n: int) -> bool:
        return n <= self.n_max


def even_log_u(half: int) -> np.ndarray:
    """``log u_{2j}`` for ``j = 0..half`` from ``u_{2j} = u_{2j-2} (2j-1)/(2j)``; no size cap."""
    j = np.arange(1, half + 1, dtype=np.float64)
    return np.concatenate(([0.0], np.cumsum(np.log1p(-0.5 / j))))


def build_walk_tables(n_max: int) -> WalkTables:
    """Return log-probability tables for return, first-return and positivity events.

    ``log_p_plus[m] = log P(S_1 > 0, ..., S_m > 0)``; at odd ``m`` this equals
    the value at ``m - 1`` since the walk cannot sit at zero at odd times.
    ``log_p_plus[0] = 0`` (empty event).
    """
    require_even("n_max", n_max, minimum=2)
    if n_max > N_MAX_TABLES:
        raise InvalidArgument(f"n_max must be <= {N_MAX_TABLES}, got {n_max}", field="n_max")

    half = n_max // 2
    j = np.arange(1, half + 1, dtype=np.float64)
    log_u_even = even_log_u(half)

    log_u = np.full(n_max + 1, -np.inf)
    log_u[0::2] = log_u_even

    # f_{2j} = u_{2j} / (2j - 1)
    log_f = np.full(n_max + 1, -np.inf)
    log_f[2::2] = log_u_even[1:] - np.log(2.0 * j - 1.0)

    # P(S_i > 0, i <= 2j) = u_{2j} / 2 for j >= 1
    log_p_plus = np.empty(n_max + 1)
    log_p_plus[0] = 0.0
    log_p_plus[2::2] = log_u_even[1:] - np.log(2.0)
    log_p_plus[1::2] = np.concatenate(([np.log(0.5)], log_p_plus[2:-1:2]))

    log_p_pos_end0 = np.full(n_max + 1, -np.inf)
    log_p_pos_end0[2::2] = log_f[2::2] - np.log(2.0)

    for arr in (log_u, log_f, log_p_plus, log_p_pos_end0):
        arr.setflags(write=False)
    return WalkTables(n_max, log_u, log_f, log_p_plus, log_p_pos_end0)


_TABLE_CACHE: dict[int, WalkTables] = {}


def walk_tables_for(n: int) -> WalkTables:
    """Cached tables covering at least ``n`` (rounded up to a power-of-two size)."""
    size = 64
    while size < n:
        size *= 2
    tables = _TABLE_CACHE.get(size)
    if tables is None:
        tables = build_walk_tables(min(size, N_MAX_TABLES))
        _TABLE_CACHE[size] = tables
    return tables


def occupation_law(N: int, endpoint: str = "free") -> np.ndarray:
    """Law of the lower half-plane occupation over ``m = 0, 2, ..., N``.

    Free endpoint: ``P(N_occ = m) = u_m u_{N-m}``. Constrained endpoint:
    ``P(N_occ = m, S_N = 0) = u_N / (N/2 + 1)``, flat in ``m``.
    """
    return np.exp(log_occupation_law(N, endpoint))


def log_occupation_law(N: int, endpoint: str = "free") -> np.ndarray:
    require_even("N", N)
    if endpoint not in ("free", "constrained"):
        raise InvalidArgument(f"endpoint must be 'free' or 'constrained', got {endpoint!r}", field="endpoint")
    if N == 0:
        return np.zeros(1)
    tables = walk_tables_for(N)
    m = np.arange(0, N + 1, 2)
    if endpoint == "free":
        return tables.log_u[m] + tables.log_u[N - m]
    return np.full(m.size, tables.log_u[N] - np.log(N / 2 + 1))


# ---------------------------------------------------------------------------
# brute-force enumeration


@dataclass(frozen=True)
class EnumeratedPath:
    steps: tuple[int, ...]
    delta: tuple[int, ...]
    prob: Fraction
    end_at_zero: bool
    occupation: int
    last_exit: int


class PathTable(NamedTuple):
    """All ``2**N`` paths as arrays, row ``i`` encodes the bits of ``i``."""

    steps: np.ndarray  # (2**N, N) int8, +1/-1
    positions: np.ndarray  # (2**N, N+1) int32, S_0..S_N
    delta: np.ndarray  # (2**N, N) bool
    occupation: np.ndarray  # (2**N,) int
    last_exit: np.ndarray  # (2**N,) int


def _check_enum_size(N: int) -> None:
    require_even("N", N)
    if N > ENUMERATION_CAP:
        raise BudgetExceeded(f"enumeration of 2**{N} paths exceeds the cap N <= {ENUMERATION_CAP}")


def delta_from_positions(positions: np.ndarray) -> np.ndarray:
    """Lower half-plane indicators ``Delta_1..Delta_N`` for rows of ``S_0..S_N``."""
    cur = positions[..., 1:]
    prev = positions[..., :-1]
    return (cur < 0) | ((cur == 0) & (prev < 0))


def path_table(N: int) -> PathTable:
    _check_enum_size(N)
    idx = np.arange(2**N, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(N)) & 1
    steps = (2 * bits - 1).astype(np.int8)
    positions = np.zeros((2**N, N + 1), dtype=np.int32)
    np.cumsum(steps, axis=1, out=positions[:, 1:])
    delta = delta_from_positions(positions)
    occupation = delta.sum(axis=1)
    times = np.arange(1, N + 1)
    last_exit = np.where(delta, times, 0).max(axis=1) if N > 0 else np.zeros(1, dtype=np.int64)
    return PathTable(steps, positions, delta, occupation, last_exit)


def enumerate_paths(N: int) -> Iterator[EnumeratedPath]:
    """Yield every length-``N`` path once, each with probability ``2**-N``."""
    table = path_table(N)
    prob = Fraction(1, 2**N)
    for i in range(2**N):
        yield EnumeratedPath(
            steps=tuple(int(s) for s in table.steps[i]),
            delta=tuple(int(d) for d in table.delta[i]),
            prob=prob,
            end_at_zero=bool(table.positions[i, -1] == 0),
            occupation=int(table.occupation[i]),
            last_exit=int(table.last_exit[i]),
        )
