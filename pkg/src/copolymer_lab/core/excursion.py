"""Excursion-decomposition engine for the subtracted partition functions.

Times are even throughout; arrays over even times use the half index
``i = n // 2``. An excursion between zeros ``k < n`` is positive or negative
with probability ``f_{n-k} / 2`` each; a negative one carries the weight
``psi(k, n) = exp(-2 lam sum_{j=k+1}^{n} (omega_j + h))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import BudgetExceeded, InvalidArgument
from ..logmath import logsumexp
from ..walks import WalkTables, walk_tables_for
from .params import ModelParams, as_omega, prefix_sums

LOG2 = math.log(2.0)
SPECTRUM_BUDGET = 600


@dataclass(frozen=True)
class PartitionTables:
    params: ModelParams
    logZ_c: np.ndarray  # over even k <= N, index k // 2
    logZ_f: float
    engine: str
    prefix_sums: np.ndarray = field(repr=False)

    @property
    def logZ(self) -> float:
        """Log partition function for the endpoint condition in ``params``."""
        return self.logZ_f if self.params.endpoint == "free" else float(self.logZ_c[-1])

    @property
    def free_energy(self) -> float:
        return self.logZ / self.params.N

    def log_psi(self, k: int, n: int) -> float:
        return -2.0 * self.params.lam * (self.prefix_sums[n] - self.prefix_sums[k])


def _tables(tables: WalkTables | None, N: int) -> WalkTables:
    if tables is None:
        return walk_tables_for(N)
    if not tables.covers(N):
        raise InvalidArgument(f"walk tables cover n <= {tables.n_max}, need {N}", field="tables")
    return tables


def _even_log_f(tables: WalkTables, N: int) -> np.ndarray:
    return np.asarray(tables.log_f[0 : N + 1 : 2])


def constrained_log_partition(omega: np.ndarray, lam: float, h: float, tables: WalkTables,
                              variant: str = "copolymer") -> np.ndarray:
    """``log Z^c_n`` for every even ``n <= len(omega)``."""
    N = omega.size
    M = N // 2
    lf = _even_log_f(tables, N)
    out = np.full(M + 1, -np.inf)
    out[0] = 0.0
    if variant == "pinning":
        pin = -2.0 * lam * (omega[1::2] + h)  # weight at the zero reached at time 2i
        for i in range(1, M + 1):
            out[i] = logsumexp(out[:i] + lf[i:0:-1]) + pin[i - 1]
        return out
    Pe = prefix_sums(omega, h)[0::2]
    for i in range(1, M + 1):
        log_psi = -2.0 * lam * (Pe[i] - Pe[:i])
        out[i] = logsumexp(out[:i] + lf[i:0:-1] - LOG2 + np.logaddexp(0.0, log_psi))
    return out


def free_log_partition(logZ_c: np.ndarray, omega: np.ndarray, lam: float, h: float, N: int,
                       tables: WalkTables, variant: str = "copolymer") -> float:
    """``log Z^f_N`` by conditioning on the last zero before ``N``."""
    M = N // 2
    k = np.arange(M)
    lpp = tables.log_p_plus[N - 2 * k]
    if variant == "pinning":
        terms = logZ_c[:M] + lpp + LOG2
    else:
        Pe = prefix_sums(omega[:N], h)[0::2]
        log_psi = -2.0 * lam * (Pe[M] - Pe[:M])
        terms = logZ_c[:M] + lpp + np.logaddexp(0.0, log_psi)
    return logsumexp(np.append(terms, logZ_c[M]))


def partition(params: ModelParams, omega, tables: WalkTables | None = None) -> PartitionTables:
    """Quenched ``log Z^c_k`` (all even ``k <= N``) and ``log Z^f_N``; O(N^2)."""
    N = params.N
    om = as_omega(omega, N)
    tables = _tables(tables, N)
    logZ_c = constrained_log_partition(om, params.lam, params.h, tables, params.variant)
    logZ_f = free_log_partition(logZ_c, om, params.lam, params.h, N, tables, params.variant)
    logZ_c.setflags(write=False)
    return PartitionTables(params, logZ_c, logZ_f, "excursion", prefix_sums(om, params.h))


def free_log_partition_profile(pt: PartitionTables, omega, Ns) -> np.ndarray:
    """``log Z^f_n`` for each even ``n`` in ``Ns`` reusing one constrained table."""
    om = as_omega(omega, pt.params.N)
    tables = walk_tables_for(pt.params.N)
    return np.array([
        free_log_partition(pt.logZ_c, om, pt.params.lam, pt.params.h, int(n), tables, pt.params.variant)
        for n in Ns
    ])


# ---------------------------------------------------------------------------
# occupation spectrum


@dataclass(frozen=True)
class OccupationSpectrum:
    """``log Z(Omega^a_N, occupation = m)`` over the listed ``m`` values.

    For the copolymer ``m`` is the lower half-plane occupation (even); for the
    pinning variant it is the number of returns to zero.
    """

    m: np.ndarray
    logZ_by_m: np.ndarray
    endpoint: str
    N: int

    @property
    def logZ(self) -> float:
        return logsumexp(self.logZ_by_m)

    def probabilities(self) -> np.ndarray:
        return np.exp(self.logZ_by_m - self.logZ)

    def tail(self) -> np.ndarray:
        """``P(occupation >= m)`` for each listed ``m``."""
        p = self.probabilities()
        return np.minimum(np.cumsum(p[::-1])[::-1], 1.0)

    def mean(self) -> float:
        return float(np.sum(self.m * self.probabilities()))

    def free_energy(self, m: int) -> float:
        return float(self.logZ_by_m[self._index(m)]) / self.N

    def _index(self, m: int) -> int:
        idx = np.nonzero(self.m == m)[0]
        if idx.size == 0:
            raise InvalidArgument(f"occupation {m} not in spectrum", field="m")
        return int(idx[0])


def _spectrum_table(om: np.ndarray, lam: float, h: float, tables: WalkTables) -> np.ndarray:
    """``T[i, j] = log Z^c_{2i}(occupation = 2j)`` for the copolymer."""
    N = om.size
    M = N // 2
    lf = _even_log_f(tables, N)
    Pe = prefix_sums(om, h)[0::2]
    T = np.full((M + 1, M + 1), -np.inf)
    T[0, 0] = 0.0
    for i in range(1, M + 1):
        k = np.arange(i)
        d = i - k
        a = lf[d] - LOG2
        cols = np.arange(i + 1)
        shifted = cols[None, :] - d[:, None]
        valid = shifted >= 0
        neg = np.where(valid, T[k[:, None], np.where(valid, shifted, 0)], -np.inf)
        neg = neg + (a - 2.0 * lam * (Pe[i] - Pe[:i]))[:, None]
        pos = T[:i, : i + 1] + a[:, None]
        T[i, : i + 1] = logsumexp(np.concatenate((pos, neg), axis=0), axis=0)
    return T


def _pinning_spectrum_table(om: np.ndarray, lam: float, h: float, tables: WalkTables) -> np.ndarray:
    """``T[i, j] = log Z^c_{2i}(j returns to zero)`` for the pinning variant."""
    N = om.size
    M = N // 2
    lf = _even_log_f(tables, N)
    pin = -2.0 * lam * (om[1::2] + h)
    T = np.full((M + 1, M + 1), -np.inf)
    T[0, 0] = 0.0
    for i in range(1, M + 1):
        prev = T[:i, :i] + lf[i:0:-1][:, None]  # column j-1 -> j
        T[i, 1 : i + 1] = logsumexp(prev, axis=0) + pin[i - 1]
    return T


def occupation_spectrum(params: ModelParams, omega, tables: WalkTables | None = None,
                        budget: int = SPECTRUM_BUDGET) -> OccupationSpectrum:
    """Partition function restricted to each occupation value; O(N^3)."""
    N = params.N
    if N > budget:
        raise BudgetExceeded(f"occupation spectrum at N={N} exceeds budget {budget}; use sampling instead")
    om = as_omega(omega, N)
    tables = _tables(tables, N)
    M = N // 2
    if params.variant == "pinning":
        T = _pinning_spectrum_table(om, params.lam, params.h, tables)
        m = np.arange(M + 1)
        if params.endpoint == "constrained":
            return OccupationSpectrum(m, T[M].copy(), "constrained", N)
        k = np.arange(M)
        lpp = tables.log_p_plus[N - 2 * k] + LOG2
        rows = np.concatenate((T[:M] + lpp[:, None], T[M : M + 1]), axis=0)
        return OccupationSpectrum(m, logsumexp(rows, axis=0), "free", N)

    T = _spectrum_table(om, params.lam, params.h, tables)
    m = np.arange(0, N + 1, 2)
    if params.endpoint == "constrained":
        return OccupationSpectrum(m, T[M].copy(), "constrained", N)
    # free: final incomplete segment of length N - 2k, positive or negative
    Pe = prefix_sums(om, params.h)[0::2]
    k = np.arange(M)
    lpp = tables.log_p_plus[N - 2 * k]
    pos = T[:M] + lpp[:, None]
    d = M - k
    cols = np.arange(M + 1)
    shifted = cols[None, :] - d[:, None]
    valid = shifted >= 0
    neg = np.where(valid, T[k[:, None], np.where(valid, shifted, 0)], -np.inf)
    neg = neg + (lpp - 2.0 * params.lam * (Pe[M] - Pe[:M]))[:, None]
    rows = np.concatenate((pos, neg, T[M : M + 1]), axis=0)
    return OccupationSpectrum(m, logsumexp(rows, axis=0), "free", N)


# ---------------------------------------------------------------------------
# last exit from the lower half-plane (free endpoint)


def _require_copolymer(params: ModelParams, endpoint: str | None = None) -> None:
    if params.variant != "copolymer":
        raise InvalidArgument("restricted partition functions are defined for the copolymer only", field="variant")
    if endpoint is not None and params.endpoint != endpoint:
        raise InvalidArgument(f"operation requires endpoint={endpoint!r}", field="endpoint")


@dataclass(frozen=True)
class LastExitProfile:
    """``log Z^f(max A <= l)`` and ``log Z^f(max A > l)`` for every even ``l``."""

    ell: np.ndarray
    log_below: np.ndarray
    log_above: np.ndarray
    logZ_f: float

    def probability_above(self) -> np.ndarray:
        return np.exp(self.log_above - self.logZ_f)


def last_exit_profile(params: ModelParams, omega, tables: WalkTables | None = None,
                      pt: PartitionTables | None = None) -> LastExitProfile:
    """Split ``Z^f`` by the end time of the last negative excursion.

    Phase A: ``W(t)``, the weight of paths on ``[0, t]`` whose last excursion
    is negative and ends at ``t``. Phase B: after ``t`` the path never enters
    the lower half-plane, which has weight ``u_{N-t}`` independent of disorder.
    Paths ending inside a negative segment have ``max A = N``.
    """
    _require_copolymer(params)
    N = params.N
    M = N // 2
    om = as_omega(omega, N)
    tables = _tables(tables, N)
    if pt is None:
        pt = partition(params.with_(endpoint="free"), om, tables)
    logZc = pt.logZ_c
    lf = _even_log_f(tables, N)
    Pe = pt.prefix_sums[0::2]
    lam = params.lam

    W = np.full(M + 1, -np.inf)  # W[0] stands for "no negative excursion"
    W[0] = 0.0
    for i in range(1, M + 1):
        W[i] = logsumexp(logZc[:i] + lf[i:0:-1] - LOG2 - 2.0 * lam * (Pe[i] - Pe[:i]))
    t = np.arange(M + 1)
    contrib = W + tables.log_u[N - 2 * t]

    k = np.arange(M)
    final_neg = logsumexp(logZc[:M] + tables.log_p_plus[N - 2 * k] - 2.0 * lam * (Pe[M] - Pe[:M]))

    below = np.logaddexp.accumulate(contrib)
    # log-sum of contrib[t'] for t' > t, then add the final negative segment
    tail = np.full(M + 1, -np.inf)
    if M >= 1:
        tail[:-1] = np.logaddexp.accumulate(contrib[::-1])[::-1][1:]
    above = np.logaddexp(tail, final_neg)
    below[M] = pt.logZ_f
    above[M] = -np.inf
    return LastExitProfile(2 * t, below, above, pt.logZ_f)


def last_exit_partition(params: ModelParams, omega, ell: int, tables: WalkTables | None = None) -> float:
    """``log Z^f(max A <= ell)``."""
    _require_copolymer(params)
    if ell % 2 or not 0 <= ell <= params.N:
        raise InvalidArgument(f"ell must be even in [0, N], got {ell}", field="ell")
    prof = last_exit_profile(params, omega, tables)
    return float(prof.log_below[ell // 2])


# ---------------------------------------------------------------------------
# skeleton sampling


@dataclass(frozen=True)
class ExcursionSkeleton:
    N: int
    zeros: tuple[int, ...]
    signs: tuple[int, ...]
    final_segment: str = "none"  # none | positive | negative
    final_length: int = 0

    @property
    def occupation(self) -> int:
        occ = sum(b - a for a, b, s in zip(self.zeros, self.zeros[1:], self.signs) if s < 0)
        if self.final_segment == "negative":
            occ += self.final_length
        return occ

    @property
    def last_exit(self) -> int:
        if self.final_segment == "negative":
            return self.N
        ends = [b for b, s in zip(self.zeros[1:], self.signs) if s < 0]
        return ends[-1] if ends else 0


class _BackwardSampler:
    """Cumulative backward-step laws derived from a copolymer excursion table."""

    def __init__(self, params: ModelParams, omega, tables: WalkTables | None = None):
        _require_copolymer(params)
        N = params.N
        self.params = params
        self.M = N // 2
        tables = _tables(tables, N)
        self.pt = partition(params, omega, tables)
        self.lf = _even_log_f(tables, N)
        self.Pe = self.pt.prefix_sums[0::2]
        self.tables = tables
        self._cache: dict[int, np.ndarray] = {}

    def _cdf(self, logp: np.ndarray) -> np.ndarray:
        p = np.exp(logp - logsumexp(logp))
        c = np.cumsum(p)
        c[-1] = 1.0
        return c

    def step_cdf(self, i: int) -> np.ndarray:
        """Law of (previous zero k, sign) from a zero at time 2i; entries [pos_0..pos_{i-1}, neg_0..neg_{i-1}]."""
        c = self._cache.get(i)
        if c is None:
            zc = self.pt.logZ_c
            base = zc[:i] + self.lf[i:0:-1] - LOG2
            neg = base - 2.0 * self.params.lam * (self.Pe[i] - self.Pe[:i])
            c = self._cdf(np.concatenate((base, neg)))
            self._cache[i] = c
        return c

    def start_cdf(self) -> np.ndarray:
        """Free endpoint: law of (last zero k, final sign); entries [pos_0..pos_{M-1}, neg_0..neg_{M-1}, end-at-zero]."""
        M = self.M
        N = self.params.N
        zc = self.pt.logZ_c
        k = np.arange(M)
        base = zc[:M] + self.tables.log_p_plus[N - 2 * k]
        neg = base - 2.0 * self.params.lam * (self.Pe[M] - self.Pe[:M])
        return self._cdf(np.concatenate((base, neg, [zc[M]])))


def sample_skeleton(params: ModelParams, omega, rng: np.random.Generator,
                    tables: WalkTables | None = None, _sampler: _BackwardSampler | None = None) -> ExcursionSkeleton:
    """One draw from the polymer measure, reduced to zeros and excursion signs."""
    s = _sampler or _BackwardSampler(params, omega, tables)
    M = s.M
    final, final_len = "none", 0
    if params.endpoint == "free":
        c = s.start_cdf()
        idx = int(np.searchsorted(c, rng.random(), side="right"))
        if idx == 2 * M:
            i = M
        else:
            i = idx % M
            final = "positive" if idx < M else "negative"
            final_len = params.N - 2 * i
    else:
        i = M
    zeros = [2 * i]
    signs = []
    while i > 0:
        c = s.step_cdf(i)
        idx = int(np.searchsorted(c, rng.random(), side="right"))
        k = idx % i
        signs.append(1 if idx < i else -1)
        zeros.append(2 * k)
        i = k
    return ExcursionSkeleton(params.N, tuple(reversed(zeros)), tuple(reversed(signs)), final, final_len)


def sample_occupations(params: ModelParams, omega, rng: np.random.Generator, size: int,
                       tables: WalkTables | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized skeleton sampling; returns (occupation, last_exit) arrays of length ``size``."""
    s = _BackwardSampler(params, omega, tables)
    M, N = s.M, params.N
    occ = np.zeros(size, dtype=np.int64)
    last = np.full(size, -1, dtype=np.int64)
    if params.endpoint == "free":
        c = s.start_cdf()
        idx = np.searchsorted(c, rng.random(size), side="right")
        at_zero = idx == 2 * M
        cur = np.where(at_zero, M, idx % M)
        neg_final = (~at_zero) & (idx >= M)
        occ[neg_final] += N - 2 * cur[neg_final]
        last[neg_final] = N
    else:
        cur = np.full(size, M, dtype=np.int64)
    for i in range(M, 0, -1):
        sel = np.nonzero(cur == i)[0]
        if sel.size == 0:
            continue
        c = s.step_cdf(i)
        idx = np.searchsorted(c, rng.random(sel.size), side="right")
        k = idx % i
        neg = idx >= i
        occ[sel[neg]] += 2 * (i - k[neg])
        first_neg = sel[neg & (last[sel] < 0)]
        last[first_neg] = 2 * i
        cur[sel] = k
    last[last < 0] = 0
    return occ, last
