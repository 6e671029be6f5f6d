"""Disorder laws, seeded sampling, moment generating functions and large-deviation tools.

The three supported laws are symmetric with unit variance:

* ``bernoulli_pm1``  -- fair coin on {-1, +1}
* ``gaussian_std``   -- standard normal
* ``uniform_bounded`` -- uniform on [-sqrt(3), sqrt(3)]

Random streams are keyed by ``(seed, replica)`` through a Philox counter-based
generator, and are prefix-consistent: the first ``n`` values of a longer
draw equal a draw of length ``n``.
"""

from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import InvalidArgument, NeedsMoreDisorder, require_even

SQRT3 = math.sqrt(3.0)
LOG2 = math.log(2.0)


class DisorderLaw(str, Enum):
    BERNOULLI = "bernoulli_pm1"
    GAUSSIAN = "gaussian_std"
    UNIFORM = "uniform_bounded"

    @classmethod
    def parse(cls, value: "str | DisorderLaw") -> "DisorderLaw":
        if isinstance(value, cls):
            return value
        aliases = {
            "bernoulli": cls.BERNOULLI,
            "bernoulli_pm1": cls.BERNOULLI,
            "pm1": cls.BERNOULLI,
            "gaussian": cls.GAUSSIAN,
            "gaussian_std": cls.GAUSSIAN,
            "normal": cls.GAUSSIAN,
            "uniform": cls.UNIFORM,
            "uniform_bounded": cls.UNIFORM,
        }
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise InvalidArgument(f"unknown disorder law {value!r}", field="law") from None

    @property
    def tag(self) -> int:
        return _LAW_TAGS[self]

    @property
    def ess_inf(self) -> float:
        """Essential infimum of omega_1."""
        return {DisorderLaw.BERNOULLI: -1.0, DisorderLaw.GAUSSIAN: -math.inf, DisorderLaw.UNIFORM: -SQRT3}[self]


_LAW_TAGS = {DisorderLaw.BERNOULLI: 1, DisorderLaw.GAUSSIAN: 2, DisorderLaw.UNIFORM: 3}
_TAG_LAWS = {v: k for k, v in _LAW_TAGS.items()}


# ---------------------------------------------------------------------------
# sampling


def _generator(seed: int, replica: int) -> np.random.Generator:
    if seed < 0 or replica < 0:
        raise InvalidArgument("seed and replica must be non-negative", field="seed")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replica),))
    return np.random.Generator(np.random.Philox(ss))


def _draw(law: DisorderLaw, rng: np.random.Generator, n: int) -> np.ndarray:
    if law is DisorderLaw.BERNOULLI:
        return np.where(rng.random(n) < 0.5, -1.0, 1.0)
    if law is DisorderLaw.GAUSSIAN:
        return rng.standard_normal(n)
    return SQRT3 * (2.0 * rng.random(n) - 1.0)


@dataclass(frozen=True)
class DisorderVector:
    values: np.ndarray
    law: DisorderLaw | None
    seed: int | None = None
    replica_index: int = 0

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    @property
    def N(self) -> int:
        return self.values.size

    def regenerate(self) -> "DisorderVector":
        if self.law is None or self.seed is None:
            raise InvalidArgument("vector has no sampling provenance")
        return sample(self.law, self.N, self.seed, self.replica_index)


def sample(law: "DisorderLaw | str", N: int, seed: int, replica: int = 0) -> DisorderVector:
    """IID draws of length ``N`` from the ``(seed, replica)`` sub-stream."""
    law = DisorderLaw.parse(law)
    require_even("N", N)
    values = _draw(law, _generator(seed, replica), N)
    return DisorderVector(values, law, int(seed), int(replica))


class DisorderStream:
    """Extendable view of the ``(seed, replica)`` sub-stream."""

    def __init__(self, law: "DisorderLaw | str", seed: int, replica: int = 0, max_length: int = 50_000_000):
        self.law = DisorderLaw.parse(law)
        self.seed = int(seed)
        self.replica = int(replica)
        self.max_length = int(max_length)
        self._rng = _generator(self.seed, self.replica)
        self._buf = np.empty(0)

    def __len__(self) -> int:
        return self._buf.size

    def values(self, n: int) -> np.ndarray:
        if n > self.max_length:
            raise NeedsMoreDisorder(f"stream capped at {self.max_length} values", consumed=self._buf.size)
        if n > self._buf.size:
            extra = _draw(self.law, self._rng, n - self._buf.size)
            self._buf = np.concatenate((self._buf, extra))
        return self._buf[:n]

    def vector(self, n: int) -> DisorderVector:
        return DisorderVector(self.values(n).copy(), self.law, self.seed, self.replica)


# ---------------------------------------------------------------------------
# serialization

_HEADER = struct.Struct("<4sHBxQQQ")
_MAGIC = b"CPLD"


def to_bytes(vec: DisorderVector) -> bytes:
    tag = vec.law.tag if vec.law is not None else 0
    header = _HEADER.pack(_MAGIC, 1, tag, vec.N, vec.seed or 0, vec.replica_index)
    return header + vec.values.astype("<f8").tobytes()


def from_bytes(data: bytes) -> DisorderVector:
    magic, version, tag, n, seed, replica = _HEADER.unpack_from(data)
    if magic != _MAGIC or version != 1:
        raise InvalidArgument("not a disorder container")
    payload = np.frombuffer(data, dtype="<f8", count=n, offset=_HEADER.size)
    return DisorderVector(payload.astype(np.float64), _TAG_LAWS.get(tag), int(seed), int(replica))


def write_binary(vec: DisorderVector, path: str | Path) -> None:
    Path(path).write_bytes(to_bytes(vec))


def read_binary(path: str | Path) -> DisorderVector:
    return from_bytes(Path(path).read_bytes())


def to_csv(vec: DisorderVector) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["index", "omega"])
    for i, v in enumerate(vec.values, start=1):
        writer.writerow([i, repr(float(v))])
    return out.getvalue()


# ---------------------------------------------------------------------------
# moment generating function


def _log_sinhc(a):
    """log(sinh(a)/a) for a >= 0, vectorized."""
    a = np.asarray(a, dtype=np.float64)
    small = a < 0.1
    a2 = a * a
    series = a2 * (1 / 6 - a2 * (1 / 180 - a2 * (1 / 2835 - a2 / 37800)))
    safe = np.where(small, 1.0, a)
    big = safe - LOG2 + np.log1p(-np.exp(-2 * safe)) - np.log(safe)
    return np.where(small, series, big)


def log_mgf(law: "DisorderLaw | str", t):
    """``log E[exp(t omega_1)]``; accepts scalars or arrays."""
    law = DisorderLaw.parse(law)
    t = np.asarray(t, dtype=np.float64)
    at = np.abs(t)
    if law is DisorderLaw.BERNOULLI:
        out = at + np.log1p(np.exp(-2 * at)) - LOG2
    elif law is DisorderLaw.GAUSSIAN:
        out = 0.5 * t * t
    else:
        out = _log_sinhc(SQRT3 * at)
    return float(out) if out.ndim == 0 else out


def dlog_mgf(law: DisorderLaw, t: float) -> float:
    """Derivative of ``log_mgf`` in ``t``."""
    if law is DisorderLaw.BERNOULLI:
        return math.tanh(t)
    if law is DisorderLaw.GAUSSIAN:
        return t
    a = SQRT3 * abs(t)
    if a < 1e-4:
        val = a / 3
    else:
        val = 1 / math.tanh(a) - 1 / a
    return math.copysign(SQRT3 * val, t)


@dataclass(frozen=True)
class CriticalBounds:
    lam: float
    h_lower: float
    h_upper: float
    beta: float | None = None


def h_upper(law, lam: float) -> float:
    return log_mgf(law, 2 * lam) / (2 * lam)


def h_lower(law, lam: float) -> float:
    t = 4 * lam / 3
    return log_mgf(law, t) / t


def annealed_beta(law, lam: float, h: float) -> float:
    """``2 lam h - log M(2 lam)``: positive exactly in the strongly delocalized region."""
    return 2 * lam * h - log_mgf(law, 2 * lam)


def critical_bounds(law: "DisorderLaw | str", lam: float, h: float | None = None) -> CriticalBounds:
    law = DisorderLaw.parse(law)
    if not lam > 0:
        raise InvalidArgument(f"lambda must be > 0, got {lam}", field="lambda")
    beta = annealed_beta(law, lam, h) if h is not None else None
    return CriticalBounds(float(lam), h_lower(law, lam), h_upper(law, lam), beta)


# ---------------------------------------------------------------------------
# Cramer rate of omega + h below its mean


def _rate_numeric(law: DisorderLaw, y: float) -> float:
    """``sup_{t >= 0} (t y - log M(t))`` by bisection on the stationarity condition."""
    if y <= 0:
        return 0.0
    hi = 64.0
    while dlog_mgf(law, hi) < y:
        hi *= 2
        if hi > 1e12:
            return math.inf
    t_star = brentq(lambda t: dlog_mgf(law, t) - y, 0.0, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    return t_star * y - log_mgf(law, t_star)


def _rate_of_gap(law: DisorderLaw, y: float) -> float:
    """Rate for the running mean of ``omega`` to sit at ``-y`` (``y = h - q > 0``)."""
    if law is DisorderLaw.GAUSSIAN:
        return 0.5 * y * y
    if law is DisorderLaw.BERNOULLI:
        if y > 1:
            return math.inf
        if y == 1:
            return LOG2
        p, r = 0.5 * (1 + y), 0.5 * (1 - y)
        return p * math.log1p(y) + r * math.log1p(-y)
    if y >= SQRT3:
        return math.inf
    return _rate_numeric(law, y)


def cramer_rate(law: "DisorderLaw | str", h: float, q: float) -> float:
    """Large-deviation rate ``Sigma_h(q)`` for the mean of ``omega + h`` to fall to ``q < h``."""
    law = DisorderLaw.parse(law)
    if not q < h:
        raise InvalidArgument(f"need q < h, got q={q}, h={h}", field="q")
    return _rate_of_gap(law, h - q)


def _delta_ratio(law: DisorderLaw, lam: float, h: float, y: float) -> float:
    rate = _rate_of_gap(law, y)
    if math.isinf(rate):
        return -1.0
    return (-2 * lam * (h - y) - rate) / rate


def _gap_bound(law: DisorderLaw, lam: float, h: float) -> float:
    """Upper end of the useful search window for ``y = h - q``."""
    if law is DisorderLaw.BERNOULLI:
        return 1.0
    if law is DisorderLaw.UNIFORM:
        return SQRT3 * (1 - 1e-12)
    return max(8.0, 4 * (h + 2 * lam) + 8.0)


def delta_exponent(law: "DisorderLaw | str", lam: float, h: float) -> float:
    """``sup_{q < h} (-2 lam q - Sigma_h(q)) / Sigma_h(q)``.

    Grid search over ``y = h - q`` followed by golden-section polishing;
    ties go to the larger ``q``. Returns ``inf`` at ``h = 0``.
    """
    law = DisorderLaw.parse(law)
    if not lam > 0 or h < 0:
        raise InvalidArgument("need lam > 0 and h >= 0", field="lambda")
    if h == 0:
        return math.inf
    y_max = _gap_bound(law, lam, h)
    grid = np.geomspace(1e-7, y_max, 4000)
    vals = np.array([_delta_ratio(law, lam, h, y) for y in grid])
    i = int(np.argmax(vals))  # first maximizer = smallest y = largest q
    lo = grid[max(i - 1, 0)] if i > 0 else 0.5 * grid[0]
    hi = grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(
        lambda y: -_delta_ratio(law, lam, h, y), bracket=None, bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-12 * max(hi, 1.0)},
    )
    return float(max(vals[i], -res.fun))


def delta_numerator_sup(law: "DisorderLaw | str", lam: float, h: float) -> float:
    """Numerical ``sup_{q<h} (-2 lam q - Sigma_h(q))``; equals ``-2 lam h + log M(2 lam)``."""
    law = DisorderLaw.parse(law)
    y_max = _gap_bound(law, lam, h)

    def neg(y):
        rate = _rate_of_gap(law, y)
        return math.inf if math.isinf(rate) else 2 * lam * (h - y) + rate

    grid = np.linspace(1e-9, y_max, 2001)
    vals = np.array([neg(y) for y in grid])
    i = int(np.argmin(vals))
    res = minimize_scalar(neg, bounds=(grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]), method="bounded",
                          options={"xatol": 1e-13})
    return float(-min(res.fun, vals[i]))


# ---------------------------------------------------------------------------
# atypical stretches


@dataclass(frozen=True)
class StretchScan:
    q: float
    rate: float
    r_N: int
    tau_N: int
    R: np.ndarray = field(repr=False)  # R[j] = R_{2j}, j = 0..tau_N/2
    stretch_start: int
    delta: float | None = None

    @property
    def R_tau(self) -> int:
        return int(self.R[-1])


def stretch_threshold(rate: float, N: int) -> int:
    """Largest even integer strictly below ``log(N) / rate`` (at least 2)."""
    x = math.log(N) / rate
    r = 2 * math.floor(x / 2)
    if r >= x:
        r -= 2
    return max(r, 2)


def _shifted_prefix(tilde: np.ndarray, q: float) -> np.ndarray:
    """``Q_k = sum_{j<=k} (tilde_j - q)`` at even ``k``."""
    Q = np.concatenate(([0.0], np.cumsum(tilde - q)))
    return Q[::2]


def longest_stretches(tilde: np.ndarray, q: float) -> np.ndarray:
    """``R_n`` at even ``n``: longest even block ``(k, l]`` with ``l <= n`` and mean ``<= q``.

    A block ``(k, l]`` qualifies iff ``Q_l <= Q_k``; the earliest qualifying
    ``k`` for a given ``l`` is found by binary search on the running max of ``Q``.
    """
    Q = _shifted_prefix(tilde, q)
    run_max = np.maximum.accumulate(Q)
    idx = np.arange(Q.size)
    first = np.searchsorted(run_max, Q, side="left")
    ending = np.where(first < idx, 2 * (idx - first), 0)
    return np.maximum.accumulate(ending)


def _first_tau(tilde: np.ndarray, q: float, r: int) -> int | None:
    Q = _shifted_prefix(tilde, q)
    run_max = np.maximum.accumulate(Q)
    lag = r // 2
    if Q.size <= lag:
        return None
    hits = np.nonzero(Q[lag:] <= run_max[: Q.size - lag])[0]
    if hits.size == 0:
        return None
    return 2 * int(hits[0] + lag)


def atypical_stretch_scan(omega, h: float, q: float, N: int, law=None, lam: float | None = None,
                          chunk: int | None = None) -> StretchScan:
    """Locate the stopping time ``tau_N`` and the longest atypical stretches up to it.

    ``omega`` is a :class:`DisorderStream` (extended on demand) or a finite
    array / :class:`DisorderVector` (``NeedsMoreDisorder`` if exhausted).
    """
    if not q < h:
        raise InvalidArgument(f"need q < h, got q={q}, h={h}", field="q")
    if N < 2:
        raise InvalidArgument("N must be >= 2", field="N")
    if isinstance(omega, DisorderStream):
        law = omega.law
    elif law is None and isinstance(omega, DisorderVector):
        law = omega.law
    if law is None:
        raise InvalidArgument("a disorder law is required for the Cramer rate", field="law")
    law = DisorderLaw.parse(law)
    rate = cramer_rate(law, h, q)
    r = stretch_threshold(rate, N)

    if isinstance(omega, DisorderStream):
        length = chunk or max(4 * N, 1 << 16)
        while True:
            length = min(length, omega.max_length)
            tilde = omega.values(length) + h
            tau = _first_tau(tilde, q, r)
            if tau is not None:
                break
            if length >= omega.max_length:
                raise NeedsMoreDisorder(f"no atypical stretch within {length} values", consumed=length)
            length *= 2
    else:
        values = omega.values if isinstance(omega, DisorderVector) else np.asarray(omega, dtype=np.float64)
        tilde = values + h
        tau = _first_tau(tilde, q, r)
        if tau is None:
            raise NeedsMoreDisorder(f"no atypical stretch within {values.size} values", consumed=values.size)

    R = longest_stretches(tilde[:tau], q)
    delta = delta_exponent(law, lam, h) if lam is not None else None
    return StretchScan(q=q, rate=rate, r_N=r, tau_N=tau, R=R, stretch_start=tau - int(R[-1]), delta=delta)
