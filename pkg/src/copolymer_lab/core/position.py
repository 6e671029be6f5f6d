"""Position-space transfer engine.

The state at time ``n`` is ``S_n`` for ``S_n != 0``; at zero it is split by
the sign of ``S_{n-1}`` so the zero-sign convention can be applied. The state
vector has ``2N + 2`` slots: ``x + N`` for ``x`` in ``[-N, N]`` (slot ``N``
holds zero reached from above, and also the origin at time 0) and slot
``2N + 1`` for zero reached from below.

This engine is independent of the excursion decomposition and is used to
cross-check it, and to produce marginals (forward-backward) and restricted
sums that carry path flags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import BudgetExceeded, InvalidArgument
from ..logmath import logsumexp
from .excursion import PartitionTables
from .params import ModelParams, as_omega, prefix_sums

LOG2 = math.log(2.0)
CONDITIONAL_BUDGET = 200


def _lower_mask(N: int, variant: str) -> np.ndarray:
    """Slots whose arrival step carries the disorder weight."""
    mask = np.zeros(2 * N + 2, dtype=bool)
    if variant == "pinning":
        mask[N] = True
    else:
        mask[:N] = True
    mask[2 * N + 1] = True
    return mask


def _step(L: np.ndarray, N: int) -> np.ndarray:
    """One unweighted walk step on the last axis (log domain, factor 1/2 included)."""
    src = L[..., : 2 * N + 1].copy()
    src[..., N] = np.logaddexp(L[..., N], L[..., 2 * N + 1])
    new = np.full(L.shape, -np.inf)
    new[..., 1 : 2 * N] = np.logaddexp(src[..., : 2 * N - 1], src[..., 2:])
    new[..., 0] = src[..., 1]
    new[..., 2 * N] = src[..., 2 * N - 1]
    new[..., N] = src[..., N + 1]  # from +1 down to zero
    new[..., 2 * N + 1] = src[..., N - 1]  # from -1 up to zero
    new -= LOG2
    return new


def _back_step(G: np.ndarray, N: int) -> np.ndarray:
    """Adjoint of :func:`_step`: ``G`` holds successor values already weighted."""
    up = G[..., : 2 * N + 1].copy()
    up[..., N] = G[..., 2 * N + 1]  # -1 going up lands on zero-from-below
    down = G[..., : 2 * N + 1]
    B = np.full(G.shape, -np.inf)
    B[..., : 2 * N] = up[..., 1:]
    B[..., 1 : 2 * N + 1] = np.logaddexp(B[..., 1 : 2 * N + 1], down[..., : 2 * N])
    z = np.logaddexp(G[..., N + 1], G[..., N - 1])
    B[..., N] = z
    B[..., 2 * N + 1] = z
    B -= LOG2
    return B


def _initial(N: int, lead: tuple = ()) -> np.ndarray:
    L = np.full(lead + (2 * N + 2,), -np.inf)
    L[(..., N)] = 0.0
    return L


def _log_weights(om: np.ndarray, params: ModelParams) -> np.ndarray:
    return -2.0 * params.lam * (om + params.h)


def _zero_mass(L: np.ndarray, N: int):
    return np.logaddexp(L[..., N], L[..., 2 * N + 1])


def _forward(params: ModelParams, om: np.ndarray, keep: bool = False):
    N = params.N
    mask = _lower_mask(N, params.variant)
    w = _log_weights(om, params)
    L = _initial(N)
    logZ_c = np.full(N // 2 + 1, -np.inf)
    logZ_c[0] = 0.0
    history = [L] if keep else None
    for n in range(1, N + 1):
        L = _step(L, N)
        L[mask] += w[n - 1]
        if n % 2 == 0:
            logZ_c[n // 2] = _zero_mass(L, N)
        if keep:
            history.append(L)
    return L, logZ_c, history


def partition_position_engine(params: ModelParams, omega) -> PartitionTables:
    """``log Z^c_k`` and ``log Z^f_N`` from the transfer recursion over positions; O(N^2)."""
    N = params.N
    om = as_omega(omega, N)
    L, logZ_c, _ = _forward(params, om)
    logZ_f = logsumexp(L)
    logZ_c.setflags(write=False)
    return PartitionTables(params, logZ_c, logZ_f, "position", prefix_sums(om, params.h))


def _final_column(L: np.ndarray, N: int) -> np.ndarray:
    """Collapse the split zero: entries for ``S_N = -N..N``."""
    col = L[: 2 * N + 1].copy()
    col[N] = np.logaddexp(L[N], L[2 * N + 1])
    return col


def endpoint_marginal(params: ModelParams, omega) -> np.ndarray:
    """Exact law of ``S_N`` under the free-endpoint polymer measure, indexed by ``S_N + N``."""
    if params.endpoint != "free":
        raise InvalidArgument("endpoint marginal requires endpoint='free'", field="endpoint")
    N = params.N
    om = as_omega(omega, N)
    L, _, _ = _forward(params, om)
    col = _final_column(L, N)
    return np.exp(col - logsumexp(col))


def column_masses(params: ModelParams, omega) -> np.ndarray:
    """Normalized position law at every time; row ``n`` is indexed by ``S_n + N``."""
    N = params.N
    om = as_omega(omega, N)
    _, _, hist = _forward(params.with_(endpoint="free"), om, keep=True)
    out = np.empty((N + 1, 2 * N + 1))
    for n, L in enumerate(hist):
        col = _final_column(L, N)
        out[n] = np.exp(col - logsumexp(col))
    return out


def _terminal(params: ModelParams, lead: tuple = ()) -> np.ndarray:
    N = params.N
    B = np.zeros(lead + (2 * N + 2,))
    if params.endpoint == "constrained":
        B[:] = -np.inf
        B[(..., N)] = 0.0
        B[(..., 2 * N + 1)] = 0.0
    return B


def delta_marginals(params: ModelParams, omega, m: int | None = None) -> np.ndarray:
    """``E[Delta_n]`` for ``n = 1..N`` under the polymer measure (forward-backward).

    With ``m`` given, the expectation is conditional on the occupation being
    ``m`` (for the pinning variant: on ``m`` returns to zero).
    """
    if m is not None:
        return _conditional_delta_marginals(params, omega, m)
    N = params.N
    om = as_omega(omega, N)
    mask = _lower_mask(N, params.variant)
    w = _log_weights(om, params)
    _, _, hist = _forward(params, om, keep=True)
    B = _terminal(params)
    logZ = logsumexp(hist[N] + B)
    out = np.empty(N)
    for n in range(N, 0, -1):
        joint = hist[n] + B
        out[n - 1] = math.exp(logsumexp(joint[mask]) - logZ)
        G = B.copy()
        G[mask] += w[n - 1]
        B = _back_step(G, N)
    return np.clip(out, 0.0, 1.0)


def _conditional_delta_marginals(params: ModelParams, omega, m: int) -> np.ndarray:
    N = params.N
    if N > CONDITIONAL_BUDGET:
        raise BudgetExceeded(f"conditional marginals at N={N} exceed budget {CONDITIONAL_BUDGET}")
    if not 0 <= m <= N:
        raise InvalidArgument(f"m must be in [0, N], got {m}", field="m")
    om = as_omega(omega, N)
    mask = _lower_mask(N, params.variant)
    w = _log_weights(om, params)

    def shift(A):
        out = np.full(A.shape, -np.inf)
        out[1:] = A[:-1]
        return out

    # forward over (occupation so far, state)
    hist = []
    L = _initial(N, (N + 1,))
    L[1:] = -np.inf
    hist.append(L)
    for n in range(1, N + 1):
        L = _step(L, N)
        L[:, mask] = shift(L[:, mask]) + w[n - 1]
        hist.append(L)

    # backward over (occupation still to come, state)
    B = np.full((N + 1, 2 * N + 2), -np.inf)
    B[0] = _terminal(params)
    logZm = logsumexp(hist[N][m] + B[0])
    if not np.isfinite(logZm):
        raise InvalidArgument(f"event occupation={m} has zero probability", field="m")
    out = np.empty(N)
    for n in range(N, 0, -1):
        # pair forward occupation o with remaining m - o
        fw = hist[n][: m + 1, mask]
        bw = B[m::-1, :][:, mask]
        out[n - 1] = math.exp(logsumexp(fw + bw) - logZm)
        G = B.copy()
        G[:, mask] = -np.inf
        G[1:, mask] = B[:-1, mask] + w[n - 1]  # arriving in a weighted slot consumes one unit
        B = _back_step(G, N)
    return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# two-sided exit (constrained endpoint)


def two_sided_exit_partition(params: ModelParams, omega, ell1: int, ell2: int) -> float:
    """``log Z^c`` restricted to ``{max(A & [0,N/2]) <= ell1} or {min(A & [N/2,N]) >= N - ell2}``.

    Computed directly as a sum over the event by carrying two flags:
    a lower half-plane visit in ``(ell1, N/2]`` and one in ``[N/2, N - ell2)``.
    The event is "not both flags".
    """
    if params.variant != "copolymer":
        raise InvalidArgument("two-sided exit is defined for the copolymer only", field="variant")
    if params.endpoint != "constrained":
        raise InvalidArgument("two-sided exit requires endpoint='constrained'", field="endpoint")
    N = params.N
    half = N // 2
    for name, ell in (("ell1", ell1), ("ell2", ell2)):
        if ell % 2 or not 0 <= ell <= half:
            raise InvalidArgument(f"{name} must be even in [0, N/2], got {ell}", field=name)
    om = as_omega(omega, N)
    mask = _lower_mask(N, "copolymer")
    w = _log_weights(om, params)
    L = _initial(N, (4,))
    L[1:] = -np.inf
    for n in range(1, N + 1):
        L = _step(L, N)
        L[:, mask] += w[n - 1]
        for bit, active in ((1, ell1 < n <= half), (2, half <= n < N - ell2)):
            if not active:
                continue
            for layer in range(4):
                if layer & bit:
                    continue
                L[layer | bit, mask] = np.logaddexp(L[layer | bit, mask], L[layer, mask])
                L[layer, mask] = -np.inf
    zero = _zero_mass(L, N)
    return logsumexp(zero[:3])


@dataclass(frozen=True)
class EngineComparison:
    logZ_f: tuple[float, float]
    logZ_c: tuple[float, float]

    @property
    def max_abs_diff(self) -> float:
        return max(abs(self.logZ_f[0] - self.logZ_f[1]), abs(self.logZ_c[0] - self.logZ_c[1]))
