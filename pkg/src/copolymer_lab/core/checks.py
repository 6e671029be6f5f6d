"""Exact identities and inequalities that every computed spectrum must satisfy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgument
from ..walks import WalkTables
from .excursion import occupation_spectrum
from .params import ModelParams, as_omega

LIPSCHITZ_SLACK = 1e-12


@dataclass(frozen=True)
class ShiftCheck:
    m: int
    log_ratio: float  # log Z(h) - log Z(h - eps) on {occupation = m}
    expected: float  # -2 lam eps m
    ok: bool


def shift_identity_check(params: ModelParams, omega, eps: float, m: int,
                         tables: WalkTables | None = None, tol: float = 1e-10) -> ShiftCheck:
    """On ``{occupation = m}`` shifting ``h`` by ``eps`` multiplies the weight by ``exp(-2 lam eps m)``."""
    if params.variant != "copolymer":
        raise InvalidArgument("shift identity is stated for the copolymer", field="variant")
    if params.h - eps < 0:
        raise InvalidArgument(f"h - eps must be >= 0, got {params.h - eps}", field="eps")
    hi = occupation_spectrum(params, omega, tables)
    lo = occupation_spectrum(params.with_(h=params.h - eps), omega, tables)
    i = hi._index(m)
    ratio = float(hi.logZ_by_m[i] - lo.logZ_by_m[i])
    expected = -2.0 * params.lam * eps * m
    ok = abs(ratio - expected) <= tol * (1.0 + abs(float(hi.logZ_by_m[i])))
    return ShiftCheck(m, ratio, expected, ok)


def lipschitz_check(params: ModelParams, omega, omega_prime, m: int,
                    tables: WalkTables | None = None) -> tuple[float, float, bool]:
    """``|F_omega(m) - F_omega'(m)| <= (2 lam sqrt(m) / N) * ||omega - omega'||``."""
    N = params.N
    if m % 2 or not 0 <= m <= N:
        raise InvalidArgument(f"m must be even in [0, N], got {m}", field="m")
    a = as_omega(omega, N)
    b = as_omega(omega_prime, N)
    Fa = occupation_spectrum(params, a, tables).free_energy(m)
    Fb = occupation_spectrum(params, b, tables).free_energy(m)
    lhs = abs(Fa - Fb)
    rhs = 2.0 * params.lam * math.sqrt(m) / N * float(np.linalg.norm(a - b))
    return lhs, rhs, lhs <= rhs + LIPSCHITZ_SLACK
