from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..disorder import DisorderVector
from ..errors import InvalidArgument, require_even

ENDPOINTS = ("free", "constrained")
VARIANTS = ("copolymer", "pinning")


@dataclass(frozen=True)
class ModelParams:
    """Coupling ``lam``, asymmetry ``h``, length ``N``, endpoint condition and model variant."""

    lam: float
    h: float
    N: int
    endpoint: str = "free"
    variant: str = "copolymer"

    def __post_init__(self):
        require_even("N", self.N)
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise InvalidArgument(f"lambda must be >= 0, got {self.lam}", field="lambda")
        if not math.isfinite(self.h):
            raise InvalidArgument("h must be finite", field="h")
        if self.endpoint not in ENDPOINTS:
            raise InvalidArgument(f"endpoint must be one of {ENDPOINTS}, got {self.endpoint!r}", field="endpoint")
        if self.variant not in VARIANTS:
            raise InvalidArgument(f"variant must be one of {VARIANTS}, got {self.variant!r}", field="variant")
        if self.variant == "copolymer" and self.h < 0:
            raise InvalidArgument(f"h must be >= 0 for the copolymer, got {self.h}", field="h")

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


def as_omega(omega, N: int) -> np.ndarray:
    """First ``N`` disorder values as a float array, validated."""
    values = omega.values if isinstance(omega, DisorderVector) else np.asarray(omega, dtype=np.float64)
    if values.ndim != 1 or values.size < N:
        raise InvalidArgument(f"disorder has length {values.size}, need at least {N}", field="omega")
    values = values[:N]
    if not np.all(np.isfinite(values)):
        raise InvalidArgument("disorder contains NaN or infinite values", field="omega")
    return values


def prefix_sums(omega: np.ndarray, h: float) -> np.ndarray:
    """``P[n] = sum_{j<=n} (omega_j + h)`` with ``P[0] = 0``."""
    return np.concatenate(([0.0], np.cumsum(omega + h)))
