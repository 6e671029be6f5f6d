"""Helpers shared by the disorder-averaged experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, is_dataclass

import numpy as np

from .. import __version__

SCHEMA_VERSION = 1


def to_jsonable(obj):
    """Recursively convert dataclasses / numpy values to plain JSON types (non-finite -> None)."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def result_record(experiment: str, payload, seed: int | None, passed: bool | None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "experiment": experiment,
        "software_version": __version__,
        "seed": seed,
        "passed": passed,
        "result": to_jsonable(payload),
    }


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    slope_se: float
    intercept_se: float
    n_points: int


def linear_fit(x, y, weights=None) -> LinearFit:
    """Weighted least squares ``y = intercept + slope * x`` with standard errors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=np.float64)
    A = np.vstack([np.ones_like(x), x]).T
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(A * sw[:, None], y * sw, rcond=None)
    n = x.size
    resid = (y - A @ coef) * sw
    dof = max(n - 2, 1)
    s2 = float(resid @ resid) / dof
    try:
        cov = np.linalg.inv((A * w[:, None]).T @ A)
        if weights is None:
            cov = cov * s2
    except np.linalg.LinAlgError:
        cov = np.full((2, 2), np.nan)
    return LinearFit(float(coef[1]), float(coef[0]), float(np.sqrt(max(cov[1, 1], 0.0))),
                     float(np.sqrt(max(cov[0, 0], 0.0))), n)


def stderr(values, axis: int = 0) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    n = v.shape[axis]
    if n < 2:
        return np.zeros(np.delete(v.shape, axis))
    return v.std(axis=axis, ddof=1) / math.sqrt(n)


def check_grid(name: str, grid, even: bool = True, minimum: int = 0) -> np.ndarray:
    from ..errors import InvalidArgument

    g = np.asarray(list(grid), dtype=np.int64)
    if g.size == 0:
        raise InvalidArgument(f"{name} grid is empty", field=name)
    if np.any(np.diff(g) <= 0):
        raise InvalidArgument(f"{name} grid must be strictly increasing", field=name)
    if even and np.any(g % 2):
        raise InvalidArgument(f"{name} grid must contain even values", field=name)
    if np.any(g < minimum):
        raise InvalidArgument(f"{name} grid values must be >= {minimum}", field=name)
    return g
