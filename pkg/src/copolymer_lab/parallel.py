"""Replica map with deterministic ordering.

Each replica derives its disorder from ``(seed, replica_index)`` only, so the
result list is identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

_DEFAULT_WORKERS = int(os.environ.get("COPOLYMER_LAB_WORKERS", "1"))


def default_workers() -> int:
    return max(1, _DEFAULT_WORKERS)


def map_replicas(fn: Callable[[int], T], replicas: Iterable[int], workers: int | None = None) -> list[T]:
    replicas = list(replicas)
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(replicas) < 2:
        return [fn(r) for r in replicas]
    chunk = max(1, len(replicas) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, replicas, chunksize=chunk))


def anchored_mean(log_values: Sequence[float] | np.ndarray) -> tuple[float, float]:
    """Mean and standard error of ``exp(log_values)`` in log-anchored form.

    Returns ``(log_mean, relative_stderr)``: the mean is ``exp(log_mean)``
    and its standard error is ``exp(log_mean) * relative_stderr``. Sums use
    compensated summation in a fixed order.
    """
    lv = np.asarray(log_values, dtype=np.float64)
    n = lv.size
    anchor = float(np.max(lv))
    if not math.isfinite(anchor):
        return -math.inf, 0.0
    x = np.exp(lv - anchor)
    mean = math.fsum(x) / n
    var = math.fsum((x - mean) ** 2) / (n - 1) if n > 1 else 0.0
    return anchor + math.log(mean), math.sqrt(var / n) / mean


def mean_and_stderr(values: Sequence[float] | np.ndarray, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(values, dtype=np.float64)
    n = v.shape[axis]
    mean = v.mean(axis=axis)
    se = v.std(axis=axis, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(mean)
    return mean, se
