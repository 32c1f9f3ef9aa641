"""Throughput measurement for the sketches."""

from __future__ import annotations

import statistics
import time
from typing import Callable

import numpy as np

from .sketch import FullUpdateSketch, RhhhSketch

__all__ = ["measure_throughput", "warm_up"]


def warm_up() -> None:
    """Trigger kernel compilation so that it is excluded from timings."""
    from .hierarchy import HierarchySpec
    from .stats import ConfidenceParams

    spec = HierarchySpec.build("src-byte")
    params = ConfidenceParams.from_eps_delta(0.1, 0.1)
    keys = np.arange(64, dtype=np.int64)
    RhhhSketch(spec, params).update_packed(keys)
    FullUpdateSketch(spec, params).update_packed(keys)


def measure_throughput(factory: Callable[[], object], keys: np.ndarray,
                       repeats: int = 5) -> list[float]:
    """Packets per second of ``factory().update_packed(keys)``, once per repeat.

    A fresh sketch is built for every repeat; construction is not timed.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    keys = np.ascontiguousarray(keys, dtype=np.int64)
    warm_up()
    rates = []
    for _ in range(repeats):
        sketch = factory()
        start = time.perf_counter()
        sketch.update_packed(keys)
        elapsed = time.perf_counter() - start
        rates.append(keys.shape[0] / elapsed)
    return rates


def summarize(rates: list[float]) -> tuple[float, float]:
    mean = statistics.fmean(rates)
    std = statistics.stdev(rates) if len(rates) > 1 else 0.0
    return mean, std
