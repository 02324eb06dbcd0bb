"""Interval estimates, histograms and distance-to-uniform checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInputError

DEFAULT_Z = 3.0


def wilson_interval(successes: int, trials: int, z: float = DEFAULT_Z) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion, clamped to [0, 1]."""
    if trials < 1:
        raise InvalidInputError(f"trials must be >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise InvalidInputError(f"need 0 <= successes <= trials, got {successes}/{trials}")
    if not z > 0:
        raise InvalidInputError(f"z must be > 0, got {z}")
    n = trials
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    centre = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z2 / (4 * n * n)) / denom
    low = 0.0 if successes == 0 else max(0.0, centre - half)
    high = 1.0 if successes == trials else min(1.0, centre + half)
    # guard against rounding pushing p just outside
    return min(low, p), max(high, p)


def mean_interval(total: float, total_sq: float, n: int, z: float = DEFAULT_Z) -> tuple[float, float]:
    """Normal interval ``mean +- z * s / sqrt(n)`` from running sums."""
    if n < 2:
        raise InvalidInputError(f"need at least 2 samples, got {n}")
    mean = total / n
    var = (total_sq - total * total / n) / (n - 1)
    half = z * math.sqrt(max(var, 0.0) / n)
    return mean - half, mean + half


@dataclass(frozen=True)
class EstimateRecord:
    point: float
    ci_low: float
    ci_high: float
    n: int
    analytic: Optional[float] = None

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInputError(f"n must be >= 1, got {self.n}")
        if not self.ci_low <= self.point <= self.ci_high:
            raise InvalidInputError(
                f"interval [{self.ci_low}, {self.ci_high}] excludes {self.point}"
            )

    def contains(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high

    @property
    def rel_error(self) -> Optional[float]:
        if self.analytic is None or self.analytic == 0:
            return None
        return abs(self.point - self.analytic) / self.analytic


@dataclass(frozen=True)
class Tally:
    """Sufficient statistics ``(n, sum, sum of squares)`` of a sample.

    Tallies add associatively.  With integer samples the sums stay Python
    ints, so any sharding merges to exactly the single-pass result.
    """

    n: int = 0
    total: float = 0
    total_sq: float = 0

    @classmethod
    def of(cls, samples) -> "Tally":
        a = np.asarray(samples)
        if a.dtype.kind in "iub":
            a = a.astype(np.int64)
            return cls(int(a.size), int(a.sum()), int((a * a).sum()))
        return cls(int(a.size), float(a.sum()), float((a * a).sum()))

    def __add__(self, other: "Tally") -> "Tally":
        return Tally(self.n + other.n, self.total + other.total, self.total_sq + other.total_sq)

    @property
    def mean(self) -> float:
        return self.total / self.n

    @property
    def is_binary(self) -> bool:
        """True when the samples were all 0 or 1 (only checkable via the sums)."""
        return self.total == self.total_sq and 0 <= self.total <= self.n

    def proportion_estimate(self, z: float = DEFAULT_Z, analytic=None) -> EstimateRecord:
        lo, hi = wilson_interval(int(self.total), self.n, z)
        return EstimateRecord(self.mean, lo, hi, self.n, analytic)

    def mean_estimate(self, z: float = DEFAULT_Z, analytic=None) -> EstimateRecord:
        lo, hi = mean_interval(self.total, self.total_sq, self.n, z)
        m = self.mean
        return EstimateRecord(m, min(lo, m), max(hi, m), self.n, analytic)

    def estimate(self, z: float = DEFAULT_Z, analytic=None) -> EstimateRecord:
        """Wilson interval for 0/1 samples, normal interval otherwise."""
        if self.is_binary or self.n < 2:
            return self.proportion_estimate(z, analytic)
        return self.mean_estimate(z, analytic)


@dataclass
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray = field(default=None)

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=float)
        if self.bin_edges.ndim != 1 or self.bin_edges.size < 2:
            raise InvalidInputError("need at least two bin edges")
        if not np.all(np.diff(self.bin_edges) > 0):
            raise InvalidInputError("bin edges must be strictly increasing")
        if self.counts is None:
            self.counts = np.zeros(self.bin_edges.size - 1, dtype=np.int64)
        else:
            self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (self.bin_edges.size - 1,):
            raise InvalidInputError("counts length must be len(bin_edges) - 1")
        if np.any(self.counts < 0):
            raise InvalidInputError("counts must be non-negative")

    @classmethod
    def uniform(cls, lo: float, hi: float, bins: int) -> "Histogram":
        return cls(np.linspace(lo, hi, bins + 1))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def add(self, values) -> None:
        c, _ = np.histogram(values, bins=self.bin_edges)
        self.counts += c

    def merged(self, other: "Histogram") -> "Histogram":
        if not np.array_equal(self.bin_edges, other.bin_edges):
            raise InvalidInputError("cannot merge histograms with different edges")
        return Histogram(self.bin_edges.copy(), self.counts + other.counts)

    def __eq__(self, other):
        return (
            isinstance(other, Histogram)
            and np.array_equal(self.bin_edges, other.bin_edges)
            and np.array_equal(self.counts, other.counts)
        )


def tv_distance_to_uniform(hist: Histogram) -> float:
    """Total variation distance between the histogram and the uniform pmf."""
    total = hist.total
    if total < 1:
        raise InvalidInputError("histogram is empty")
    widths = np.diff(hist.bin_edges)
    if not np.allclose(widths, widths[0], rtol=1e-9, atol=0):
        raise InvalidInputError("bins must have equal widths")
    k = hist.counts.size
    return 0.5 * float(np.abs(hist.counts / total - 1.0 / k).sum())
