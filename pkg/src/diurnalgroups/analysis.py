"""Distribution summaries over finished runs.

The central artifact is a bucketed cumulative-frequency curve of the
per-slot group availabilities: bucket j of n covers ((j-1)/n, j/n] over
[0, 1] (zeros land in bucket 1), and the curve reports the percentage of
values at or below each bucket's upper edge. The bucket count comes from
Scott's rule unless the caller pins it, which is how curves from
different runs are made comparable.

Everything here is a pure function of run outputs; rendering and file
output live elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigMismatch,
    DegenerateSample,
    EmptyInput,
    InvalidAlpha,
    InvalidParams,
)
from .simulator import RunMetrics

# Fallback bucket count when Scott's rule has nothing to work with.
DEFAULT_BUCKETS = 20

# Threshold below which a group-slot counts as poorly covered.
LOW_AVAILABILITY = 0.6


def scott_bucket_count(values) -> int:
    """Bucket count from Scott's reference rule, clamped to [1, 1000].

    Bin width h = 3.49 * sigma * N^(-1/3) with sigma the sample standard
    deviation; the count is ceil(1/h). Needs at least two values with
    nonzero spread, otherwise DegenerateSample.
    """
    data = np.asarray(values, dtype=float)
    if data.size < 2:
        raise DegenerateSample(f"need at least 2 values, got {data.size}")
    if float(data.max()) == float(data.min()):
        # Identical values can still show ~1e-16 of std from summation
        # rounding, so the spread check must not go through sigma.
        raise DegenerateSample("all values identical")
    sigma = float(data.std(ddof=1))
    if sigma == 0.0:
        # Distinct subnormal values can underflow the variance to zero.
        raise DegenerateSample("spread vanishes at double precision")
    width = 3.49 * sigma * data.size ** (-1.0 / 3.0)
    return min(1000, max(1, math.ceil(1.0 / width)))


def _scott_or_default(values) -> int:
    try:
        return scott_bucket_count(values)
    except DegenerateSample:
        return DEFAULT_BUCKETS


@dataclass(frozen=True)
class Histogram:
    """Counts over n equal buckets of [0, 1] plus the cumulative curve."""

    bucket_count: int
    counts: np.ndarray
    cumulative_percent: np.ndarray

    @property
    def bucket_uppers(self) -> np.ndarray:
        n = self.bucket_count
        return np.arange(1, n + 1, dtype=float) / n

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def bucket_values(values, bucket_count: int) -> Histogram:
    """Histogram a multiset of values from [0, 1].

    Value v lands in bucket ceil(v * n); zeros go to bucket 1. The
    cumulative percentages divide by the total count, so the last entry
    is exactly 100.0.
    """
    if bucket_count < 1:
        raise InvalidParams(f"bucket_count must be positive, got {bucket_count}")
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        raise EmptyInput("cannot bucket an empty multiset")
    indices = np.clip(np.ceil(data * bucket_count).astype(np.int64), 1, bucket_count)
    counts = np.bincount(indices - 1, minlength=bucket_count)
    cumulative = 100.0 * np.cumsum(counts) / data.size
    return Histogram(bucket_count, counts, cumulative)


def availability_cdf(metrics: RunMetrics, alpha: int, fixed_bins: int | None = None) -> Histogram:
    """Cumulative curve of a run's final group-slot availabilities.

    alpha selects which profile to pool: 1 for at-least-one-online, 2
    for at-least-two-online. Without `fixed_bins` the bucket count comes
    from Scott's rule, falling back to DEFAULT_BUCKETS for degenerate
    samples.
    """
    if alpha == 1:
        values = metrics.one_values
    elif alpha == 2:
        values = metrics.two_values
    else:
        raise InvalidAlpha(f"alpha must be 1 or 2, got {alpha}")
    if values.size == 0:
        raise EmptyInput("run has no groups")
    return bucket_values(values, fixed_bins if fixed_bins is not None else _scott_or_default(values))


def fraction_below(values, threshold: float = LOW_AVAILABILITY) -> float:
    """Share of values strictly below the threshold."""
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        raise EmptyInput("cannot take a fraction of an empty multiset")
    return float(np.mean(data < threshold))


@dataclass(frozen=True)
class RunStats:
    """Headline distribution numbers for one run's 1-availability."""

    value_count: int
    frac_below_low: float
    median: float
    mean: float
    size_histogram: dict[int, int]


def run_stats(metrics: RunMetrics) -> RunStats:
    one = metrics.one_values
    return RunStats(
        value_count=int(one.size),
        frac_below_low=fraction_below(one),
        median=float(np.median(one)),
        mean=float(np.mean(one)),
        size_histogram=metrics.group_size_histogram,
    )


@dataclass(frozen=True)
class ComparisonReport:
    """Side-by-side stats for two runs over the same world."""

    a: RunStats
    b: RunStats
    bucket_count: int
    a_dominates_b: bool

    @property
    def frac_below_delta(self) -> float:
        return self.a.frac_below_low - self.b.frac_below_low

    @property
    def median_delta(self) -> float:
        return self.a.median - self.b.median

    @property
    def mean_delta(self) -> float:
        return self.a.mean - self.b.mean


def compare_runs(a: RunMetrics, b: RunMetrics, fixed_bins: int | None = None) -> ComparisonReport:
    """Compare two runs built from the identical world.

    The dominance flag is set when a's cumulative curve sits at or below
    b's in every shared bucket, i.e. a concentrates less mass at low
    availabilities. Runs must agree on seed, slot count, and population.
    """
    for field_name in ("seed", "slot_count", "peer_count"):
        va, vb = getattr(a, field_name), getattr(b, field_name)
        if va != vb:
            raise ConfigMismatch(f"{field_name} differs: {va} vs {vb}")
    pooled = np.concatenate([a.one_values, b.one_values])
    buckets = fixed_bins if fixed_bins is not None else _scott_or_default(pooled)
    curve_a = bucket_values(a.one_values, buckets).cumulative_percent
    curve_b = bucket_values(b.one_values, buckets).cumulative_percent
    return ComparisonReport(
        a=run_stats(a),
        b=run_stats(b),
        bucket_count=buckets,
        a_dominates_b=bool(np.all(curve_a <= curve_b + 1e-9)),
    )


def run_summary(metrics: RunMetrics) -> dict[str, object]:
    """The fixed summary row emitted for every run, in column order."""
    one = metrics.one_values
    two = metrics.two_values
    return {
        "metric": metrics.metric.value,
        "max_group_size": metrics.max_group_size,
        "seed": metrics.seed,
        "rounds_to_convergence": metrics.rounds_to_convergence,
        "frac_below_0.6_a1": fraction_below(one),
        "median_a1": float(np.median(one)),
        "mean_a1": float(np.mean(one)),
        "frac_below_0.6_a2": fraction_below(two),
        "total_messages": metrics.total_messages,
    }
