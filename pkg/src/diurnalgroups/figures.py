"""Figure rendering for sweep outputs.

One PNG per (alpha, group-size cap): the cumulative availability curves
of every metric that ran at that cap, pooled across seeds so each metric
contributes a single curve. All curves in a figure share one bucket
grid, otherwise they would not be comparable. Rendering targets files
only; no display backend is ever needed.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import bucket_values, scott_bucket_count, DEFAULT_BUCKETS
from .errors import DegenerateSample
from .metrics import Metric
from .simulator import RunMetrics

_CURVE_STYLE = {
    Metric.RATIO_EXPONENT: dict(color="tab:blue", marker="o"),
    Metric.UTILITY_GAIN: dict(color="tab:green", marker="s"),
    Metric.RANDOM: dict(color="tab:red", marker="^"),
}


def render_cdf_overlays(
    results: Sequence[RunMetrics], out_dir: Path | str, fixed_bins: int | None = None
) -> list[Path]:
    """Write cdf{alpha}_g{size}.png files next to the sweep's CSVs.

    Returns the written paths, sorted. `fixed_bins` pins the shared
    bucket count; otherwise Scott's rule runs on everything pooled into
    the figure (falling back to DEFAULT_BUCKETS).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_size: dict[int, list[RunMetrics]] = defaultdict(list)
    for metrics in results:
        by_size[metrics.max_group_size].append(metrics)
    written: list[Path] = []
    for size in sorted(by_size):
        for alpha in (1, 2):
            path = out_dir / f"cdf{alpha}_g{size}.png"
            _render_one(by_size[size], alpha, size, path, fixed_bins)
            written.append(path)
    return written


def _pool(cell_results: Sequence[RunMetrics], alpha: int) -> dict[Metric, np.ndarray]:
    pooled: dict[Metric, list[np.ndarray]] = defaultdict(list)
    for metrics in cell_results:
        pooled[metrics.metric].append(
            metrics.one_values if alpha == 1 else metrics.two_values
        )
    return {m: np.concatenate(chunks) for m, chunks in pooled.items()}


def _render_one(
    cell_results: Sequence[RunMetrics],
    alpha: int,
    size: int,
    path: Path,
    fixed_bins: int | None,
) -> None:
    curves = _pool(cell_results, alpha)
    everything = np.concatenate(list(curves.values()))
    if fixed_bins is not None:
        buckets = fixed_bins
    else:
        try:
            buckets = scott_bucket_count(everything)
        except DegenerateSample:
            buckets = DEFAULT_BUCKETS
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for metric in Metric:
        values = curves.get(metric)
        if values is None:
            continue
        hist = bucket_values(values, buckets)
        ax.plot(
            hist.bucket_uppers,
            hist.cumulative_percent,
            markersize=3.5,
            linewidth=1.2,
            label=metric.value,
            **_CURVE_STYLE[metric],
        )
    ax.set_xlabel(f"{alpha}-availability")
    ax.set_ylabel("cumulative percent of group-slots")
    ax.set_title(f"group size cap {size}")
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 105.0)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper left")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
