"""Command-line front end.

A single invocation runs one sweep: the Cartesian product of the metric,
max-group-size, and seed axes (each a single value or a list). Every
cell gets its own directory under the output root holding the two
cumulative-curve CSVs, the per-group table, a one-row summary, and a
copy of the resolved configuration; the root collects the cross-cell
comparison table and the rendered overlay figures.

Configuration comes from a plain `key = value` scenario file, from
flags, or both; a flag wins over the scenario for the same key. Cells
that share a seed share the identical world regardless of metric or
size cap, so their outputs are directly comparable.

Exit codes: 0 success, 1 configuration problem, 2 I/O failure, 3 at
least one cell hit the round cap without converging (suppressed by
--allow-nonconverged).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .analysis import availability_cdf, run_summary
from .availability import GeneratorParams
from .errors import (
    ConfigError,
    InvalidParams,
    NoConvergence,
    TopologyInfeasible,
)
from .figures import render_cdf_overlays
from .metrics import Metric
from .seeding import DERIVATION_NOTE
from .simulator import (
    ChurnMode,
    RunMetrics,
    SimConfig,
    build_world,
    random_grouping,
    run_to_convergence,
)

_METRIC_CHOICES = [m.value for m in Metric]
_CHURN_CHOICES = [c.value for c in ChurnMode]


# -- scenario parsing -------------------------------------------------------


def _parse_int(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {text!r}") from None


def _parse_float(key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(key, f"expected a number, got {text!r}") from None


def _parse_metric(key: str, text: str) -> Metric:
    try:
        return Metric(text.strip().lower())
    except ValueError:
        raise ConfigError(key, f"expected one of {_METRIC_CHOICES}, got {text!r}") from None


def _parse_churn(key: str, text: str) -> ChurnMode:
    try:
        return ChurnMode(text.strip().lower())
    except ValueError:
        raise ConfigError(key, f"expected one of {_CHURN_CHOICES}, got {text!r}") from None


def _parse_bool(key: str, text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ConfigError(key, f"expected true or false, got {text!r}")


def _parse_str(key: str, text: str) -> str:
    return text.strip()


@dataclass(frozen=True)
class _KeySpec:
    parse: Callable[[str, str], object]
    sweep: bool = False


_KEYS: dict[str, _KeySpec] = {
    "peers": _KeySpec(_parse_int),
    "slots": _KeySpec(_parse_int),
    "degree_min": _KeySpec(_parse_int),
    "degree_max": _KeySpec(_parse_int),
    "knowncount": _KeySpec(_parse_int),
    "max_group_size": _KeySpec(_parse_int, sweep=True),
    "metric": _KeySpec(_parse_metric, sweep=True),
    "churn": _KeySpec(_parse_churn),
    "seed": _KeySpec(_parse_int, sweep=True),
    "max_rounds": _KeySpec(_parse_int),
    "convergence_window": _KeySpec(_parse_int),
    "min_contribution": _KeySpec(_parse_float),
    "fixed_bins": _KeySpec(_parse_int),
    "out": _KeySpec(_parse_str),
    "allow_nonconverged": _KeySpec(_parse_bool),
    "peak_level": _KeySpec(_parse_float),
    "base_level": _KeySpec(_parse_float),
    "spread": _KeySpec(_parse_float),
    "noise": _KeySpec(_parse_float),
}


def parse_scenario(path: Path | str) -> dict[str, object]:
    """Read a `key = value` scenario file.

    `#` starts a comment, blank lines are skipped, and the sweepable
    keys (metric, max_group_size, seed) accept `[a, b, c]` or bare
    comma-separated lists. Unknown and duplicate keys are rejected.
    """
    text = Path(path).read_text(encoding="utf-8")
    settings: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if not sep or not key:
            raise ConfigError("scenario", f"line {lineno}: expected 'key = value'")
        spec = _KEYS.get(key)
        if spec is None:
            raise ConfigError(key, "unknown scenario key")
        if key in settings:
            raise ConfigError(key, "duplicate scenario key")
        settings[key] = _parse_value(key, value, spec)
    return settings


def _parse_value(key: str, value: str, spec: _KeySpec) -> object:
    if value.startswith("[") and value.endswith("]"):
        items = value[1:-1].split(",")
    elif "," in value:
        items = value.split(",")
    else:
        return spec.parse(key, value)
    if not spec.sweep:
        raise ConfigError(key, "this key takes a single value, not a list")
    parsed: list[object] = []
    for item in items:
        item = item.strip()
        if item:
            element = spec.parse(key, item)
            if element not in parsed:
                parsed.append(element)
    if not parsed:
        raise ConfigError(key, "empty list")
    return parsed


# -- flag parsing -----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ConfigError, not exit(2)."""

    def error(self, message: str):
        raise ConfigError("usage", message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="diurnalgroups",
        description="Round-based simulator for availability-aware peer grouping.",
    )
    parser.add_argument("--scenario", type=Path, help="key = value scenario file")
    parser.add_argument("--peers", type=int, help="population size")
    parser.add_argument("--slots", type=int, help="slots per day")
    parser.add_argument("--degree-min", type=int, help="minimum overlay degree")
    parser.add_argument("--degree-max", type=int, help="maximum overlay degree")
    parser.add_argument("--knowncount", type=int, help="candidate cache capacity")
    parser.add_argument("--max-group-size", type=int, help="group size cap")
    parser.add_argument("--metric", choices=_METRIC_CHOICES, help="pairing score or baseline")
    parser.add_argument("--churn", choices=_CHURN_CHOICES, help="presence model")
    parser.add_argument("--seed", type=int, help="world seed")
    parser.add_argument("--max-rounds", type=int, help="round cap per run")
    parser.add_argument("--convergence-window", type=int, help="quiet rounds declaring convergence")
    parser.add_argument("--min-contribution", type=float, help="invitation score threshold")
    parser.add_argument("--fixed-bins", type=int, help="pin the bucket count for all curves")
    parser.add_argument("--out", type=str, help="output directory")
    parser.add_argument(
        "--allow-nonconverged",
        action="store_true",
        default=None,
        help="exit 0 even when a cell hits the round cap",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def _resolve(args: argparse.Namespace) -> dict[str, object]:
    """Merge scenario and flags into one settings map; flags win."""
    settings: dict[str, object] = {}
    if args.scenario is not None:
        settings.update(parse_scenario(args.scenario))
    flags: dict[str, object | None] = {
        "peers": args.peers,
        "slots": args.slots,
        "degree_min": args.degree_min,
        "degree_max": args.degree_max,
        "knowncount": args.knowncount,
        "max_group_size": args.max_group_size,
        "metric": None if args.metric is None else Metric(args.metric),
        "churn": None if args.churn is None else ChurnMode(args.churn),
        "seed": args.seed,
        "max_rounds": args.max_rounds,
        "convergence_window": args.convergence_window,
        "min_contribution": args.min_contribution,
        "fixed_bins": args.fixed_bins,
        "out": args.out,
        "allow_nonconverged": args.allow_nonconverged,
    }
    for key, value in flags.items():
        if value is not None:
            settings[key] = value
    for required in ("metric", "seed", "out"):
        if required not in settings:
            raise ConfigError(required, "missing required value")
    return settings


# -- sweep execution --------------------------------------------------------


@dataclass(frozen=True)
class CellResult:
    """One executed sweep cell: its name, config, and run output."""

    name: str
    cfg: SimConfig
    metrics: RunMetrics


def _axis(settings: dict[str, object], key: str, fallback: list) -> list:
    value = settings.get(key)
    if value is None:
        return fallback
    return list(value) if isinstance(value, list) else [value]


def _cell_config(settings: dict[str, object], metric: Metric, size: int, seed: int) -> SimConfig:
    generator = GeneratorParams(
        **{
            name: settings[name]
            for name in ("peak_level", "base_level", "spread", "noise")
            if name in settings
        }
    )
    field_map = {
        "peers": "peer_count",
        "slots": "slot_count",
        "degree_min": "degree_min",
        "degree_max": "degree_max",
        "knowncount": "knowncount",
        "churn": "churn_mode",
        "max_rounds": "max_rounds",
        "convergence_window": "convergence_window",
        "min_contribution": "min_contribution",
    }
    kwargs = {field: settings[key] for key, field in field_map.items() if key in settings}
    return SimConfig(
        metric=metric, max_group_size=size, seed=seed, generator=generator, **kwargs
    )


def execute_run(cfg: SimConfig) -> RunMetrics:
    """Build the world and run one cell, tolerating a missed convergence."""
    world = build_world(cfg)
    if cfg.metric is Metric.RANDOM:
        return random_grouping(world)
    try:
        return run_to_convergence(world)
    except NoConvergence as stopped:
        return stopped.metrics


def run_sweep(settings: dict[str, object]) -> list[CellResult]:
    """Run every cell and write the full output tree."""
    out_root = Path(settings["out"])
    out_root.mkdir(parents=True, exist_ok=True)
    fixed_bins = settings.get("fixed_bins")
    results: list[CellResult] = []
    for metric in _axis(settings, "metric", []):
        for size in _axis(settings, "max_group_size", [4, 6, 8]):
            for seed in _axis(settings, "seed", []):
                cfg = _cell_config(settings, metric, size, seed)
                cfg.validate()
                name = f"{metric.value}_g{size}_s{seed}"
                metrics = execute_run(cfg)
                run_dir = out_root / name
                run_dir.mkdir(exist_ok=True)
                emit_csv(metrics, run_dir, fixed_bins)
                _write_config_copy(run_dir / "config.txt", name, cfg, fixed_bins)
                results.append(CellResult(name, cfg, metrics))
    _write_comparison(out_root / "comparison.csv", results)
    render_cdf_overlays([r.metrics for r in results], out_root, fixed_bins)
    return results


# -- output files -----------------------------------------------------------


def _fmt(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".10g")
    return str(value)


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(value) for value in row) + "\n")


def emit_csv(metrics: RunMetrics, out_dir: Path | str, fixed_bins: int | None = None) -> list[Path]:
    """Write cdf1.csv, cdf2.csv, groups.csv, and summary.csv for one run."""
    out_dir = Path(out_dir)
    written: list[Path] = []
    for alpha in (1, 2):
        hist = availability_cdf(metrics, alpha, fixed_bins)
        path = out_dir / f"cdf{alpha}.csv"
        _write_rows(
            path,
            ["bucket_upper", "count", "cumulative_percent"],
            zip(
                hist.bucket_uppers.tolist(),
                hist.counts.tolist(),
                hist.cumulative_percent.tolist(),
            ),
        )
        written.append(path)
    groups_path = out_dir / "groups.csv"
    header = ["group_id", "size"] + [f"slot_{i}" for i in range(metrics.slot_count)]
    _write_rows(
        groups_path,
        header,
        ([g.group_id, g.size, *g.one_availability.tolist()] for g in metrics.groups),
    )
    written.append(groups_path)
    summary = run_summary(metrics)
    summary_path = out_dir / "summary.csv"
    _write_rows(summary_path, list(summary), [list(summary.values())])
    written.append(summary_path)
    return written


def _write_comparison(path: Path, results: Sequence[CellResult]) -> None:
    header = [
        "cell",
        "metric",
        "max_group_size",
        "seed",
        "converged",
        "rounds_to_convergence",
        "group_count",
        "frac_below_0.6_a1",
        "median_a1",
        "mean_a1",
        "frac_below_0.6_a2",
        "mean_a2",
        "total_messages",
    ]
    rows = []
    for result in results:
        m = result.metrics
        summary = run_summary(m)
        rows.append(
            [
                result.name,
                summary["metric"],
                summary["max_group_size"],
                summary["seed"],
                m.converged,
                summary["rounds_to_convergence"],
                len(m.groups),
                summary["frac_below_0.6_a1"],
                summary["median_a1"],
                summary["mean_a1"],
                summary["frac_below_0.6_a2"],
                float(np.mean(m.two_values)),
                summary["total_messages"],
            ]
        )
    _write_rows(path, header, rows)


def _write_config_copy(path: Path, name: str, cfg: SimConfig, fixed_bins: int | None) -> None:
    lines = [
        f"# resolved configuration for run cell {name}",
        f"# diurnalgroups {__version__}",
        f"# internal stream seeding: {DERIVATION_NOTE}",
        "",
        f"peers = {cfg.peer_count}",
        f"slots = {cfg.slot_count}",
        f"degree_min = {cfg.degree_min}",
        f"degree_max = {cfg.degree_max}",
        f"knowncount = {cfg.knowncount}",
        f"max_group_size = {cfg.max_group_size}",
        f"metric = {cfg.metric.value}",
        f"churn = {cfg.churn_mode.value}",
        f"seed = {cfg.seed}",
        f"max_rounds = {cfg.max_rounds}",
        f"convergence_window = {cfg.window}",
        f"min_contribution = {_fmt(cfg.min_contribution)}",
        f"peak_level = {_fmt(cfg.generator.peak_level)}",
        f"base_level = {_fmt(cfg.generator.base_level)}",
        f"spread = {_fmt(cfg.generator.spread)}",
        f"noise = {_fmt(cfg.generator.noise)}",
    ]
    if fixed_bins is not None:
        lines.append(f"fixed_bins = {fixed_bins}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# -- entry point ------------------------------------------------------------


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        settings = _resolve(args)
        results = run_sweep(settings)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (InvalidParams, TopologyInfeasible) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 2
    stragglers = [r.name for r in results if not r.metrics.converged]
    if stragglers:
        print(
            "warning: round cap reached without convergence: " + ", ".join(stragglers),
            file=sys.stderr,
        )
        if not settings.get("allow_nonconverged", False):
            return 3
    return 0


def console_main() -> None:
    sys.exit(main())
