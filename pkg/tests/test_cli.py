"""Scenario parsing, sweep outputs, and process exit codes."""

from __future__ import annotations

import numpy as np
import pytest

from diurnalgroups import ChurnMode, ConfigError, Metric
from diurnalgroups.cli import _fmt, _resolve, build_parser, main, parse_scenario

RUN_FILES = {"cdf1.csv", "cdf2.csv", "groups.csv", "summary.csv", "config.txt"}

SWEEP = """\
# three-slot desk-scale sweep
peers = 12
slots = 3
degree_min = 2
degree_max = 3
knowncount = 4

max_group_size = [3, 4]
metric = [eq2, random]   # score plus baseline
seed = 1, 2
"""


def scenario_file(tmp_path, text, name="scenario.txt"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


# -- scenario parsing ----------------------------------------------------------


def test_scenario_parses_types_comments_and_lists(tmp_path):
    parsed = parse_scenario(scenario_file(tmp_path, SWEEP))
    assert parsed["peers"] == 12 and parsed["knowncount"] == 4
    assert parsed["max_group_size"] == [3, 4]
    assert parsed["metric"] == [Metric.RATIO_EXPONENT, Metric.RANDOM]
    assert parsed["seed"] == [1, 2]


def test_scenario_accepts_case_insensitive_enums(tmp_path):
    parsed = parse_scenario(scenario_file(tmp_path, "metric = EQ3\nchurn = Sampled\n"))
    assert parsed["metric"] is Metric.UTILITY_GAIN
    assert parsed["churn"] is ChurnMode.SAMPLED


def test_scenario_deduplicates_sweep_lists(tmp_path):
    parsed = parse_scenario(scenario_file(tmp_path, "seed = [3, 3, 5]\n"))
    assert parsed["seed"] == [3, 5]


@pytest.mark.parametrize(
    "line,key",
    [
        ("wibble = 3", "wibble"),
        ("peers = twelve", "peers"),
        ("peers = [3, 4]", "peers"),
        ("metric = latency", "metric"),
        ("seed = []", "seed"),
        ("just some words", "scenario"),
        ("peers = 3\npeers = 4", "peers"),
    ],
)
def test_scenario_rejections_name_the_offending_key(tmp_path, line, key):
    with pytest.raises(ConfigError) as caught:
        parse_scenario(scenario_file(tmp_path, line + "\n"))
    assert caught.value.key == key


# -- settings resolution ---------------------------------------------------------


def test_flags_override_scenario_values(tmp_path):
    path = scenario_file(tmp_path, "metric = eq2\nseed = 1\nout = from_scenario\npeers = 50\n")
    args = build_parser().parse_args(["--scenario", str(path), "--seed", "9", "--out", "cli_dir"])
    settings = _resolve(args)
    assert settings["seed"] == 9
    assert settings["out"] == "cli_dir"
    assert settings["peers"] == 50
    assert settings["metric"] is Metric.RATIO_EXPONENT


@pytest.mark.parametrize("missing", ["metric", "seed", "out"])
def test_each_required_setting_is_enforced(tmp_path, missing):
    values = {"metric": "eq2", "seed": "4", "out": "somewhere"}
    del values[missing]
    flags = [flag for key, value in values.items() for flag in (f"--{key}", value)]
    with pytest.raises(ConfigError) as caught:
        _resolve(build_parser().parse_args(flags))
    assert caught.value.key == missing


def test_value_formatting_for_csv_cells():
    assert _fmt(True) == "true" and _fmt(False) == "false"
    assert _fmt(3) == "3" and _fmt(np.int64(-2)) == "-2"
    assert _fmt(0.5) == "0.5"
    assert _fmt(np.float64(1 / 3)) == "0.3333333333"
    assert _fmt(100.0) == "100"
    assert _fmt("eq2") == "eq2"


# -- full sweeps -----------------------------------------------------------------


def run_main(tmp_path, scenario_text, out_name, extra=()):
    path = scenario_file(tmp_path, scenario_text)
    out = tmp_path / out_name
    code = main(["--scenario", str(path), "--out", str(out), *extra])
    return code, out


def read_rows(path):
    header, *rows = path.read_text(encoding="utf-8").splitlines()
    return header.split(","), [row.split(",") for row in rows]


def test_sweep_writes_the_full_output_tree(tmp_path):
    code, out = run_main(tmp_path, SWEEP, "out")
    assert code == 0
    cells = [
        f"{metric}_g{size}_s{seed}"
        for metric in ("eq2", "random")
        for size in (3, 4)
        for seed in (1, 2)
    ]
    for cell in cells:
        assert {p.name for p in (out / cell).iterdir()} == RUN_FILES
    top_level = {p.name for p in out.iterdir()}
    assert top_level == set(cells) | {
        "comparison.csv",
        "cdf1_g3.png",
        "cdf2_g3.png",
        "cdf1_g4.png",
        "cdf2_g4.png",
    }


def test_comparison_table_covers_every_cell(tmp_path):
    code, out = run_main(tmp_path, SWEEP, "out")
    assert code == 0
    header, rows = read_rows(out / "comparison.csv")
    assert header == [
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
    assert len(rows) == 8
    by_cell = {row[0]: row for row in rows}
    assert by_cell["random_g4_s2"][4] == "true"
    assert by_cell["random_g4_s2"][5] == "0"
    assert by_cell["random_g4_s2"][12] == "0"
    for row in rows:
        assert float(row[7]) <= 1.0 and float(row[8]) <= 1.0


def test_run_directory_contents_are_consistent(tmp_path):
    code, out = run_main(tmp_path, SWEEP, "out")
    assert code == 0
    cell = out / "eq2_g3_s1"

    header, rows = read_rows(cell / "groups.csv")
    assert header == ["group_id", "size", "slot_0", "slot_1", "slot_2"]
    assert all(len(row) == 5 for row in rows)
    assert sum(int(row[1]) for row in rows) == 12
    assert all(1 <= int(row[1]) <= 3 for row in rows)

    header, summary_rows = read_rows(cell / "summary.csv")
    assert header == [
        "metric",
        "max_group_size",
        "seed",
        "rounds_to_convergence",
        "frac_below_0.6_a1",
        "median_a1",
        "mean_a1",
        "frac_below_0.6_a2",
        "total_messages",
    ]
    assert len(summary_rows) == 1
    assert summary_rows[0][0] == "eq2"
    assert summary_rows[0][1] == "3" and summary_rows[0][2] == "1"

    for alpha in (1, 2):
        header, cdf_rows = read_rows(cell / f"cdf{alpha}.csv")
        assert header == ["bucket_upper", "count", "cumulative_percent"]
        assert cdf_rows[-1][2] == "100"
        assert sum(int(row[1]) for row in cdf_rows) == len(rows) * 3
        uppers = [float(row[0]) for row in cdf_rows]
        assert uppers == sorted(uppers) and uppers[-1] == 1.0

    config = (cell / "config.txt").read_text(encoding="utf-8")
    assert "metric = eq2" in config
    assert "max_group_size = 3" in config
    assert "seed = 1" in config
    assert "peers = 12" in config


def test_sweeps_are_byte_reproducible(tmp_path):
    code_a, out_a = run_main(tmp_path, SWEEP, "first")
    code_b, out_b = run_main(tmp_path, SWEEP, "second")
    assert code_a == code_b == 0
    names = sorted(
        str(p.relative_to(out_a))
        for p in out_a.rglob("*")
        if p.suffix in (".csv", ".txt")
    )
    assert names, "expected emitted text files"
    for name in names:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name


# -- exit codes --------------------------------------------------------------------


TINY = "peers = 12\nslots = 3\ndegree_min = 2\ndegree_max = 3\nmax_group_size = 3\nmetric = eq2\nseed = 1\n"


def test_success_returns_zero(tmp_path, capsys):
    code, out = run_main(tmp_path, TINY, "out")
    assert code == 0
    assert capsys.readouterr().err == ""
    assert (out / "eq2_g3_s1" / "summary.csv").exists()


def test_config_problems_return_one(tmp_path, capsys):
    assert main(["--seed", "1", "--out", str(tmp_path / "x")]) == 1
    assert "metric" in capsys.readouterr().err

    bad = scenario_file(tmp_path, "wibble = 3\nmetric = eq2\nseed = 1\n")
    assert main(["--scenario", str(bad), "--out", str(tmp_path / "y")]) == 1
    assert "wibble" in capsys.readouterr().err

    code, _ = run_main(tmp_path, TINY.replace("peers = 12", "peers = 0"), "z")
    assert code == 1
    assert "peer_count" in capsys.readouterr().err


def test_usage_problems_return_one(tmp_path, capsys):
    assert main(["--metric", "bogus", "--seed", "1", "--out", str(tmp_path / "x")]) == 1
    assert "usage" in capsys.readouterr().err


def test_infeasible_topology_returns_one(tmp_path, capsys):
    text = TINY.replace("peers = 12", "peers = 5").replace("degree_min = 2", "degree_min = 3")
    code, _ = run_main(tmp_path, text, "out")
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_io_failures_return_two(tmp_path, capsys):
    blocker = tmp_path / "blocked"
    blocker.write_text("a file, not a directory", encoding="utf-8")
    path = scenario_file(tmp_path, TINY)
    assert main(["--scenario", str(path), "--out", str(blocker)]) == 2
    assert "i/o error" in capsys.readouterr().err


def test_nonconvergence_returns_three_unless_allowed(tmp_path, capsys):
    code, out = run_main(tmp_path, TINY, "out", extra=["--max-rounds", "2"])
    assert code == 3
    assert "without convergence" in capsys.readouterr().err
    assert (out / "eq2_g3_s1" / "summary.csv").exists(), "partial results are still written"

    code, _ = run_main(
        tmp_path, TINY, "allowed", extra=["--max-rounds", "2", "--allow-nonconverged"]
    )
    assert code == 0


def test_version_flag_prints_and_exits(capsys):
    with pytest.raises(SystemExit) as caught:
        main(["--version"])
    assert caught.value.code == 0
    assert "diurnalgroups" in capsys.readouterr().out
