"""Shared fixtures: hypothesis profile, oracle import path, cached big runs."""

from __future__ import annotations

import sys
import time
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).resolve().parent))

settings.register_profile(
    "suite",
    deadline=None,
    derandomize=True,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


CRITERION_SEEDS = (1, 2, 3, 4, 5)
CRITERION_PEERS = 1000


class Battery:
    """Lazily computed cache of desk-scale runs keyed by (metric, size, seed).

    The acceptance criteria reuse the same worlds many times; each protocol
    run and each random baseline is computed once per session. Wall-clock
    time per protocol cell is recorded so runtime budgets can be checked.
    """

    def __init__(self):
        self.protocol: dict[tuple[str, int, int], object] = {}
        self.baseline: dict[tuple[int, int], object] = {}
        self.protocol_seconds: dict[tuple[str, int, int], float] = {}

    def _config(self, metric, size: int, seed: int):
        from diurnalgroups import Metric, SimConfig

        return SimConfig(
            peer_count=CRITERION_PEERS,
            max_group_size=size,
            metric=Metric(metric),
            seed=seed,
        )

    def run(self, metric: str, size: int, seed: int):
        from diurnalgroups import build_world, run_to_convergence

        key = (metric, size, seed)
        if key not in self.protocol:
            start = time.perf_counter()
            world = build_world(self._config(metric, size, seed))
            self.protocol[key] = run_to_convergence(world)
            self.protocol_seconds[key] = time.perf_counter() - start
        return self.protocol[key]

    def random(self, size: int, seed: int):
        from diurnalgroups import Metric, random_grouping, build_world

        key = (size, seed)
        if key not in self.baseline:
            world = build_world(self._config(Metric.RANDOM, size, seed))
            self.baseline[key] = random_grouping(world)
        return self.baseline[key]


@pytest.fixture(scope="session")
def battery() -> Battery:
    return Battery()


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(
        f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    )


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
