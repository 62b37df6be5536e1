"""World driver: population, overlay topology, churn, rounds, convergence.

One simulated day is `slot_count` slots and one protocol round runs per
slot, so presence sampling and protocol timing advance together. Each
round: sample who is online (or keep everyone online in idealized mode),
let every acting group gossip, then let groups invite and merge in
ascending group-id order, then clean up locks and retired cache entries.

Everything is driven by `numpy` generators seeded from the world seed
through a splitmix64 derivation (see `seeding`), so a config and seed
pin down the entire run, including the random-partition baseline.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .availability import (
    GeneratorParams,
    Vector,
    alpha_availability_profile,
    generate_diurnal,
    group_vector,
)
from .errors import InvalidParams, NoConvergence, TopologyInfeasible
from .metrics import Metric
from .protocol import GroupingEngine, MergeRecord, Peer
from .seeding import derive_seed

# Stream labels keeping the world's independent random concerns apart.
_STREAM_PEAKS = 1
_STREAM_VECTOR = 2
_STREAM_TOPOLOGY = 3
_STREAM_CHURN = 4
_STREAM_SHUFFLE = 5


class ChurnMode(str, Enum):
    """Idealized keeps everyone online; sampled draws presence per slot."""

    IDEALIZED = "idealized"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class SimConfig:
    """Everything that pins down one run.

    `convergence_window` defaults to one full day (slot_count rounds)
    when left as None. The same seed with the same config reproduces the
    run bit for bit; two configs differing only in `metric` share the
    same world (peers, vectors, topology), which is what makes
    protocol-vs-baseline comparisons meaningful.
    """

    peer_count: int = 10_000
    slot_count: int = 12
    degree_min: int = 5
    degree_max: int = 10
    knowncount: int = 10
    max_group_size: int = 6
    metric: Metric = Metric.RATIO_EXPONENT
    seed: int = 0
    churn_mode: ChurnMode = ChurnMode.IDEALIZED
    convergence_window: int | None = None
    max_rounds: int = 500
    min_contribution: float = 0.0
    generator: GeneratorParams = GeneratorParams()

    @property
    def slot_length_hours(self) -> float:
        return 24.0 / self.slot_count

    @property
    def window(self) -> int:
        return self.slot_count if self.convergence_window is None else self.convergence_window

    def validate(self) -> None:
        if self.peer_count < 1:
            raise InvalidParams("peer_count must be at least 1")
        if self.slot_count < 1:
            raise InvalidParams("slot_count must be at least 1")
        if not 1 <= self.degree_min <= self.degree_max < self.peer_count:
            raise InvalidParams(
                "need 1 <= degree_min <= degree_max < peer_count, got "
                f"{self.degree_min}..{self.degree_max} for {self.peer_count} peers"
            )
        if self.knowncount < 1:
            raise InvalidParams("knowncount must be at least 1")
        if self.max_group_size < 2:
            raise InvalidParams("max_group_size must be at least 2")
        if self.max_rounds < 1:
            raise InvalidParams("max_rounds must be at least 1")
        if self.window < 1:
            raise InvalidParams("convergence_window must be at least 1")
        if not math.isfinite(self.min_contribution):
            raise InvalidParams("min_contribution must be finite")
        if not isinstance(self.metric, Metric):
            raise InvalidParams(f"unknown metric {self.metric!r}")
        if not isinstance(self.churn_mode, ChurnMode):
            raise InvalidParams(f"unknown churn mode {self.churn_mode!r}")
        self.generator.validate()


@dataclass(frozen=True)
class RoundReport:
    """What one round did: who was online, what merged, what it cost."""

    round_index: int
    slot: int
    online: np.ndarray
    merges: tuple[MergeRecord, ...]
    messages: int


@dataclass(frozen=True)
class GroupReport:
    """Final per-group result: roster size and both availability profiles."""

    group_id: int
    size: int
    one_availability: Vector
    two_availability: Vector


@dataclass(frozen=True)
class RunMetrics:
    """Everything the analysis layer needs from a finished run."""

    metric: Metric
    max_group_size: int
    seed: int
    peer_count: int
    slot_count: int
    churn_mode: ChurnMode
    converged: bool
    rounds_to_convergence: int
    merge_count_per_round: tuple[int, ...]
    message_count_per_round: tuple[int, ...]
    total_messages: int
    groups: tuple[GroupReport, ...]

    @property
    def group_size_histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(g.size for g in self.groups).items()))

    @property
    def one_values(self) -> np.ndarray:
        """Every final group-slot 1-availability, pooled."""
        return np.concatenate([g.one_availability for g in self.groups])

    @property
    def two_values(self) -> np.ndarray:
        """Every final group-slot 2-availability, pooled."""
        return np.concatenate([g.two_availability for g in self.groups])


class World:
    """A built population plus its protocol engine and churn stream."""

    def __init__(self, cfg: SimConfig, engine: GroupingEngine, base_matrix: np.ndarray):
        self.cfg = cfg
        self.engine = engine
        self.base_matrix = base_matrix
        self.round_index = 0
        self._churn_rng = np.random.default_rng(derive_seed(cfg.seed, _STREAM_CHURN))

    def run_round(self) -> RoundReport:
        """Advance one slot: churn, gossip, grouping, cleanup."""
        cfg = self.cfg
        engine = self.engine
        slot = self.round_index % cfg.slot_count
        if cfg.churn_mode is ChurnMode.SAMPLED:
            draws = self._churn_rng.random(cfg.peer_count)
            online = draws < self.base_matrix[:, slot]
        else:
            online = np.ones(cfg.peer_count, dtype=bool)
        engine.online = online
        before = engine.messages.total
        for gid in sorted(engine.groups):
            engine.explore(engine.groups[gid])
        for gid in sorted(engine.groups):
            group = engine.groups.get(gid)
            if group is None or group.locked:
                continue
            engine.make_group(group)
        engine.clear_locks()
        engine.sweep_stale()
        report = RoundReport(
            self.round_index,
            slot,
            online,
            engine.drain_merge_log(),
            engine.messages.total - before,
        )
        self.round_index += 1
        return report


def build_world(cfg: SimConfig) -> World:
    """Generate the seeded population, overlay, and singleton groups.

    For the random-baseline metric the engine is built with a stand-in
    pairing score; `random_grouping` never runs the protocol, so the
    choice is inert.
    """
    cfg.validate()
    n, k = cfg.peer_count, cfg.slot_count
    peak_rng = np.random.default_rng(derive_seed(cfg.seed, _STREAM_PEAKS))
    peaks = peak_rng.integers(0, k, size=n)
    rows = [
        generate_diurnal(derive_seed(cfg.seed, _STREAM_VECTOR, i), int(peaks[i]), cfg.generator, k)
        for i in range(n)
    ]
    base = np.stack(rows)
    base.setflags(write=False)
    adjacency = build_overlay(
        n, cfg.degree_min, cfg.degree_max, np.random.default_rng(derive_seed(cfg.seed, _STREAM_TOPOLOGY))
    )
    peers = [Peer(i, base[i], adjacency[i], group_id=i) for i in range(n)]
    engine_metric = cfg.metric if cfg.metric.is_pairing else Metric.RATIO_EXPONENT
    engine = GroupingEngine(
        peers,
        metric=engine_metric,
        slot_count=k,
        knowncount=cfg.knowncount,
        max_group_size=cfg.max_group_size,
        min_contribution=cfg.min_contribution,
    )
    return World(cfg, engine, base)


def run_to_convergence(world: World, *, verify: bool = False) -> RunMetrics:
    """Run rounds until a full merge-free window, then summarize.

    Raises NoConvergence (with the partial summary attached) when
    max_rounds pass without a quiet window. With `verify`, the engine's
    structural invariants are checked after every round and any
    violation aborts the run.
    """
    cfg = world.cfg
    window = cfg.window
    merge_counts: list[int] = []
    message_counts: list[int] = []
    quiet = 0
    converged = False
    while world.round_index < cfg.max_rounds:
        report = world.run_round()
        merge_counts.append(len(report.merges))
        message_counts.append(report.messages)
        if verify:
            problems = world.engine.invariant_violations()
            if problems:
                raise RuntimeError(
                    f"invariant violations after round {report.round_index}: "
                    + "; ".join(problems)
                )
        quiet = quiet + 1 if not report.merges else 0
        if quiet >= window:
            converged = True
            break
    rounds_run = len(merge_counts)
    rounds_to_convergence = rounds_run - window if converged else rounds_run
    metrics = _collect(world, converged, rounds_to_convergence, merge_counts, message_counts)
    if not converged:
        raise NoConvergence(metrics, cfg.max_rounds)
    return metrics


def _collect(
    world: World,
    converged: bool,
    rounds_to_convergence: int,
    merge_counts: list[int],
    message_counts: list[int],
) -> RunMetrics:
    engine = world.engine
    cfg = world.cfg
    reports = []
    for gid in sorted(engine.groups):
        group = engine.groups[gid]
        bases = [engine.peers[pid].base_vector for pid in group.members]
        reports.append(
            GroupReport(gid, group.size, group.vector, alpha_availability_profile(bases, 2))
        )
    return RunMetrics(
        metric=cfg.metric,
        max_group_size=cfg.max_group_size,
        seed=cfg.seed,
        peer_count=cfg.peer_count,
        slot_count=cfg.slot_count,
        churn_mode=cfg.churn_mode,
        converged=converged,
        rounds_to_convergence=rounds_to_convergence,
        merge_count_per_round=tuple(merge_counts),
        message_count_per_round=tuple(message_counts),
        total_messages=engine.messages.total,
        groups=tuple(reports),
    )


def random_grouping(world: World) -> RunMetrics:
    """Partition the same population by shuffle instead of by protocol.

    Peers are shuffled with the run's shuffle stream and cut into
    consecutive chunks of max_group_size (one smaller remainder chunk at
    the end). The world is left untouched.
    """
    cfg = world.cfg
    rng = np.random.default_rng(derive_seed(cfg.seed, _STREAM_SHUFFLE))
    order = rng.permutation(cfg.peer_count)
    reports = []
    for start in range(0, cfg.peer_count, cfg.max_group_size):
        chunk = order[start : start + cfg.max_group_size]
        bases = [world.base_matrix[pid] for pid in chunk]
        reports.append(
            GroupReport(
                start // cfg.max_group_size,
                len(chunk),
                group_vector(bases),
                alpha_availability_profile(bases, 2),
            )
        )
    return RunMetrics(
        metric=Metric.RANDOM,
        max_group_size=cfg.max_group_size,
        seed=cfg.seed,
        peer_count=cfg.peer_count,
        slot_count=cfg.slot_count,
        churn_mode=cfg.churn_mode,
        converged=True,
        rounds_to_convergence=0,
        merge_count_per_round=(),
        message_count_per_round=(),
        total_messages=0,
        groups=tuple(reports),
    )


# -- overlay generation ---------------------------------------------------


def build_overlay(
    n: int, degree_min: int, degree_max: int, rng: np.random.Generator
) -> list[tuple[int, ...]]:
    """Build a connected simple graph with all degrees in [min, max].

    Strategy: draw per-peer degree targets uniformly, fix total parity,
    pair stubs with clash repair, then join components with double-edge
    swaps (which preserve every degree). Each stage retries with fresh
    randomness; exhausting the retries raises TopologyInfeasible.
    """
    if not 1 <= degree_min <= degree_max < n:
        raise TopologyInfeasible(
            f"degrees {degree_min}..{degree_max} are impossible for {n} peers"
        )
    if degree_min == degree_max and (n * degree_min) % 2:
        raise TopologyInfeasible(
            f"{n} peers of exact degree {degree_min} leave an unmatched stub"
        )
    for _ in range(60):
        targets = rng.integers(degree_min, degree_max + 1, size=n)
        if int(targets.sum()) % 2:
            below = np.flatnonzero(targets < degree_max)
            if below.size:
                targets[rng.choice(below)] += 1
            else:
                targets[rng.choice(np.flatnonzero(targets > degree_min))] -= 1
        edges = _pair_stubs(n, targets, rng)
        if edges is None:
            continue
        edges = _join_components(edges, n, rng)
        if edges is None:
            continue
        adjacency: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            adjacency[u].append(v)
            adjacency[v].append(u)
        degrees = [len(links) for links in adjacency]
        if all(degree_min <= d <= degree_max for d in degrees):
            return [tuple(sorted(links)) for links in adjacency]
    raise TopologyInfeasible(
        f"no connected graph with degrees in [{degree_min}, {degree_max}] "
        f"found for {n} peers"
    )


def _edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def _pair_stubs(
    n: int, targets: np.ndarray, rng: np.random.Generator
) -> set[tuple[int, int]] | None:
    """One configuration-model attempt: pair shuffled stubs, repair clashes."""
    stubs = np.repeat(np.arange(n, dtype=np.int64), targets)
    rng.shuffle(stubs)
    pending = stubs.tolist()
    edges: set[tuple[int, int]] = set()
    for _ in range(50):
        if not pending:
            return edges
        leftover: list[int] = []
        for i in range(0, len(pending) - 1, 2):
            u, v = pending[i], pending[i + 1]
            key = _edge_key(u, v)
            if u == v or key in edges:
                leftover.append(u)
                leftover.append(v)
            else:
                edges.add(key)
        if len(leftover) == len(pending):
            break
        pending = leftover
        rng.shuffle(pending)
    if not pending:
        return edges
    return edges if _split_rescue(pending, edges, rng) else None


def _split_rescue(
    pending: list[int], edges: set[tuple[int, int]], rng: np.random.Generator
) -> bool:
    """Place clashing stub pairs by splitting an existing edge.

    For stubs (u, v), removing an edge (a, b) and adding (u, a), (v, b)
    keeps every degree while consuming both stubs.
    """
    if not edges:
        return False
    for i in range(0, len(pending) - 1, 2):
        u, v = pending[i], pending[i + 1]
        if u != v and _edge_key(u, v) not in edges:
            edges.add(_edge_key(u, v))
            continue
        pool = list(edges)
        placed = False
        for _ in range(200):
            a, b = pool[int(rng.integers(len(pool)))]
            if int(rng.integers(2)):
                a, b = b, a
            if a in (u, v) or b in (u, v):
                continue
            first, second = _edge_key(u, a), _edge_key(v, b)
            if first == second or first in edges or second in edges:
                continue
            edges.remove(_edge_key(a, b))
            edges.add(first)
            edges.add(second)
            placed = True
            break
        if not placed:
            return False
    return True


def _join_components(
    edges: set[tuple[int, int]], n: int, rng: np.random.Generator
) -> set[tuple[int, int]] | None:
    """Connect the graph with degree-preserving double-edge swaps.

    Swapping one edge from each of two components for the two crossing
    edges always exists and always merges them, so this terminates in
    (components - 1) swaps. Fails only if some vertex has no edge at all.
    """
    root = list(range(n))

    def find(x: int) -> int:
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            root[ru] = rv
    component_edges: dict[int, list[tuple[int, int]]] = {}
    for edge in edges:
        component_edges.setdefault(find(edge[0]), []).append(edge)
    if any(find(x) not in component_edges for x in range(n)):
        return None
    roots = sorted(component_edges)
    if len(roots) == 1:
        return edges
    main = component_edges[roots[0]]
    for other_root in roots[1:]:
        other = component_edges[other_root]
        i = int(rng.integers(len(main)))
        j = int(rng.integers(len(other)))
        a, b = main[i]
        c, d = other[j]
        edges.remove(_edge_key(a, b))
        edges.remove(_edge_key(c, d))
        main[i] = main[-1]
        main.pop()
        other[j] = other[-1]
        other.pop()
        crossing = [_edge_key(a, c), _edge_key(b, d)]
        edges.update(crossing)
        main.extend(crossing)
        main.extend(other)
    return edges
