"""Per-group protocol state machine.

Groups discover merge partners through a gossip phase (exploration) and
form larger groups through an invitation/acceptance handshake:

* every group keeps a bounded, score-sorted cache of candidate partner
  groups (the knownlist), refreshed each round from its overlay
  neighborhood and from the knownlists those neighbors share;
* a group invites its best-known candidates in score order; a candidate
  accepts only when the offered score is at least as good as anything in
  its own cache and the combined roster fits under the size cap;
* an accepted invitation retires both groups and mints a replacement
  with a fresh id, the merged availability vector, and a rescored
  knownlist.

All mutation goes through one `GroupingEngine`, which owns the peers,
the live group table, and the message counters. Operations within a
round run in a deterministic serial order chosen by the driver; the
engine itself is single-threaded. Engines for different worlds share
nothing and may run concurrently.

Online/offline state is pushed in by the driver as a boolean mask; a
group acts only when it has an online representative, the online member
that joined the group most recently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .availability import Vector, clamp, group_vector, merge_vectors, validate_vector
from .errors import NotAMember, SizeExceeded, StaleCandidate
from .metrics import GroupSummary, Metric, pair_contribution_many

VECTOR_TOLERANCE = 1e-9


@dataclass(slots=True)
class Peer:
    """One participant: identity, behavior pattern, overlay links, membership."""

    peer_id: int
    base_vector: Vector
    neighbors: tuple[int, ...]
    group_id: int
    join_order: int = 0


@dataclass(slots=True)
class KnownEntry:
    """A cached candidate: the partner's advertised state plus our score for it.

    The score is stored as a bare float; its meaning is fixed by the
    engine-wide metric, so no per-entry tag is needed.
    """

    group_id: int
    size: int
    vector: Vector
    contribution: float


class KnownList:
    """Bounded candidate cache, sorted by (contribution desc, group id asc)."""

    __slots__ = ("capacity", "entries")

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.entries: list[KnownEntry] = []

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[KnownEntry]:
        return iter(self.entries)

    def max_contribution(self) -> float:
        """Best cached score; -inf when the cache is empty."""
        return self.entries[0].contribution if self.entries else -math.inf

    def get(self, group_id: int) -> KnownEntry | None:
        for entry in self.entries:
            if entry.group_id == group_id:
                return entry
        return None

    def remove(self, group_id: int) -> bool:
        for i, entry in enumerate(self.entries):
            if entry.group_id == group_id:
                del self.entries[i]
                return True
        return False

    def replace(self, entries: Iterable[KnownEntry]) -> None:
        """Install a new entry set: sort, dedupe is the caller's job, truncate."""
        ranked = sorted(entries, key=lambda e: (-e.contribution, e.group_id))
        del ranked[self.capacity :]
        self.entries = ranked


@dataclass(slots=True)
class Group:
    """A live group: ordered roster, combined availability, candidate cache."""

    group_id: int
    members: list[int]
    vector: Vector
    knownlist: KnownList
    locked: bool = False

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(slots=True)
class MessageCounter:
    """Running protocol message totals; the driver diffs these per round."""

    explore_requests: int = 0
    explore_replies: int = 0
    invitations: int = 0
    acceptances: int = 0
    denials: int = 0

    @property
    def total(self) -> int:
        return (
            self.explore_requests
            + self.explore_replies
            + self.invitations
            + self.acceptances
            + self.denials
        )


@dataclass(frozen=True, slots=True)
class MergeRecord:
    """One completed merge: who invited, who accepted, what replaced them."""

    inviter_id: int
    invitee_id: int
    merged_id: int


class GroupingEngine:
    """Owns the world's peers and groups and applies protocol operations.

    The driver sets `online` before each round and then calls the phase
    methods; every invitation is resolved synchronously inside the call
    that sends it, so an unanswered-invitation timeout never arises and
    the `locked` flag only matters to out-of-band callers.
    """

    def __init__(
        self,
        peers: Sequence[Peer],
        *,
        metric: Metric,
        slot_count: int,
        knowncount: int,
        max_group_size: int,
        min_contribution: float = 0.0,
    ):
        if not metric.is_pairing:
            raise ValueError("the engine needs a pairing metric, not the random baseline")
        self.peers = list(peers)
        for i, peer in enumerate(self.peers):
            if peer.peer_id != i:
                raise ValueError("peer ids must be contiguous from 0")
        self.metric = metric
        self.slot_count = slot_count
        self.knowncount = knowncount
        self.max_group_size = max_group_size
        self.min_contribution = min_contribution
        self.online = np.ones(len(self.peers), dtype=bool)
        self.messages = MessageCounter()
        self.merge_log: list[MergeRecord] = []
        self.groups: dict[int, Group] = {}
        for peer in self.peers:
            peer.group_id = peer.peer_id
            peer.join_order = 0
            self.groups[peer.peer_id] = Group(
                peer.peer_id, [peer.peer_id], peer.base_vector, KnownList(knowncount)
            )
        self._next_gid = len(self.peers)

    # -- identity helpers ------------------------------------------------

    def mint_group_id(self) -> int:
        gid = self._next_gid
        self._next_gid += 1
        return gid

    def summary(self, group: Group) -> GroupSummary:
        return GroupSummary(group.group_id, group.size, group.vector)

    def _live_group(self, group_id: int) -> Group:
        group = self.groups.get(group_id)
        if group is None:
            raise StaleCandidate(group_id)
        return group

    def representative(self, group: Group) -> int | None:
        """The online member that joined last; None when everyone is offline."""
        online = self.online
        for pid in reversed(group.members):
            if online[pid]:
                return pid
        return None

    def group_neighbors(self, group: Group) -> set[int]:
        """Ids of every other group holding a peer adjacent to this roster."""
        own = group.group_id
        peers = self.peers
        found: set[int] = set()
        for pid in group.members:
            for nid in peers[pid].neighbors:
                gid = peers[nid].group_id
                if gid != own:
                    found.add(gid)
        return found

    # -- gossip ----------------------------------------------------------

    def explore(self, group: Group) -> None:
        """Refresh the knownlist from neighbor groups and their caches.

        Each reachable neighbor contributes its own summary (authoritative)
        plus its cached entries (used only for group ids not heard about
        more directly). New candidates are scored against this group;
        entries whose advertised state is unchanged keep their score, since
        this group's own state is constant between merges.
        """
        if self.representative(group) is None:
            return
        own_gid = group.group_id
        own_size = group.size
        candidate_cap = self.max_group_size - own_size
        candidates: dict[int, tuple[int, Vector]] = {}
        for ngid in sorted(self.group_neighbors(group)):
            neighbor = self.groups[ngid]
            self.messages.explore_requests += 1
            if self.representative(neighbor) is None:
                continue
            self.messages.explore_replies += 1
            candidates[ngid] = (neighbor.size, neighbor.vector)
            for entry in neighbor.knownlist:
                if entry.group_id not in candidates:
                    candidates[entry.group_id] = (entry.size, entry.vector)

        kept: list[KnownEntry] = []
        fresh: list[tuple[int, int, Vector]] = []
        seen: set[int] = set()
        for entry in group.knownlist:
            seen.add(entry.group_id)
            heard = candidates.get(entry.group_id)
            if heard is None:
                kept.append(entry)
                continue
            size, vec = heard
            if size == entry.size and vec is entry.vector:
                kept.append(entry)
            elif size <= candidate_cap:
                fresh.append((entry.group_id, size, vec))
        for gid, (size, vec) in candidates.items():
            if gid in seen or gid == own_gid or size > candidate_cap:
                continue
            fresh.append((gid, size, vec))
        if fresh:
            kept.extend(self._score_entries(group, fresh))
        group.knownlist.replace(kept)

    def _score_entries(
        self, group: Group, rows: list[tuple[int, int, Vector]]
    ) -> list[KnownEntry]:
        matrix = np.stack([vec for _, _, vec in rows])
        sizes = np.array([size for _, size, _ in rows], dtype=np.int64)
        scores = pair_contribution_many(self.metric, group.vector, group.size, matrix, sizes)
        return [
            KnownEntry(gid, size, vec, float(score))
            for (gid, size, vec), score in zip(rows, scores.tolist())
        ]

    # -- grouping --------------------------------------------------------

    def make_group(self, group: Group) -> Group | None:
        """Invite cached candidates best-first; merge with the first acceptor.

        Returns the replacement group, or None when every live candidate
        declined, the cache is empty, or nothing scores above the
        invitation threshold. Candidates that no longer exist count as a
        denial and are purged from the cache.
        """
        if group.locked or self.representative(group) is None:
            return None
        own_size = group.size
        for entry in list(group.knownlist):
            if entry.contribution <= self.min_contribution:
                break
            if own_size + entry.size > self.max_group_size:
                continue
            self.messages.invitations += 1
            try:
                target = self._live_group(entry.group_id)
            except StaleCandidate:
                self.messages.denials += 1
                group.knownlist.remove(entry.group_id)
                continue
            if self.reply_invitation(target, self.summary(group), entry.contribution):
                self.messages.acceptances += 1
                return self.merge_group(group, target)
            self.messages.denials += 1
        return None

    def reply_invitation(
        self, target: Group, inviter: GroupSummary, contribution: float
    ) -> bool:
        """Accept when the offer beats everything the target already knows.

        The offered score must be >= the target's best cached score (-inf
        for an empty cache): with a symmetric score, mutually-best pairs
        offer exactly the cached value, so a strict comparison would leave
        them permanently single. Locked targets, targets with nobody
        online, and oversize unions always decline. Accepting locks the
        target until the merge lands or the round ends.
        """
        if target.locked:
            return False
        if self.representative(target) is None:
            return False
        if inviter.size + target.size > self.max_group_size:
            return False
        if contribution >= target.knownlist.max_contribution():
            target.locked = True
            return True
        return False

    def merge_group(self, inviter: Group, invitee: Group) -> Group:
        """Replace both groups with one fresh group.

        The new roster is inviter members then invitee members, and join
        order is reassigned to roster position, so the invitee side
        supplies the next representative. The new knownlist pools both
        parents' caches, drops the parents and anything that would no
        longer fit, and rescores the rest against the merged state.
        """
        combined = inviter.size + invitee.size
        if combined > self.max_group_size:
            raise SizeExceeded(
                f"merge of {inviter.group_id} and {invitee.group_id} "
                f"would hold {combined} > {self.max_group_size} members"
            )
        new_id = self.mint_group_id()
        vector = merge_vectors(inviter.vector, invitee.vector)
        vector.setflags(write=False)
        members = list(inviter.members) + list(invitee.members)
        for order, pid in enumerate(members):
            peer = self.peers[pid]
            peer.group_id = new_id
            peer.join_order = order
        merged = Group(new_id, members, vector, KnownList(self.knowncount))
        retired = (inviter.group_id, invitee.group_id)
        pool: list[tuple[int, int, Vector]] = []
        pooled: set[int] = set()
        for entry in list(inviter.knownlist) + list(invitee.knownlist):
            gid = entry.group_id
            if gid in retired or gid in pooled:
                continue
            if combined + entry.size > self.max_group_size:
                continue
            pooled.add(gid)
            pool.append((gid, entry.size, entry.vector))
        if pool:
            merged.knownlist.replace(self._score_entries(merged, pool))
        del self.groups[inviter.group_id]
        del self.groups[invitee.group_id]
        self.groups[new_id] = merged
        self.merge_log.append(MergeRecord(inviter.group_id, invitee.group_id, new_id))
        return merged

    # -- maintenance -----------------------------------------------------

    def leave_group(
        self, group: Group, peer_id: int, new_vector: Vector
    ) -> tuple[Group | None, Group]:
        """Pull a peer whose pattern changed out into a fresh singleton.

        The old group keeps its id with a recomputed vector and rescored
        cache (or dissolves if the roster empties). Returns the shrunken
        group (or None) and the new singleton.
        """
        if peer_id not in group.members:
            raise NotAMember(f"peer {peer_id} is not in group {group.group_id}")
        fresh_vector = clamp(validate_vector(new_vector, self.slot_count))
        fresh_vector.setflags(write=False)
        group.members.remove(peer_id)
        remaining: Group | None
        if group.members:
            bases = [self.peers[pid].base_vector for pid in group.members]
            group.vector = group_vector(bases)
            group.vector.setflags(write=False)
            for order, pid in enumerate(group.members):
                self.peers[pid].join_order = order
            self._rescore(group)
            remaining = group
        else:
            del self.groups[group.group_id]
            remaining = None
        peer = self.peers[peer_id]
        peer.base_vector = fresh_vector
        new_id = self.mint_group_id()
        singleton = Group(new_id, [peer_id], fresh_vector, KnownList(self.knowncount))
        peer.group_id = new_id
        peer.join_order = 0
        self.groups[new_id] = singleton
        return remaining, singleton

    def _rescore(self, group: Group) -> None:
        """Recompute cached scores after this group's own state changed."""
        rows = [
            (e.group_id, e.size, e.vector)
            for e in group.knownlist
            if group.size + e.size <= self.max_group_size
        ]
        group.knownlist.replace(self._score_entries(group, rows) if rows else [])

    def sweep_stale(self) -> int:
        """Purge cache entries naming retired groups; acting groups only.

        Groups with nobody online did not participate this round and must
        keep byte-identical state, so they are skipped; their stale
        entries get cleaned up the next time they act.
        """
        removed = 0
        live = self.groups
        for group in live.values():
            if self.representative(group) is None:
                continue
            for gid in [e.group_id for e in group.knownlist if e.group_id not in live]:
                group.knownlist.remove(gid)
                removed += 1
        return removed

    def clear_locks(self) -> None:
        for group in self.groups.values():
            if group.locked:
                group.locked = False

    def drain_merge_log(self) -> tuple[MergeRecord, ...]:
        records = tuple(self.merge_log)
        self.merge_log.clear()
        return records

    # -- verification ----------------------------------------------------

    def invariant_violations(self) -> list[str]:
        """Check the structural invariants; empty list means all hold.

        Checked: rosters partition the peer set exactly; sizes stay in
        [1, max]; stored vectors match the roster-derived vector within
        1e-9; knownlists are sorted, within capacity, never self-referent,
        and (for groups able to act) never name a retired group.
        """
        problems: list[str] = []
        seen: dict[int, int] = {}
        for gid, group in self.groups.items():
            if gid != group.group_id:
                problems.append(f"group {group.group_id} filed under key {gid}")
            if not 1 <= group.size <= self.max_group_size:
                problems.append(f"group {gid} has size {group.size}")
            for pid in group.members:
                if pid in seen:
                    problems.append(f"peer {pid} in groups {seen[pid]} and {gid}")
                seen[pid] = gid
                peer = self.peers[pid]
                if peer.group_id != gid:
                    problems.append(f"peer {pid} points at {peer.group_id}, not {gid}")
            expected = group_vector([self.peers[p].base_vector for p in group.members])
            drift = float(np.max(np.abs(group.vector - expected)))
            if drift > VECTOR_TOLERANCE:
                problems.append(f"group {gid} vector off by {drift:.3e}")
            problems.extend(self._knownlist_violations(group))
        if len(seen) != len(self.peers):
            missing = set(range(len(self.peers))) - set(seen)
            problems.append(f"peers in no group: {sorted(missing)[:5]}")
        return problems

    def _knownlist_violations(self, group: Group) -> list[str]:
        problems: list[str] = []
        entries = group.knownlist.entries
        if len(entries) > group.knownlist.capacity:
            problems.append(f"group {group.group_id} knownlist over capacity")
        keys = [(-e.contribution, e.group_id) for e in entries]
        if keys != sorted(keys):
            problems.append(f"group {group.group_id} knownlist out of order")
        gids = [e.group_id for e in entries]
        if len(set(gids)) != len(gids):
            problems.append(f"group {group.group_id} knownlist has duplicates")
        if group.group_id in gids:
            problems.append(f"group {group.group_id} lists itself")
        if self.representative(group) is not None:
            stale = [g for g in gids if g not in self.groups]
            if stale:
                problems.append(f"group {group.group_id} caches retired {stale}")
        return problems
