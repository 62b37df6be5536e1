"""Slot-based availability vectors and the probability algebra over them.

A day is split into ``K`` equal slots; a peer's behaviour is a vector of
per-slot presence probabilities. Group-level availability treats members
as independent: the chance that at least one (or at least ``alpha``)
members are online in a slot follows from the product of the members'
per-slot complements.

All vectors handled here are clamped to ``[EPSILON, 1]`` so downstream
ratio exponents are always defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    EmptyRoster,
    InvalidAlpha,
    InvalidParams,
    LengthMismatch,
    OutOfRange,
)

#: Lower clamp applied to every generated or ingested slot probability.
EPSILON = 1e-6

Vector = np.ndarray


def validate_vector(vector: Sequence[float] | Vector, slot_count: int) -> Vector:
    """Check length and per-slot range; return the values as a float array.

    Raises LengthMismatch when the vector does not hold exactly
    ``slot_count`` entries, and OutOfRange (with the first offending index)
    when any entry falls outside [0, 1]. NaN counts as out of range.
    """
    arr = np.asarray(vector, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != slot_count:
        raise LengthMismatch(
            f"expected {slot_count} slots, got shape {arr.shape}"
        )
    inside = (arr >= 0.0) & (arr <= 1.0)
    if not inside.all():
        idx = int(np.argmin(inside))
        raise OutOfRange(idx, float(arr[idx]))
    return arr


def clamp(vector: Sequence[float] | Vector) -> Vector:
    """Clamp every slot into [EPSILON, 1]."""
    return np.clip(np.asarray(vector, dtype=float), EPSILON, 1.0)


def merge_vectors(a: Vector, b: Vector) -> Vector:
    """Combine two availability vectors under member independence.

    result[k] = 1 - (1 - a[k]) * (1 - b[k]); never smaller than either
    input in any slot.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatch(f"cannot merge shapes {a.shape} and {b.shape}")
    return 1.0 - (1.0 - a) * (1.0 - b)


def group_vector(members: Sequence[Vector]) -> Vector:
    """Per-slot probability that at least one member is online.

    Equivalent to folding merge_vectors over the roster; computed as
    ``1 - prod(1 - m)`` in one pass.
    """
    if len(members) == 0:
        raise EmptyRoster("group_vector needs at least one member")
    stack = np.stack([np.asarray(m, dtype=float) for m in members])
    if stack.ndim != 2:
        raise LengthMismatch("member vectors must share one slot count")
    return 1.0 - np.prod(1.0 - stack, axis=0)


def alpha_availability_profile(members: Sequence[Vector], alpha: int) -> Vector:
    """Per-slot probability that at least ``alpha`` members are online.

    Exact Poisson-binomial tail via dynamic programming over the counts
    below ``alpha`` (O(members * alpha) work per slot, all slots at once).
    Never sampled.
    """
    if alpha < 1:
        raise InvalidAlpha(f"alpha must be >= 1, got {alpha}")
    if len(members) == 0:
        raise EmptyRoster("alpha availability needs at least one member")
    stack = np.stack([np.asarray(m, dtype=float) for m in members])
    if stack.ndim != 2:
        raise LengthMismatch("member vectors must share one slot count")
    n, slots = stack.shape
    if alpha > n:
        return np.zeros(slots)
    # dp[j] = P(exactly j of the processed members online), j < alpha;
    # mass reaching alpha or more simply leaves the table.
    dp = np.zeros((alpha, slots))
    dp[0] = 1.0
    for row in stack:
        for j in range(alpha - 1, 0, -1):
            dp[j] = dp[j] * (1.0 - row) + dp[j - 1] * row
        dp[0] = dp[0] * (1.0 - row)
    return 1.0 - dp.sum(axis=0)


def alpha_availability(members: Sequence[Vector], alpha: int, slot: int) -> float:
    """P(at least ``alpha`` members online at ``slot``), computed exactly."""
    profile = alpha_availability_profile(members, alpha)
    if not 0 <= slot < profile.shape[0]:
        raise IndexError(f"slot {slot} outside [0, {profile.shape[0]})")
    return float(profile[slot])


@dataclass(frozen=True)
class GeneratorParams:
    """Shape parameters for the synthetic diurnal profile.

    peak_level: availability at the peak slot, in [0, 1]
    base_level: off-peak floor, in [0, peak_level]
    spread: half-width of the raised-cosine bump, in slots (>= 1)
    noise: amplitude of per-slot uniform noise (>= 0)
    """

    peak_level: float = 0.9
    base_level: float = 0.1
    spread: float = 3.5
    noise: float = 0.05

    def validate(self) -> None:
        if not 0.0 <= self.peak_level <= 1.0:
            raise InvalidParams(f"peak_level {self.peak_level} outside [0, 1]")
        if not 0.0 <= self.base_level <= self.peak_level:
            raise InvalidParams(
                f"base_level {self.base_level} outside [0, {self.peak_level}]"
            )
        if self.spread < 1.0:
            raise InvalidParams(f"spread {self.spread} below one slot")
        if self.noise < 0.0:
            raise InvalidParams(f"noise {self.noise} is negative")


def generate_diurnal(
    seed: int,
    peak_slot: int,
    params: GeneratorParams,
    slot_count: int,
) -> Vector:
    """Deterministic unimodal-with-wraparound availability profile.

    A raised-cosine bump of half-width ``spread`` sits on ``base_level``
    and peaks at ``peak_slot`` with ``peak_level``; uniform noise in
    [-noise, +noise] is added per slot and the result is clamped to
    [EPSILON, 1]. Consecutive slots therefore differ by at most
    (peak - base) * pi / (2 * spread) + 2 * noise.
    """
    params.validate()
    if slot_count < 1:
        raise InvalidParams(f"slot_count {slot_count} below 1")
    if not 0 <= peak_slot < slot_count:
        raise InvalidParams(f"peak_slot {peak_slot} outside [0, {slot_count})")

    k = np.arange(slot_count)
    dist = np.abs(k - peak_slot)
    dist = np.minimum(dist, slot_count - dist)  # circular distance
    capped = np.minimum(dist, params.spread)
    bump = 0.5 * (1.0 + np.cos(math.pi * capped / params.spread))
    profile = params.base_level + (params.peak_level - params.base_level) * bump

    if params.noise > 0.0:
        rng = np.random.default_rng(seed)
        profile = profile + rng.uniform(-params.noise, params.noise, slot_count)

    out = clamp(profile)
    out.flags.writeable = False
    return out
