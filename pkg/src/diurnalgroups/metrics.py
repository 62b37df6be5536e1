"""Pairing scores between groups.

Two interchangeable scores rank how much two groups would gain from
merging, both divided by the combined roster size so small groups stay
attractive:

* ratio-exponent score: per slot, ``J^r - J`` with ``J`` the product of
  the two slot availabilities and ``r`` the small/large ratio. Identical
  slots score zero; complementary slots score close to 1 - J.
* utility-gain score: the summed per-slot increase each side would see in
  its at-least-one-online availability after the merge.

Both are symmetric bit-for-bit: every per-slot operation is commutative
in IEEE arithmetic, so no canonicalization step is required.

Inputs are expected pre-clamped to [EPSILON, 1] (see the availability
module), which keeps the ratio exponent defined everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .availability import Vector, merge_vectors
from .errors import LengthMismatch


class Metric(str, Enum):
    """Selectable pairing score (``random`` selects the baseline, not a score)."""

    RATIO_EXPONENT = "eq2"
    UTILITY_GAIN = "eq3"
    RANDOM = "random"

    @property
    def is_pairing(self) -> bool:
        return self is not Metric.RANDOM


@dataclass(frozen=True)
class GroupSummary:
    """What one group advertises about itself: identity, size, availability."""

    group_id: int
    size: int
    vector: Vector


@dataclass(frozen=True)
class Contribution:
    """A pairing score tagged with the metric that produced it.

    The tag prevents ratio-exponent and utility-gain values, which live on
    different scales, from ever being compared to each other.
    """

    value: float
    metric: Metric


def joint_availability(a: float, b: float) -> float:
    """Probability that both sides are online in the slot."""
    return a * b


def slot_contribution_ratio(a: float, b: float) -> float:
    """Ratio-exponent score for one slot: J^(min/max) - J with J = a*b.

    Zero iff a == b; grows with; larger spread between the two values and,
    for a fixed spread, with a smaller minimum. The power is evaluated as
    exp(r * ln J), defined for all inputs in [EPSILON, 1].
    """
    joint = joint_availability(a, b)
    lo, hi = (a, b) if a <= b else (b, a)
    if lo == hi:
        # exp(log(J)) round-trips with up to an ulp of error; the exact
        # zero matters because it sits right on the invitation threshold.
        return 0.0
    return math.exp((lo / hi) * math.log(joint)) - joint


def contribution_ratio(gi: GroupSummary, gj: GroupSummary) -> Contribution:
    """Ratio-exponent score summed over slots, divided by the merged size."""
    vi = np.asarray(gi.vector, dtype=float)
    vj = np.asarray(gj.vector, dtype=float)
    if vi.shape != vj.shape:
        raise LengthMismatch(f"vector shapes differ: {vi.shape} vs {vj.shape}")
    total = 0.0
    for a, b in zip(vi.tolist(), vj.tolist()):
        total += slot_contribution_ratio(a, b)
    return Contribution(total / (gi.size + gj.size), Metric.RATIO_EXPONENT)


def utility_gain(base: Vector, merged: Vector) -> float:
    """Summed per-slot availability increase from ``base`` to ``merged``."""
    base = np.asarray(base, dtype=float)
    merged = np.asarray(merged, dtype=float)
    if base.shape != merged.shape:
        raise LengthMismatch(f"vector shapes differ: {base.shape} vs {merged.shape}")
    return float(np.sum(merged - base))


def contribution_utility(gi: GroupSummary, gj: GroupSummary) -> Contribution:
    """Both sides' utility gains from the hypothetical merge, size-penalized."""
    merged = merge_vectors(gi.vector, gj.vector)
    gain = utility_gain(gi.vector, merged) + utility_gain(gj.vector, merged)
    return Contribution(gain / (gi.size + gj.size), Metric.UTILITY_GAIN)


def pair_contribution(metric: Metric, gi: GroupSummary, gj: GroupSummary) -> Contribution:
    if metric is Metric.RATIO_EXPONENT:
        return contribution_ratio(gi, gj)
    if metric is Metric.UTILITY_GAIN:
        return contribution_utility(gi, gj)
    raise ValueError(f"{metric} is not a pairing metric")


# Batched variants used in the gossip hot path: one candidate per row.
# They follow the scalar formulas elementwise; numpy's exp/log may differ
# from libm by an ulp, so cross-checks use a 1e-12 relative tolerance.

def contribution_ratio_many(
    own_vector: Vector,
    own_size: int,
    cand_matrix: np.ndarray,
    cand_sizes: np.ndarray,
) -> np.ndarray:
    joint = own_vector * cand_matrix
    lo = np.minimum(own_vector, cand_matrix)
    hi = np.maximum(own_vector, cand_matrix)
    slots = np.exp((lo / hi) * np.log(joint)) - joint
    # Equal slots are exactly zero; see slot_contribution_ratio.
    slots[lo == hi] = 0.0
    return slots.sum(axis=1) / (own_size + cand_sizes)


def contribution_utility_many(
    own_vector: Vector,
    own_size: int,
    cand_matrix: np.ndarray,
    cand_sizes: np.ndarray,
) -> np.ndarray:
    merged = 1.0 - (1.0 - own_vector) * (1.0 - cand_matrix)
    gains = (merged - own_vector).sum(axis=1) + (merged - cand_matrix).sum(axis=1)
    return gains / (own_size + cand_sizes)


def pair_contribution_many(
    metric: Metric,
    own_vector: Vector,
    own_size: int,
    cand_matrix: np.ndarray,
    cand_sizes: np.ndarray,
) -> np.ndarray:
    if metric is Metric.RATIO_EXPONENT:
        return contribution_ratio_many(own_vector, own_size, cand_matrix, cand_sizes)
    if metric is Metric.UTILITY_GAIN:
        return contribution_utility_many(own_vector, own_size, cand_matrix, cand_sizes)
    raise ValueError(f"{metric} is not a pairing metric")
