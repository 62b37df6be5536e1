"""Deterministic 64-bit seed derivation for independent RNG streams.

Every random decision in a run is drawn from a stream whose seed is a
splitmix64 fold of the run seed and small integer labels, so separate
concerns (vector generation, topology, churn, shuffling) never share a
stream and runs replay bit-identically.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

#: Human-readable statement of the derivation, copied into emitted configs.
DERIVATION_NOTE = (
    "stream seed = splitmix64 fold: s = seed; for each label p: "
    "s = mix64((s + 0x9E3779B97F4A7C15 + p) mod 2^64) where mix64 is the "
    "splitmix64 finalizer (xor-shift 30/27/31 with multipliers "
    "0xBF58476D1CE4E5B9 and 0x94D049BB133111EB)"
)


def mix64(x: int) -> int:
    """splitmix64 finalizer: a bijective 64-bit avalanche mix."""
    x &= _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


def derive_seed(seed: int, *labels: int) -> int:
    """Fold ``labels`` into ``seed``, one mix64 round per label."""
    state = seed & _MASK64
    for label in labels:
        state = mix64((state + _GOLDEN + label) & _MASK64)
    return state
