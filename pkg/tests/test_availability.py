"""Vector arithmetic, exact tail probabilities, and the diurnal generator."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from diurnalgroups import (
    EPSILON,
    EmptyRoster,
    GeneratorParams,
    InvalidAlpha,
    InvalidParams,
    LengthMismatch,
    OutOfRange,
    alpha_availability,
    alpha_availability_profile,
    clamp,
    generate_diurnal,
    group_vector,
    merge_vectors,
    validate_vector,
)

probability = st.floats(
    min_value=EPSILON, max_value=1.0, allow_nan=False, allow_infinity=False
)


def vectors(length: int):
    return st.lists(probability, min_size=length, max_size=length).map(np.asarray)


# -- validation and clamping -------------------------------------------------


def test_validate_accepts_in_range_vector():
    out = validate_vector([0.5] * 12, 12)
    assert out.shape == (12,)


def test_validate_rejects_wrong_length():
    with pytest.raises(LengthMismatch):
        validate_vector([0.5] * 11, 12)


def test_validate_reports_offending_slot():
    with pytest.raises(OutOfRange) as err:
        validate_vector([0.3, 1.2], 2)
    assert err.value.index == 1
    assert err.value.value == 1.2


def test_clamp_floors_at_epsilon_and_caps_at_one():
    out = clamp(np.array([0.0, EPSILON / 2, 0.5, 1.0]))
    assert out[0] == EPSILON
    assert out[1] == EPSILON
    assert out[2] == 0.5
    assert out[3] == 1.0


# -- merge and group vectors ---------------------------------------------------


def test_merge_zero_absorbs():
    out = merge_vectors(np.array([0.0, 0.0]), np.array([0.0, 0.0]))
    assert np.array_equal(out, [0.0, 0.0])


def test_merge_one_dominates_and_products_combine():
    out = merge_vectors(np.array([1.0, 0.3]), np.array([0.7, 0.3]))
    assert out[0] == 1.0
    assert out[1] == pytest.approx(0.51, abs=1e-12)


def test_merge_halves():
    out = merge_vectors(np.array([0.5, 0.5]), np.array([0.5, 0.5]))
    assert np.allclose(out, [0.75, 0.75], atol=1e-12)


def test_merge_rejects_length_mismatch():
    with pytest.raises(LengthMismatch):
        merge_vectors(np.array([0.5]), np.array([0.5, 0.5]))


def test_group_vector_singleton_identity():
    out = group_vector([np.array([0.4, 0.9])])
    assert np.array_equal(out, [0.4, 0.9])


def test_group_vector_two_members():
    out = group_vector([np.array([0.9]), np.array([0.1])])
    assert out[0] == pytest.approx(0.91, abs=1e-12)


def test_group_vector_three_members():
    out = group_vector([np.array([0.5])] * 3)
    assert out[0] == pytest.approx(0.875, abs=1e-12)


def test_group_vector_rejects_empty_roster():
    with pytest.raises(EmptyRoster):
        group_vector([])


@given(vectors(5), vectors(5))
def test_merge_commutes(a, b):
    assert np.max(np.abs(merge_vectors(a, b) - merge_vectors(b, a))) <= 1e-12


@given(vectors(4), vectors(4), vectors(4))
def test_merge_associates_within_tolerance(a, b, c):
    left = merge_vectors(merge_vectors(a, b), c)
    right = merge_vectors(a, merge_vectors(b, c))
    assert np.max(np.abs(left - right)) <= 1e-12


@given(vectors(6), vectors(6))
def test_merge_never_loses_availability(a, b):
    merged = merge_vectors(a, b)
    assert np.all(merged + 1e-12 >= np.maximum(a, b))


@given(st.lists(vectors(3), min_size=1, max_size=6))
def test_group_vector_matches_enumeration(members):
    expected = oracles.at_least_alpha_profile(members, 1)
    assert np.max(np.abs(group_vector(members) - expected)) <= 1e-9


# -- alpha availability ----------------------------------------------------


def test_alpha_two_of_two_is_joint_product():
    value = alpha_availability([np.array([0.9]), np.array([0.1])], 2, 0)
    assert value == pytest.approx(0.09, abs=1e-12)


def test_alpha_two_of_three_halves():
    value = alpha_availability([np.array([0.5])] * 3, 2, 0)
    assert value == pytest.approx(0.5, abs=1e-12)


def test_alpha_above_roster_size_is_impossible():
    assert alpha_availability([np.array([0.9])] * 2, 3, 0) == 0.0


def test_alpha_rejects_bad_inputs():
    with pytest.raises(InvalidAlpha):
        alpha_availability([np.array([0.5])], 0, 0)
    with pytest.raises(EmptyRoster):
        alpha_availability([], 1, 0)


@given(st.lists(vectors(2), min_size=1, max_size=6), st.integers(1, 7))
def test_alpha_matches_enumeration(members, alpha):
    profile = alpha_availability_profile(members, alpha)
    expected = oracles.at_least_alpha_profile(members, alpha)
    assert np.max(np.abs(profile - expected)) <= 1e-9


@given(st.lists(vectors(2), min_size=1, max_size=5))
def test_alpha_non_increasing_in_alpha(members):
    profiles = [alpha_availability_profile(members, a) for a in range(1, len(members) + 2)]
    for tighter, looser in zip(profiles[1:], profiles):
        assert np.all(tighter <= looser + 1e-12)


@given(st.lists(vectors(3), min_size=1, max_size=5))
def test_alpha_one_equals_group_vector(members):
    one = alpha_availability_profile(members, 1)
    assert np.max(np.abs(one - group_vector(members))) <= 1e-12


# -- diurnal generator -------------------------------------------------------


def quiet(peak=0.9, base=0.1, spread=2.0):
    return GeneratorParams(peak_level=peak, base_level=base, spread=spread, noise=0.0)


def test_noiseless_profile_symmetric_with_peak_and_trough():
    out = generate_diurnal(7, 0, quiet(), 4)
    assert out[0] == pytest.approx(0.9, abs=1e-12)
    assert out[2] == pytest.approx(0.1, abs=1e-12)
    assert out[1] == pytest.approx(out[3], abs=1e-12)
    assert np.argmax(out) == 0
    assert np.argmin(out) == 2


def test_generator_is_deterministic_per_seed():
    params = GeneratorParams()
    assert np.array_equal(
        generate_diurnal(123, 5, params, 12), generate_diurnal(123, 5, params, 12)
    )
    assert not np.array_equal(
        generate_diurnal(123, 5, params, 12), generate_diurnal(124, 5, params, 12)
    )


@given(
    st.integers(0, 2**32),
    st.integers(0, 11),
    st.floats(0.5, 1.0),
    st.floats(0.0, 0.4),
    st.floats(1.0, 5.5),
)
def test_noiseless_extremes_sit_at_peak_and_antipode(seed, peak_slot, peak, base, spread):
    params = GeneratorParams(peak_level=peak, base_level=base, spread=spread, noise=0.0)
    out = generate_diurnal(seed, peak_slot, params, 12)
    assert np.max(out) == out[peak_slot]
    assert np.min(out) == out[(peak_slot + 6) % 12]


@given(st.integers(0, 2**32), st.integers(0, 11))
def test_generated_vectors_stay_clamped(seed, peak_slot):
    params = GeneratorParams(noise=0.5)
    out = generate_diurnal(seed, peak_slot, params, 12)
    assert np.all(out >= EPSILON)
    assert np.all(out <= 1.0)


def test_population_mean_availability_is_flat_across_slots():
    """Uniform peaks must wash out: per-slot population means within 10%."""
    rng = np.random.default_rng(99)
    params = GeneratorParams()
    rows = [
        generate_diurnal(int(rng.integers(2**63)), int(rng.integers(12)), params, 12)
        for _ in range(10_000)
    ]
    means = np.mean(rows, axis=0)
    assert (means.max() - means.min()) / means.min() < 0.10


def test_generator_rejects_bad_params():
    with pytest.raises(InvalidParams):
        GeneratorParams(peak_level=1.2).validate()
    with pytest.raises(InvalidParams):
        GeneratorParams(peak_level=0.5, base_level=0.6).validate()
    with pytest.raises(InvalidParams):
        GeneratorParams(spread=0.5).validate()
    with pytest.raises(InvalidParams):
        GeneratorParams(noise=-0.1).validate()
    with pytest.raises(InvalidParams):
        generate_diurnal(1, 12, GeneratorParams(), 12)
