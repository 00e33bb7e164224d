#!/usr/bin/env python3
"""
Tests for theta, the kneading matrix and the kneading determinant.
"""

import random
import sys
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from kneadlab.errors import InputError, PreconditionError
from kneadlab.kneading_service import (
    column_determinants,
    e_polynomials,
    find_pre_turning,
    increment_rows_text,
    kneading_determinant,
    kneading_matrix,
    one_sided_stability,
    theta,
    verify_column_relation,
    verify_increment_jump,
    verify_ld_identity,
)
from kneadlab.models import Side, SignedPoint
from kneadlab.numeric import TruncatedSeries
from kneadlab.system_service import load_system_file

SYSTEMS = Path(__file__).parent.parent / "systems"
CAP = 8


def load(name):
    return load_system_file(SYSTEMS / f"{name}.json")


def series(*cs, cap=CAP):
    return TruncatedSeries.from_coefficients(cs, cap)


def test_theta_at_left_turning_point():
    """theta(-1+) = P1 + 2t P0 and theta(-1-) = P0 for 2x, 3x."""
    spec = load("scaling")
    plus = theta(spec, SignedPoint(-1, Side.PLUS), CAP)
    assert plus.component(1) == series(1)
    assert plus.component(0) == series(0, 2)
    minus = theta(spec, SignedPoint(-1, Side.MINUS), CAP)
    assert minus.component(0) == series(1)
    assert minus.component(1).is_zero


def test_scaling_kneading_matrix():
    spec = load("scaling")
    km = kneading_matrix(spec, CAP)
    assert (km.row_count, km.column_count) == (2, 3)
    assert [km.entry(1, j) for j in range(3)] == [series(-1, 2), series(1), series(0)]
    assert [km.entry(2, j) for j in range(3)] == [series(0), series(-1), series(1, -2)]
    assert km.e == (series(1), series(1, -2), series(1))
    assert increment_rows_text(km) == ["(-1 + 2t)P0 + P1", "-P1 + (1 - 2t)P2"]


def test_scaling_determinant_is_column_independent():
    spec = load("scaling")
    km = kneading_matrix(spec, CAP)
    assert column_determinants(km) == [series(1, -2)] * 3
    assert kneading_determinant(spec, CAP) == series(1, -2)
    assert kneading_determinant(spec, CAP, delete_column=1, matrix=km).render() == "1 - 2t"
    with pytest.raises(InputError):
        kneading_determinant(spec, CAP, delete_column=3, matrix=km)


def test_identity_determinant_is_geometric():
    """f = x has D = 1/(1 - t)."""
    spec = load("identity")
    assert kneading_determinant(spec, CAP) == series(*([1] * (CAP + 1)))


def test_e_polynomials_tent():
    """Both laps cover only their own cell; the decreasing lap contributes +t."""
    es = e_polynomials(load("tent"), 4)
    assert es == (series(1, cap=4), series(1, -1, cap=4), series(1, 1, cap=4), series(1, cap=4))


def test_ld_identity_at_generic_point():
    spec = load("scaling")
    assert verify_ld_identity(spec, Fraction(1, 5), CAP).is_zero
    assert verify_ld_identity(load("tent"), Fraction(2, 7), CAP).is_zero


def test_ld_identity_refuses_pre_turning_point():
    spec = load("scaling")
    with pytest.raises(PreconditionError):
        verify_ld_identity(spec, Fraction(1, 2), CAP)
    witness = find_pre_turning(spec, Fraction(1, 3), CAP)
    assert witness.word.render() == "a2" and witness.turning_index == 2


def test_column_relation_vanishes():
    for name in ("scaling", "contractions", "tent", "skewed_tent", "identity"):
        km = kneading_matrix(load(name), 6)
        assert verify_column_relation(km).is_zero, f"{name}: sum e_j Gamma_j is not zero"


def test_increment_jump():
    """Degree 1 by hand: both sides jump by 2(P2 - P0); gamma_1 = gamma_2 = 2t."""
    spec = load("scaling")
    assert verify_increment_jump(spec, Fraction(-1, 2), Fraction(1, 2), 6).is_zero
    assert verify_increment_jump(load("tent"), Fraction(1, 5), Fraction(3, 7), 6).is_zero
    with pytest.raises(InputError):
        verify_increment_jump(spec, Fraction(1, 2), Fraction(1, 2), 6)


def test_theta_is_monotone_on_sample_points():
    scaling = load("scaling")
    values = [theta(scaling, SignedPoint(Fraction(x)), 6).value for x in ("-1/5", "1/5", "2/5")]
    assert values[0] < values[1] < values[2]
    tent = load("tent")
    assert theta(tent, SignedPoint(Fraction(1, 5)), 6).value < theta(tent, SignedPoint(Fraction(1, 3)), 6).value


@given(
    st.sampled_from(["scaling", "tent", "skewed_tent", "contractions"]),
    st.fractions(min_value=0, max_value=1, max_denominator=97),
    st.fractions(min_value=0, max_value=1, max_denominator=97),
)
@settings(max_examples=60, deadline=None)
def test_theta_is_monotone(name, x, y):
    if x == y:
        return
    x, y = min(x, y), max(x, y)
    spec = load(name)
    low = theta(spec, SignedPoint(x), 5).value
    high = theta(spec, SignedPoint(y), 5).value
    assert low.compare(high) <= 0, f"{name}: theta({x}) > theta({y})"


@pytest.mark.parametrize("name", sorted(p.stem for p in SYSTEMS.glob("*.json")))
def test_theta_is_monotone_on_500_pairs(name):
    """501 sorted random points give 500 adjacent pairs x < y across the hull."""
    spec = load(name)
    hull = spec.hull
    rng = random.Random(f"theta:{name}")
    points = [hull.lo + hull.length * Fraction(k, 996) for k in sorted(rng.sample(range(997), 501))]
    values = [theta(spec, SignedPoint(x), 5).value for x in points]
    for (x, low), (y, high) in zip(zip(points, values), zip(points[1:], values[1:])):
        assert low.compare(high) <= 0, f"{name}: theta({x}) > theta({y})"


@given(st.fractions(min_value=-1, max_value=1, max_denominator=60))
@settings(max_examples=30, deadline=None)
def test_one_sided_limit_is_locally_constant(x):
    result = one_sided_stability(load("scaling"), x, 5)
    assert result.agree, f"theta({x}+) differs at degree {result.first_difference}"
    assert result.delta > 0
