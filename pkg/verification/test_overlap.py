#!/usr/bin/env python3
"""
Tests for overlapping two-branch systems: critical itineraries, entropy root and model U.
"""

import json
import sys
from fractions import Fraction
from pathlib import Path

import pytest

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from kneadlab.errors import InputError, ShapeError
from kneadlab.numeric import TruncatedSeries
from kneadlab.overlap_service import (
    ClosedForm,
    CriticalOrbit,
    OverlapItineraries,
    overlap_affine_model,
    overlap_determinant_check,
    overlap_entropy_model,
    overlap_itineraries,
    overlap_shape,
)
from kneadlab.system_service import load_system, load_system_file

SYSTEMS = Path(__file__).parent.parent / "systems"
TOL = Fraction(1, 10**9)


def load(name):
    return load_system_file(SYSTEMS / f"{name}.json")


def test_doubling_itineraries():
    """q = 1/2: from the left 1/2 -> 1 -> 1, from the right 1/2 -> 0 -> 0."""
    its = overlap_itineraries(load("overlap_doubling"), 32)
    assert its.alpha.symbols[:4] == [0, 1, 1, 1]
    assert its.beta.symbols[:4] == [1, 0, 0, 0]
    assert its.alpha.cycle == (1, 1) and its.beta.cycle == (1, 1)
    assert its.difference().coefficients[:3] == (-1, 1, 1)


def test_doubling_closed_form():
    """alpha = t/(1 - t) and beta = 1, so the numerator is (1 - t)(2t - 1)."""
    closed = ClosedForm.from_itineraries(overlap_itineraries(load("overlap_doubling"), 8))
    assert closed.numerator == TruncatedSeries.from_coefficients([-1, 3, -2], 2)
    assert closed.numerator.evaluate(Fraction(1, 2)) == 0
    assert closed.alpha_sum(Fraction(1, 2)) == 1


def test_doubling_root_is_exact():
    spec = load("overlap_doubling")
    result = overlap_entropy_model(overlap_itineraries(spec, 32), TOL, spec)
    assert result.found
    assert result.root == Fraction(1, 2) and result.exact
    assert result.s == 2
    assert result.p == Fraction(1, 2)
    assert result.tail_bound == Fraction(1, 2**33)
    assert abs(result.p_truncated - result.p) <= result.tail_bound
    assert abs(float(result.root_truncated) - 0.5) < 1e-6


def test_doubling_model_reproduces_the_system():
    spec = load("overlap_doubling")
    model = overlap_entropy_model(overlap_itineraries(spec, 32), TOL, spec).model
    for original, rebuilt in zip(spec.branches, model.branches):
        assert original.domain == rebuilt.domain
        for x in (original.domain.lo, original.domain.hi, (original.domain.lo + original.domain.hi) / 2):
            assert original.evaluate(x) == rebuilt.evaluate(x)


def test_affine_model_shape():
    model = overlap_affine_model(Fraction(3, 2), Fraction(2, 5))
    assert model.branch(1).evaluate(Fraction(2, 5)) == Fraction(3, 5)
    assert model.branch(2).evaluate(Fraction(1)) == 1
    assert model.branch(2).evaluate(Fraction(2, 5)) == Fraction(1, 10)


def test_doubling_kneading_determinant_agrees():
    check = overlap_determinant_check(load("overlap_doubling"), 10)
    assert check.n21_matches, f"N21={check.n21}, expected {check.expected}"
    assert check.determinant_matches, f"D={check.determinant}"
    assert check.to_dict()["N21_matches"] is True


def test_three_halves_n21():
    check = overlap_determinant_check(load("overlap_three_halves"), 8)
    assert check.n21_matches, f"N21={check.n21}, expected {check.expected}"


@pytest.mark.parametrize(
    "name, length, expected",
    [("overlap_three_halves", 48, 2 / 3), ("overlap_five_quarters", 64, 4 / 5)],
)
def test_constant_slope_root(name, length, expected):
    """A map of constant slope s has r = 1/s."""
    spec = load(name)
    result = overlap_entropy_model(overlap_itineraries(spec, length), TOL, spec)
    assert result.found
    assert float(result.root) == pytest.approx(expected, abs=1e-3)
    assert result.model is not None


def test_shape_errors():
    with pytest.raises(ShapeError):
        overlap_shape(load("tent"))
    with pytest.raises(ShapeError):
        overlap_shape(load("scaling"))
    with pytest.raises(ShapeError):
        overlap_shape(load("expanding_contracting"))
    with pytest.raises(InputError):
        overlap_itineraries(load("overlap_doubling"), 0)


def test_equal_itineraries_are_not_found():
    orbit = CriticalOrbit([0, 1, 1, 1, 1], [])
    its = OverlapItineraries(Fraction(1, 2), 4, orbit, orbit)
    result = overlap_entropy_model(its, TOL)
    assert not result.found
    assert result.warnings and "zero entropy" in result.warnings[0]
    assert result.to_dict()["status"] == "not_found"


def test_fixed_turning_point():
    """f_0(q) = q: the left itinerary stays on the tie and reads 0 forever."""
    spec = load_system(json.dumps({
        "name": "fixed_q",
        "branches": [
            {"domain": ["0", "1/2"], "affine": {"slope": "1/2", "intercept": "1/4"}},
            {"domain": ["1/2", "1"], "affine": {"slope": "2", "intercept": "-1"}},
        ],
    }))
    its = overlap_itineraries(spec, 16)
    assert its.alpha.symbols == [0] * 17
    assert its.alpha.cycle == (0, 1)
    assert its.beta.symbols[:3] == [1, 0, 0]
    assert not overlap_entropy_model(its, TOL, spec).found
