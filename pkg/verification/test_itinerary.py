#!/usr/bin/env python3
"""
Tests for itineraries, kneading comparison, order recovery and separation.
"""

import sys
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from kneadlab.errors import StructuralError
from kneadlab.itinerary_service import (
    check_separability,
    combinatorial_map,
    compare_kneading,
    itinerary,
    kneading_data,
    order_from_symbolic,
)
from kneadlab.models import SignedPoint, Word
from kneadlab.system_service import conjugate_affine, load_system_file

SYSTEMS = Path(__file__).parent.parent / "systems"


def load(name):
    return load_system_file(SYSTEMS / f"{name}.json")


def test_itinerary_entries_scaling():
    tree = itinerary(load("scaling"), SignedPoint(Fraction(1, 3)), 2)
    rendered = tree.to_dict()["entries"]
    assert rendered["e"] == "P1"
    assert rendered["a1"] == "P1"
    assert rendered["a2"] == "c2", "f2(1/3) = 1"
    assert rendered["a2.a2"] == "P2"
    assert len(rendered) == 7


def test_kneading_data_has_one_tree_per_turning_point():
    data = kneading_data(load("contractions"), 4)
    assert len(data.trees) == 3
    assert data.tree(1).entries[Word(())].render() == "c1"
    assert data.tree(1).entries[Word((1,))].render() == "c2", "f1(-1) = 0"


def test_scaling_pair_has_equal_kneading():
    comparison = compare_kneading(load("scaling"), load("scaling_shifted"), 10)
    assert comparison.equal, comparison.describe()


def test_contractions_pair_has_equal_kneading():
    comparison = compare_kneading(load("contractions"), load("contractions_swapped"), 10)
    assert comparison.equal
    assert comparison.describe() == "kneading equal to depth 10"


def test_signature_mismatch():
    with pytest.raises(StructuralError):
        compare_kneading(load("tent"), load("scaling"), 4)


def test_scaling_combinatorial_map_fails_on_order():
    """A2 sends -1 to -1/3 in one system and to -7/12 in the other."""
    report = combinatorial_map(load("scaling"), load("scaling_shifted"), 4)
    assert not report.success
    assert report.violation["kind"] == "order", f"Got {report.violation}"
    assert report.violation["second"] == "f_A2(c1)"


def test_contractions_combinatorial_map_fails_on_order():
    """f1(0) = 1/2 sits above f2(0) = 1/4 in one system and below 3/4 in the other."""
    report = combinatorial_map(load("contractions"), load("contractions_swapped"), 4)
    assert not report.success
    assert report.violation["kind"] == "order"
    assert (report.violation["first"], report.violation["second"]) == ("f_a1(c2)", "f_a2(c2)")


def test_affine_conjugate_maps_cleanly():
    spec = load("tent")
    conj = conjugate_affine(spec, 2, 1)
    assert compare_kneading(spec, conj, 6).equal
    report = combinatorial_map(spec, conj, 6)
    assert report.success, f"violation {report.violation}"
    assert report.points > 10
    for _, a, b in report.mapping:
        assert Fraction(b) == 2 * Fraction(a) + 1, "the map must be h itself"


def test_order_from_symbolic():
    spec = load("tent")
    orientations = spec.orientations

    def sign(x, y, depth=6):
        a = itinerary(spec, SignedPoint(Fraction(x)), depth)
        b = itinerary(spec, SignedPoint(Fraction(y)), depth)
        return order_from_symbolic(a, b, orientations)

    assert sign("1/3", "2/3") == 1
    assert sign("1/4", "1/5") == -1, "decided at a1: 1/2 is c2, 2/5 is P1"
    assert sign("3/4", "4/5") == 1, "decided at a2, a decreasing lap"
    assert sign("1/2", "1/2") == 0


def test_scaling_past_separation_fails():
    report = check_separability(load("scaling"), 6)
    assert not report.past_separation
    assert report.past_failures[0]["x_from"] != report.past_failures[0]["y_from"]
    assert report.to_dict()["past_separation"] == "fails"


def test_expanding_contracting_separates():
    report = check_separability(load("expanding_contracting"), 8)
    assert report.future_pairs > 0 and report.past_pairs > 0
    assert report.future_separation, f"{report.future_failures}"
    assert report.past_separation, f"{report.past_failures}"


@given(
    st.sampled_from(["tent", "skewed_tent"]),
    st.fractions(min_value=0, max_value=1, max_denominator=30),
    st.fractions(min_value=0, max_value=1, max_denominator=30),
)
@settings(max_examples=500, deadline=None)
def test_symbolic_order_agrees_with_direct_comparison(name, x, y):
    spec = load(name)
    a = itinerary(spec, SignedPoint(x), 5)
    b = itinerary(spec, SignedPoint(y), 5)
    expected = (y > x) - (y < x)
    result = order_from_symbolic(a, b, spec.orientations)
    assert result in (None, expected), f"{name}: sign({y} - {x}) recovered as {result}"
