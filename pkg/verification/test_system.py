#!/usr/bin/env python3
"""
Tests for config loading, branch evaluation and addresses.
"""

import json
import sys
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from kneadlab.errors import ConfigError, DomainError, RangeError
from kneadlab.models import Side, SignedPoint, Word
from kneadlab.system_service import (
    address,
    conjugate_affine,
    eval_branch,
    invert_branch,
    load_system,
    load_system_file,
    sigma,
)

SYSTEMS = Path(__file__).parent.parent / "systems"


def test_load_scaling():
    spec = load_system_file(SYSTEMS / "scaling.json")
    assert spec.branch_count == 2
    assert spec.turning_points == (Fraction(-1), Fraction(1)), f"Got {spec.turning_points}"
    assert spec.cell_count == 3, "cells P0, P1, P2"


def test_load_contractions_turning_points():
    spec = load_system_file(SYSTEMS / "contractions.json")
    assert spec.turning_points == (Fraction(-1), Fraction(0), Fraction(1))
    assert eval_branch(spec.branch(2), 1) == 1, "f2(1) = (3 + 1)/4"


def test_inverse_letters_scaling():
    spec = load_system_file(SYSTEMS / "scaling.json")
    a = invert_branch(spec.branch(1), -1)
    b = invert_branch(spec.branch(2), -1)
    assert (a, b) == (Fraction(-1, 2), Fraction(-1, 3))
    assert a < b


def test_domain_and_range_errors():
    spec = load_system_file(SYSTEMS / "scaling.json")
    with pytest.raises(DomainError):
        eval_branch(spec.branch(1), 2)
    with pytest.raises(RangeError):
        invert_branch(spec.branch(1), 3)


def test_config_errors():
    with pytest.raises(ConfigError):
        load_system("{not json")
    with pytest.raises(ConfigError):
        load_system(json.dumps({"branches": []}))
    with pytest.raises(ConfigError):
        load_system(json.dumps({"branches": [{"domain": ["0", "1"], "affine": {"slope": "0"}}]}))
    with pytest.raises(ConfigError):
        load_system(json.dumps({"branches": [{"domain": ["0", "1"], "table": [["0", "0"], ["1/2", "1"], ["1", "1/2"]]}]}))
    with pytest.raises(ConfigError):
        load_system(json.dumps({"branches": [{"domain": ["1", "1"], "affine": {"slope": "1"}}]}))


def test_degenerate_flag_allows_point_domain():
    spec = load_system(json.dumps({
        "degenerate": True,
        "branches": [{"domain": ["0", "0"], "affine": {"slope": "1"}}, {"domain": ["0", "1"], "affine": {"slope": "1"}}],
    }))
    assert spec.branches[0].is_degenerate


def test_multimodal_tent():
    spec = load_system_file(SYSTEMS / "tent.json")
    assert spec.turning_points == (Fraction(0), Fraction(1, 2), Fraction(1))
    assert spec.orientations == (1, -1)


def test_multimodal_must_be_continuous():
    config = {
        "kind": "multimodal",
        "breakpoints": ["0", "1/2", "1"],
        "laps": [{"affine": {"slope": "2"}}, {"affine": {"slope": "-1", "intercept": "1"}}],
    }
    with pytest.raises(ConfigError):
        load_system(json.dumps(config))


def test_sampled_square_root_is_exact():
    """Root-sampled tables have exact values at every sample."""
    spec = load_system_file(SYSTEMS / "square_root.json")
    right = spec.branch(2)
    assert right.orientation == -1
    assert eval_branch(right, "1/4") == Fraction(-1, 2)
    assert spec.table_resolution == 32


def test_address():
    spec = load_system_file(SYSTEMS / "scaling.json")
    assert address(spec, SignedPoint(0)).render() == "P1"
    assert address(spec, SignedPoint(-1)).render() == "c1"
    assert address(spec, SignedPoint(-1, Side.MINUS)).render() == "P0"
    assert address(spec, SignedPoint(-1, Side.PLUS)).render() == "P1"
    assert address(spec, SignedPoint(1, Side.PLUS)).render() == "P2"


def test_address_positions_interleave():
    spec = load_system_file(SYSTEMS / "tent.json")
    order = [address(spec, SignedPoint(x)).position for x in ("-1", "0", "1/4", "1/2", "3/4", "1", "2")]
    assert order == sorted(order) and len(set(order)) == len(order), f"Got {order}"


def test_sigma():
    spec = load_system_file(SYSTEMS / "tent.json")
    assert sigma(spec, Word((1, 2))) == -1
    assert sigma(spec, Word((2, -2))) == 1, "the reduced empty word is increasing"
    assert sigma(spec, Word((-2, 2, 2))) == -1


@given(st.fractions(min_value=-1, max_value=1, max_denominator=50))
@settings(max_examples=40, deadline=None)
def test_invert_after_evaluate(x):
    for name in ("scaling", "quadratic"):
        spec = load_system_file(SYSTEMS / f"{name}.json")
        for branch in spec.branches:
            if branch.domain.contains(x):
                assert branch.invert(branch.evaluate(x)) == x


@given(
    st.sampled_from(["scaling", "contractions", "tent", "skewed_tent", "quadratic"]),
    st.fractions(min_value=-1, max_value=1, max_denominator=40),
    st.fractions(min_value=-1, max_value=1, max_denominator=40),
)
@settings(max_examples=60, deadline=None)
def test_branches_scale_order_by_orientation(name, x, y):
    spec = load_system_file(SYSTEMS / f"{name}.json")
    for branch in spec.branches:
        if branch.domain.contains(x) and branch.domain.contains(y):
            moved = branch.evaluate(y) - branch.evaluate(x)
            expected = branch.orientation * ((y > x) - (y < x))
            assert (moved > 0) - (moved < 0) == expected, f"{name}: order not scaled by orientation at {x}, {y}"


def test_conjugate_affine():
    """h(x) = 2x + 1 maps the config and keeps orientations."""
    spec = load_system_file(SYSTEMS / "tent.json")
    conj = conjugate_affine(spec, 2, 1)
    assert conj.turning_points == (Fraction(1), Fraction(2), Fraction(3))
    assert conj.orientations == spec.orientations
    # h(f(x)) = g(h(x)) at x = 1/4: f = 1/2, h(1/2) = 2; h(1/4) = 3/2
    assert eval_branch(conj.branch(1), "3/2") == 2
