#!/usr/bin/env python3
"""
Tests for the measure estimates, the phi profile and the constant-slope model.
"""

import random
import sys
from fractions import Fraction
from pathlib import Path

import pytest

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from kneadlab.errors import InputError, NotApplicableError
from kneadlab.measure_service import (
    LapIndex,
    linearize,
    measure_estimate,
    phi_profile,
    self_similarity_check,
    uniform_grid,
)
from kneadlab.numeric import ClosedInterval
from kneadlab.system_service import load_system_file

SYSTEMS = Path(__file__).parent.parent / "systems"
DEPTH = 12
TOL = Fraction(1, 10**9)


def load(name):
    return load_system_file(SYSTEMS / f"{name}.json")


def test_lap_index_counts_tent():
    index = LapIndex(load("tent"), 8)
    assert index.laps[1:] == [2**k for k in range(1, 9)]
    assert index.count(3, ClosedInterval.of("0", "1/8")) == 1
    assert index.count(3, ClosedInterval.of("1/16", "3/16")) == 2, "straddles 1/8"
    assert index.count(3, ClosedInterval.point(Fraction(1, 8))) == 0
    assert index.s_hat == pytest.approx(2.0)
    index.require_gate()


def test_lap_index_needs_depth():
    with pytest.raises(InputError):
        LapIndex(load("tent"), 2)


def test_gate_refuses_identity():
    with pytest.raises(NotApplicableError):
        LapIndex(load("identity"), 6).require_gate()


def test_full_hull_has_measure_one():
    spec = load("tent")
    estimate = measure_estimate(spec, spec.hull, DEPTH, DEPTH, check_endpoints=False)
    assert estimate.value == 1
    assert estimate.bracket == (1.0, 1.0)


def test_tent_left_half():
    estimate = measure_estimate(load("tent"), ClosedInterval.of("0", "1/2"), DEPTH, DEPTH)
    assert 0.48 <= float(estimate.value) <= 0.52
    assert estimate.ratios == [Fraction(1, 2)] * 3
    assert estimate.abel_extrapolated == pytest.approx(0.5, abs=0.05)
    assert estimate.to_dict(4)["value"] == "0.5000"


def test_skewed_tent_phi_at_turning_point():
    """The left lap carries half of the laps at every level, so phi(1/3) = 1/2."""
    profile = phi_profile(load("skewed_tent"), [Fraction(1, 3)], DEPTH)
    assert profile == [(Fraction(1, 3), Fraction(1, 2))]


def test_phi_profile_is_monotone():
    spec = load("skewed_tent")
    profile = phi_profile(spec, uniform_grid(spec.hull, 17), 10)
    values = [v for _, v in profile]
    assert values == sorted(values)
    assert values[0] == 0 and values[-1] == 1
    with pytest.raises(InputError):
        phi_profile(spec, [Fraction(2)], 10)


def test_uniform_grid():
    assert uniform_grid(ClosedInterval.of("0", "1"), 5) == [Fraction(k, 4) for k in range(5)]
    with pytest.raises(InputError):
        uniform_grid(ClosedInterval.of("0", "1"), 1)


def test_self_similarity_on_tent():
    result = self_similarity_check(load("tent"), ClosedInterval.of("0", "1/2"), DEPTH, DEPTH)
    assert result.passed, f"residual {result.residual} above bracket {result.bracket}"
    assert result.value == pytest.approx(0.5)


def test_linearize_tent():
    report = linearize(load("tent"), DEPTH, DEPTH, TOL, grid_size=33)
    assert report.entropy_source == "determinant root"
    assert float(report.model.slope(1)) == pytest.approx(2.0, abs=1e-3)
    assert float(report.model.slope(2)) == pytest.approx(-2.0, abs=1e-3)
    assert report.model.breakpoints == [0, Fraction(1, 2), 1]
    assert not any(b.degenerate for b in report.model.branches)
    assert report.max_residual <= 0.02, f"max residual {report.max_residual}"


@pytest.mark.parametrize("name", ["tent", "skewed_tent", "overlap_doubling"])
def test_linearize_residual_on_200_point_grid(name):
    report = linearize(load(name), DEPTH, DEPTH, TOL, grid_size=200)
    assert float(report.model.s) == pytest.approx(2.0, abs=1e-3)
    assert report.max_residual <= 0.05, f"{name}: max residual {report.max_residual}"
    assert len(report.rows) >= 200


@pytest.mark.parametrize("name", ["tent", "skewed_tent", "overlap_doubling"])
def test_self_similarity_on_random_intervals(name):
    spec = load(name)
    hull = spec.hull
    index = LapIndex(spec, DEPTH)
    rng = random.Random(f"self-similarity:{name}")
    for _ in range(10):
        a, b = sorted(rng.sample(range(1, 997), 2))
        interval = ClosedInterval(hull.lo + hull.length * Fraction(a, 997), hull.lo + hull.length * Fraction(b, 997))
        result = self_similarity_check(spec, interval, DEPTH, DEPTH, index)
        assert result.passed, f"{name} {interval.render()}: residual {result.residual} above {result.bracket}"
