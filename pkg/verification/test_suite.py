#!/usr/bin/env python3
"""
Tests for the identity suite: check order, seeding and how failures are reported.
"""

import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from kneadlab import suite_service
from kneadlab.entropy_service import TriCheck
from kneadlab.errors import PreconditionError
from kneadlab.numeric import TruncatedSeries
from kneadlab.suite_service import IdentitySuite
from kneadlab.system_service import load_system_file

SYSTEMS = Path(__file__).parent.parent / "systems"


def load(name):
    return load_system_file(SYSTEMS / f"{name}.json")


def test_ld_identity_passes_on_full_sample():
    result = IdentitySuite(6, 6, points=5).check_ld_identity(load("tent"))
    assert result.passed, result.detail
    assert result.detail.startswith("5 of 5 points"), result.detail


def test_ld_identity_fails_when_draws_run_out(monkeypatch):
    """Only the first draw is usable; one point out of twenty is not a pass."""
    calls = []

    def one_usable_point(spec, x, cap):
        calls.append(x)
        if len(calls) > 1:
            raise PreconditionError(f"{x} is pre-turning")
        return TruncatedSeries.zero(cap)

    monkeypatch.setattr(suite_service, "verify_ld_identity", one_usable_point)
    result = IdentitySuite(6, 6, points=20).check_ld_identity(load("tent"))

    assert not result.passed, "A short sample must not pass"
    assert result.residual == "0", "No nonzero residual was seen"
    assert f"1 of 20 points, {suite_service.MAX_DRAWS - 1} pre-turning skipped" == result.detail


def test_tri_bijection_failure_is_reported(monkeypatch):
    """Five distinct images inside seven boundary pairs leave two pairs unhit."""
    monkeypatch.setattr(suite_service, "tri_bijection_check", lambda spec, depth: TriCheck(depth, 5, 7, 2))
    results = IdentitySuite(6, 6).check_counting(load("tent"))
    tri = [r for r in results if r.check == "tri_bijection"][0]

    assert not tri.passed
    assert tri.residual == "4"


def test_suite_is_reproducible():
    suite = IdentitySuite(6, 6, points=4, intervals=2, seed=3)
    first = suite.run(load("skewed_tent")).to_dict()
    second = suite.run(load("skewed_tent")).to_dict()
    assert first == second, "Same seed, same report"
    assert first["passed"], [r for r in first["results"] if not r["passed"]]
