#!/usr/bin/env python3
"""
Test script to verify the corpus verification pipeline is working correctly.

Runs the runner stages on small depths so the whole file finishes quickly.
"""

import csv
import sys
import tempfile
from argparse import Namespace
from fractions import Fraction
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from verification.analysis import SUITE_CHECKS, save_summary_csv, summary_rows
from verification.run_verification import SUITE_SYSTEMS, SYSTEMS_DIR, run_measure, run_overlap, run_suites


def small_args(**overrides):
    values = dict(depth=8, cap=8, seed=0, entropy_depth=10, entropy_cap=10,
                  length=16, measure_depth=10, intervals=3, grid=17,
                  tol=Fraction(1, 10**9))
    values.update(overrides)
    return Namespace(**values)


def test_corpus_files_exist():
    """Test every corpus system is bundled."""
    print("Testing: Corpus files...")

    missing = [n for n in SUITE_SYSTEMS if not (SYSTEMS_DIR / f"{n}.json").exists()]
    assert not missing, f"Missing systems: {missing}"

    print(f"  ✓ {len(SUITE_SYSTEMS)} systems found")


def test_suite_stage():
    """Test the identity suite stage on the tent."""
    print("Testing: Identity suite stage...")

    suites = run_suites(["tent"], small_args())

    assert len(suites) == 1, "One report per system"
    assert suites[0]["passed"], f"Failures: {[r for r in suites[0]['results'] if not r['passed']]}"
    assert [r["check"] for r in suites[0]["results"]] == SUITE_CHECKS, "Checks out of order"

    print("  ✓ tent passes all checks")


def test_overlap_stage():
    """Test the overlap stage without a lap-count estimate."""
    print("Testing: Overlap stage...")

    rows = run_overlap(["overlap_doubling"], [], small_args(cap=10))

    assert rows[0]["r"] == 0.5, f"Got r = {rows[0]['r']}"
    assert rows[0]["r_exact"], "Doubling orbits are periodic"
    assert rows[0]["inverse_s_hat"] is None
    assert rows[0]["passed"]

    print(f"  ✓ r = {rows[0]['r']}")


def test_measure_stage():
    """Test the measure stage on the doubling overlap."""
    print("Testing: Measure stage...")

    rows = run_measure(["overlap_doubling"], small_args())

    assert "error" not in rows[0], rows[0].get("error")
    assert len(rows[0]["self_similarity"]) == 3, "One check per interval"
    assert rows[0]["self_similar"], rows[0]["self_similarity"]
    assert rows[0]["max_residual"] <= 0.05, f"Residual {rows[0]['max_residual']}"
    assert rows[0]["passed"]

    print(f"  ✓ max residual {rows[0]['max_residual']:.4f}")


def test_summary_rows():
    """Test summary rows combine suites and entropy."""
    print("Testing: Summary rows...")

    results = {
        "suites": [
            {"system": "tent", "passed": True,
             "results": [{"check": c, "passed": True} for c in SUITE_CHECKS]},
            {"system": "broken", "error": "cannot read broken.json", "passed": False},
            {"system": "odd", "passed": False,
             "results": [{"check": "L_gamma", "passed": False}, {"check": "cylinders", "passed": True}]},
        ],
        "entropy": [{"system": "tent", "s_hat": 2.0, "entropy_lap": 0.693, "entropy_root": 0.693,
                     "discrepancy": 0.0}],
    }
    rows = summary_rows(results)

    assert rows[0][0] == "system" and len(rows) == 4
    assert rows[1] == ["tent", True, "", 2.0, 0.693, 0.693, 0.0]
    assert rows[2][1] is False and rows[2][2] == "cannot read broken.json"
    assert rows[3][1] is False and rows[3][2] == "L_gamma"
    assert rows[3][3] is None, "No entropy row for odd"

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "summary.csv"
        save_summary_csv(results, str(out))
        with open(out, newline='') as f:
            saved = list(csv.reader(f))
    assert saved[1][:3] == ["tent", "True", ""]

    print(f"  ✓ {len(rows) - 1} summary rows")


def main():
    """Run all tests."""
    print("=" * 70)
    print("Verification Pipeline Tests")
    print("=" * 70)
    print()

    tests = [
        test_corpus_files_exist,
        test_suite_stage,
        test_overlap_stage,
        test_measure_stage,
        test_summary_rows,
    ]

    passed = 0
    failed = 0

    for test in tests:
        try:
            test()
            passed += 1
            print()
        except AssertionError as e:
            print(f"  ✗ FAILED: {e}")
            print()
            failed += 1
        except Exception as e:
            print(f"  ✗ ERROR: {e}")
            print()
            failed += 1

    print("=" * 70)
    print(f"Results: {passed} passed, {failed} failed")
    print("=" * 70)

    if failed == 0:
        print("\n✓ All tests passed! Run the full corpus with: python verification/run_verification.py")
        return 0
    print("\n✗ Some tests failed. Please review the errors above.")
    return 1


if __name__ == '__main__':
    sys.exit(main())
