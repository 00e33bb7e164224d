"""
Summary tables for corpus verification results.

Provides functions to print the per-system identity table, the entropy
cross-check table, the overlap table and the measure table, and to save
the per-system summary as CSV.
"""

import csv
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

SUITE_CHECKS = [
    "ld_identity", "column_relation", "determinant_columns", "increment_jump",
    "cylinders", "lap_recursion", "L_gamma", "tri_bijection",
]


def _mark(passed) -> str:
    if passed is None:
        return "-"
    return "ok" if passed else "FAIL"


def print_summary_table(results: Dict[str, Any], save_csv: bool = True, output_dir: str = "results") -> None:
    """Print identity, entropy, overlap and measure tables.

    Args:
        results: Results dictionary from run_verification
        save_csv: Whether to save the tables to CSV files
        output_dir: Directory for the CSV files
    """
    print("\n" + "=" * 120)
    print("IDENTITY SUITE")
    print("=" * 120)
    header = f"{'System':<24} | " + " | ".join(f"{c[:11]:<11}" for c in SUITE_CHECKS)
    print(header)
    print("-" * len(header))
    for suite in results.get("suites", []):
        if "error" in suite:
            print(f"{suite['system']:<24} | error: {suite['error']}")
            continue
        by_check = {r["check"]: r["passed"] for r in suite["results"]}
        print(f"{suite['system']:<24} | " + " | ".join(f"{_mark(by_check.get(c)):<11}" for c in SUITE_CHECKS))

    entropy_rows = results.get("entropy", [])
    if entropy_rows:
        print("\n--- ENTROPY: LAP COUNTS VS DETERMINANT ROOT ---")
        header = f"{'System':<24} | {'s_hat':>9} | {'s0_hat':>9} | {'h_lap':>9} | {'h_root':>9} | {'|diff|':>9} | {'expected':>9}"
        print(header)
        print("-" * len(header))
        for row in entropy_rows:
            print(
                f"{row['system']:<24} | {_num(row.get('s_hat'))} | {_num(row.get('s0_hat'))} | "
                f"{_num(row.get('entropy_lap'))} | {_num(row.get('entropy_root'))} | "
                f"{_num(row.get('discrepancy'))} | {_num(row.get('expected'))}"
            )
        discrepancies = np.asarray([r["discrepancy"] for r in entropy_rows if r.get("discrepancy") is not None])
        if discrepancies.size:
            print(f"discrepancy mean {np.mean(discrepancies):.2e}, max {np.max(discrepancies):.2e}")

    overlap_rows = results.get("overlap", [])
    if overlap_rows:
        print("\n--- OVERLAP SYSTEMS ---")
        header = f"{'System':<24} | {'r':>12} | {'exact':<5} | {'1/s_hat':>9} | {'N21':<4} | {'D':<4}"
        print(header)
        print("-" * len(header))
        for row in overlap_rows:
            print(
                f"{row['system']:<24} | {_num(row.get('r'), 12)} | {str(row.get('r_exact')):<5} | "
                f"{_num(row.get('inverse_s_hat'))} | {_mark(row.get('N21_matches')):<4} | "
                f"{_mark(row.get('determinant_matches')):<4}"
            )

    measure_rows = results.get("measure", [])
    if measure_rows:
        print("\n--- MEASURE AND LINEARIZATION ---")
        header = f"{'System':<24} | {'self-sim':<8} | {'max resid':>9} | {'s':>12}"
        print(header)
        print("-" * len(header))
        for row in measure_rows:
            if "error" in row:
                print(f"{row['system']:<24} | error: {row['error']}")
                continue
            print(
                f"{row['system']:<24} | {_mark(row.get('self_similar')):<8} | "
                f"{_num(row.get('max_residual'))} | {row.get('s', '-'):>12}"
            )
    print("=" * 120)

    if save_csv:
        save_summary_csv(results, str(Path(output_dir) / "summary_statistics.csv"))


def _num(value, width: int = 9) -> str:
    if value is None:
        return f"{'-':>{width}}"
    return f"{float(value):>{width}.6f}"


def summary_rows(results: Dict[str, Any]) -> List[List]:
    """One row per system: suite outcome, worst check and the entropy figures."""
    entropy = {r["system"]: r for r in results.get("entropy", [])}
    rows = [["system", "suite_passed", "failed_checks", "s_hat", "entropy_lap", "entropy_root", "discrepancy"]]
    for suite in results.get("suites", []):
        name = suite["system"]
        failed = [r["check"] for r in suite.get("results", []) if not r["passed"]]
        e = entropy.get(name, {})
        rows.append([
            name,
            "error" not in suite and not failed,
            ";".join(failed) if "error" not in suite else suite["error"],
            e.get("s_hat"),
            e.get("entropy_lap"),
            e.get("entropy_root"),
            e.get("discrepancy"),
        ])
    return rows


def save_summary_csv(results: Dict[str, Any], output_file: str = "results/summary_statistics.csv") -> None:
    """Save the per-system summary to a CSV file.

    Args:
        results: Results dictionary from run_verification
        output_file: Output file path for CSV
    """
    Path(output_file).parent.mkdir(parents=True, exist_ok=True)
    with open(output_file, 'w', newline='') as f:
        csv.writer(f).writerows(summary_rows(results))
    print(f"\n✓ Summary statistics saved to {output_file}")
