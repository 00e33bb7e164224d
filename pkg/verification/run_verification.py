#!/usr/bin/env python3
"""
Corpus verification: identity suite, entropy cross-check, overlap checks and
measure checks over the bundled systems.

Usage:
    python verification/run_verification.py
    python verification/run_verification.py --systems tent scaling --depth 8
    python verification/run_verification.py --skip-entropy --output my_results.json
"""

import argparse
import json
import logging
import math
import random
import sys
from datetime import datetime
from fractions import Fraction
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from kneadlab.entropy_service import entropy_report
from kneadlab.errors import KneadlabError
from kneadlab.itinerary_service import check_separability, combinatorial_map, compare_kneading
from kneadlab.measure_service import LapIndex, linearize, self_similarity_check
from kneadlab.numeric import ClosedInterval
from kneadlab.overlap_service import overlap_determinant_check, overlap_entropy_model, overlap_itineraries
from kneadlab.suite_service import IdentitySuite
from kneadlab.system_service import conjugate_affine, load_system_file
from verification.analysis import print_summary_table

SYSTEMS_DIR = Path(__file__).parent.parent / "systems"

SUITE_SYSTEMS = [
    "scaling", "scaling_shifted", "contractions", "contractions_swapped", "quadratic", "square_root",
    "tent", "skewed_tent", "tent_1_2", "tent_1_5", "tent_1_8", "identity",
    "overlap_doubling", "overlap_three_halves", "overlap_five_quarters",
]

# known entropies of the constant-slope members of the corpus
EXPECTED_ENTROPY = {
    "tent": math.log(2),
    "skewed_tent": math.log(2),
    "tent_1_2": math.log(1.2),
    "tent_1_5": math.log(1.5),
    "tent_1_8": math.log(1.8),
    "overlap_doubling": math.log(2),
    "overlap_three_halves": math.log(1.5),
    "overlap_five_quarters": math.log(1.25),
}

OVERLAP_SYSTEMS = ["overlap_doubling", "overlap_three_halves", "overlap_five_quarters"]
PAIRS = [("scaling", "scaling_shifted"), ("contractions", "contractions_swapped"), ("quadratic", "square_root")]
SEPARABILITY = ["scaling", "expanding_contracting"]
# systems whose lap counts give a self-similar measure
MEASURE_SYSTEMS = ["tent", "skewed_tent", "overlap_doubling"]

ENTROPY_AGREEMENT = 1e-2
LINEARIZE_RESIDUAL = 0.05


def run_suites(names, args):
    suite = IdentitySuite(args.depth, args.cap, seed=args.seed)
    out = []
    for name in names:
        print(f"Identity suite: {name}...", end='', flush=True)
        try:
            report = suite.run(load_system_file(SYSTEMS_DIR / f"{name}.json"))
            out.append(report.to_dict())
            failed = [r.check for r in report.failures]
            print(" ✓" if not failed else f" ✗ ({', '.join(failed)})")
        except KneadlabError as e:
            print(f" ✗ Error: {e}")
            out.append({"system": name, "error": str(e), "passed": False})
    return out


def run_entropy(names, args):
    out = []
    for name in names:
        print(f"Entropy: {name}...", end='', flush=True)
        row = {"system": name, "expected": EXPECTED_ENTROPY.get(name)}
        try:
            report = entropy_report(load_system_file(SYSTEMS_DIR / f"{name}.json"),
                                    args.entropy_depth, args.entropy_cap, args.tol)
            row.update(
                s_hat=report.s_hat,
                s0_hat=report.s0_hat,
                entropy_lap=report.entropy_lap,
                entropy_root=report.entropy_root,
                discrepancy=report.discrepancy,
                warnings=report.warnings,
            )
            row["agrees"] = report.discrepancy is None or report.discrepancy <= ENTROPY_AGREEMENT
            print(f" ✓ (h_lap {report.entropy_lap:.6f}"
                  + (f", h_root {report.entropy_root:.6f})" if report.entropy_root is not None else ", no root)"))
        except KneadlabError as e:
            print(f" ✗ Error: {e}")
            row.update(error=str(e), agrees=False)
        out.append(row)
    return out


def run_overlap(names, entropy_rows, args):
    s_hats = {r["system"]: r.get("s_hat") for r in entropy_rows}
    out = []
    for name in names:
        spec = load_system_file(SYSTEMS_DIR / f"{name}.json")
        model = overlap_entropy_model(overlap_itineraries(spec, args.length), args.tol, spec)
        check = overlap_determinant_check(spec, args.cap)
        s_hat = s_hats.get(name)
        row = {
            "system": name,
            "r": float(model.root) if model.root is not None else None,
            "r_exact": model.exact,
            "p": str(model.p) if model.p is not None else None,
            "inverse_s_hat": 1 / s_hat if s_hat else None,
            "N21_matches": check.n21_matches,
            "determinant_matches": check.determinant_matches,
        }
        row["passed"] = check.n21_matches and check.determinant_matches and model.found and (
            row["inverse_s_hat"] is None or abs(row["r"] - row["inverse_s_hat"]) <= ENTROPY_AGREEMENT
        )
        print(f"Overlap: {name}: r = {model.root} ({'exact' if model.exact else 'truncated'})"
              f" {'✓' if row['passed'] else '✗'}")
        out.append(row)
    return out


def run_measure(names, args):
    """Self-similarity on seeded random intervals and the constant-slope residual."""
    out = []
    for name in names:
        print(f"Measure: {name}...", end='', flush=True)
        row = {"system": name}
        try:
            spec = load_system_file(SYSTEMS_DIR / f"{name}.json")
            index = LapIndex(spec, args.measure_depth)
            rng = random.Random(f"{args.seed}:{name}:measure")
            hull = spec.hull
            checks = []
            for _ in range(args.intervals):
                a, b = sorted(rng.sample(range(1, 997), 2))
                interval = ClosedInterval(hull.lo + hull.length * Fraction(a, 997),
                                          hull.lo + hull.length * Fraction(b, 997))
                checks.append(self_similarity_check(spec, interval, args.measure_depth, args.measure_depth, index))
            report = linearize(spec, args.measure_depth, args.measure_depth, args.tol, grid_size=args.grid)
            row.update(
                self_similarity=[c.to_dict() for c in checks],
                self_similar=all(c.passed for c in checks),
                max_residual=report.max_residual,
                s=str(report.model.s),
            )
            row["passed"] = row["self_similar"] and report.max_residual <= LINEARIZE_RESIDUAL
            print(f" {'✓' if row['passed'] else '✗'} (max residual {report.max_residual:.4f})")
        except KneadlabError as e:
            print(f" ✗ Error: {e}")
            row.update(error=str(e), passed=False)
        out.append(row)
    return out


def run_pairs(args):
    """Kneading-equal pairs and an affine conjugate; the first two pairs are expected to fail the map."""
    out = []
    tent = load_system_file(SYSTEMS_DIR / "tent.json")
    cases = [(load_system_file(SYSTEMS_DIR / f"{a}.json"), load_system_file(SYSTEMS_DIR / f"{b}.json"))
             for a, b in PAIRS]
    cases.append((tent, conjugate_affine(tent, 2, 1)))
    for a, b in cases:
        comparison = compare_kneading(a, b, args.pair_depth)
        entry = {"systems": [a.name, b.name], "kneading": comparison.to_dict()}
        if comparison.equal:
            entry["combinatorial_map"] = combinatorial_map(a, b, args.pair_depth // 2).to_dict()
        print(f"Pair {a.name} / {b.name}: {comparison.describe()}")
        out.append(entry)
    for name in SEPARABILITY:
        report = check_separability(load_system_file(SYSTEMS_DIR / f"{name}.json"), args.separation_depth)
        out.append({"systems": [name], "separability": report.to_dict()})
        print(f"Separability {name}: future {report.to_dict()['future_separation']}, "
              f"past {report.to_dict()['past_separation']}")
    return out


def main():
    parser = argparse.ArgumentParser(
        description="Run the identity suite and the cross-checks over the bundled systems"
    )
    parser.add_argument('--systems', nargs='+', default=None,
                        help=f'Systems to run (default: all). Options: {", ".join(SUITE_SYSTEMS)}')
    parser.add_argument('--depth', type=int, default=10, help='Suite word depth m (default: 10)')
    parser.add_argument('--cap', type=int, default=10, help='Suite series cap M (default: 10)')
    parser.add_argument('--seed', type=int, default=0, help='Seed for sampled points (default: 0)')
    parser.add_argument('--entropy-depth', type=int, default=18, help='Depth for entropy cross-check (default: 18)')
    parser.add_argument('--entropy-cap', type=int, default=20, help='Series cap for entropy cross-check (default: 20)')
    parser.add_argument('--length', type=int, default=32, help='Overlap itinerary length N (default: 32)')
    parser.add_argument('--measure-depth', type=int, default=12, help='Depth for measure estimates (default: 12)')
    parser.add_argument('--intervals', type=int, default=10, help='Random intervals per system for self-similarity (default: 10)')
    parser.add_argument('--grid', type=int, default=200, help='Grid points per branch for linearization (default: 200)')
    parser.add_argument('--pair-depth', type=int, default=12, help='Depth for kneading comparisons (default: 12)')
    parser.add_argument('--separation-depth', type=int, default=8, help='Depth for separation checks (default: 8)')
    parser.add_argument('--tol', type=Fraction, default=Fraction(1, 10**9), help='Root tolerance (default: 1/1000000000)')
    parser.add_argument('--skip-entropy', action='store_true', help='Skip the entropy and overlap cross-checks')
    parser.add_argument('--skip-measure', action='store_true', help='Skip the measure and linearization checks')
    parser.add_argument('--skip-pairs', action='store_true', help='Skip pair comparisons and separation checks')
    parser.add_argument('--output', type=str, default=None,
                        help='Output file for results (default: results/verification_TIMESTAMP.json)')
    parser.add_argument('--verbose', action='store_true', help='Log progress from the services')
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.output is None:
        timestamp = datetime.now().strftime('%Y%m%d_%H%M%S')
        args.output = f'results/verification_{timestamp}.json'
    names = args.systems or SUITE_SYSTEMS
    unknown = [n for n in names if not (SYSTEMS_DIR / f"{n}.json").exists()]
    if unknown:
        print(f"Error: unknown systems: {', '.join(unknown)}")
        sys.exit(2)

    print("=" * 70)
    print("kneadlab corpus verification")
    print("=" * 70)
    print(f"Systems: {', '.join(names)}")
    print(f"Suite depth m: {args.depth}, series cap M: {args.cap}, seed: {args.seed}")
    print(f"Output: {args.output}")
    print("=" * 70)
    print()

    results = {
        'metadata': {
            'timestamp': datetime.now().isoformat(),
            'systems': names,
            'depth': args.depth,
            'cap': args.cap,
            'seed': args.seed,
            'entropy_depth': args.entropy_depth,
            'entropy_cap': args.entropy_cap,
            'measure_depth': args.measure_depth,
        },
        'suites': run_suites(names, args),
        'entropy': [],
        'overlap': [],
        'measure': [],
        'pairs': [],
    }
    if not args.skip_entropy:
        print()
        results['entropy'] = run_entropy([n for n in names if n in EXPECTED_ENTROPY], args)
        results['overlap'] = run_overlap([n for n in names if n in OVERLAP_SYSTEMS], results['entropy'], args)
    if not args.skip_measure:
        print()
        results['measure'] = run_measure([n for n in names if n in MEASURE_SYSTEMS], args)
    if not args.skip_pairs:
        print()
        results['pairs'] = run_pairs(args)

    output_path = Path(args.output)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, 'w') as f:
        json.dump(results, f, indent=2, default=str)

    print()
    print("=" * 70)
    print(f"Results saved to {args.output}")
    print("=" * 70)

    print_summary_table(results, output_dir=str(output_path.parent))

    failed = (
        [s['system'] for s in results['suites'] if not s.get('passed')]
        + [r['system'] for r in results['entropy'] if not r.get('agrees')]
        + [r['system'] for r in results['overlap'] if not r.get('passed')]
        + [r['system'] for r in results['measure'] if not r.get('passed')]
    )
    if failed:
        print(f"\nVerification FAILED for: {', '.join(sorted(set(failed)))}")
        sys.exit(1)
    print("\nVerification complete!")


if __name__ == '__main__':
    main()
