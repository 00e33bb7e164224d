#!/usr/bin/env python3
"""
Command-line front end.

Usage:
    python -m kneadlab entropy systems/tent.json -m 16 -M 18
    python -m kneadlab determinant systems/scaling.json -M 8
    python -m kneadlab compare systems/contractions.json systems/contractions_swapped.json -m 10
    python -m kneadlab verify systems/tent.json -m 12 -M 10

Every command writes ``<output-dir>/<command>_<system>.json`` plus CSV side
files where relevant. Exit status: 0 success, 1 failed check or
inapplicable method, 2 input error.
"""

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional

from kneadlab.config import get_settings, settings_override
from kneadlab.entropy_service import entropy_report
from kneadlab.errors import (
    InconsistencyError,
    InputError,
    KneadlabError,
    NodeBudgetExceeded,
    NotApplicableError,
    PreconditionError,
)
from kneadlab.itinerary_service import (
    check_separability,
    combinatorial_map,
    compare_kneading,
    itinerary,
    kneading_data,
)
from kneadlab.kneading_service import (
    increment_rows_text,
    kneading_determinant,
    kneading_matrix,
    one_sided_stability,
    theta,
)
from kneadlab.measure_service import (
    LapIndex,
    linearize,
    measure_estimate,
    phi_profile,
    self_similarity_check,
    uniform_grid,
)
from kneadlab.models import Side, SignedPoint, SystemSpec
from kneadlab.numeric import ClosedInterval, format_rational, parse_rational
from kneadlab.overlap_service import overlap_determinant_check, overlap_entropy_model, overlap_itineraries
from kneadlab.suite_service import IdentitySuite
from kneadlab.system_service import load_system_file

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2


@dataclass
class CommandResult:
    """What a command produced: the JSON document, summary lines and CSV side files."""
    payload: Dict
    lines: List[str] = field(default_factory=list)
    tables: Dict[str, List[List]] = field(default_factory=dict)
    passed: bool = True


def _fmt(q, decimal: Optional[int]) -> str:
    return format_rational(q, decimal) if isinstance(q, (int, Fraction)) else str(q)


def _signed_point(text: str) -> SignedPoint:
    """``1/3``, ``1/3+`` or ``1/3-``."""
    text = text.strip()
    side = Side.EXACT
    if text.endswith("+"):
        side, text = Side.PLUS, text[:-1]
    elif text.endswith("-") and len(text) > 1:
        side, text = Side.MINUS, text[:-1]
    return SignedPoint(parse_rational(text), side)


def cmd_entropy(spec: SystemSpec, args) -> CommandResult:
    report = entropy_report(spec, args.depth, args.cap, args.tol)
    lines = [
        f"lap counts: {' '.join(str(v) for v in report.laps)}",
        f"s_hat = {report.s_hat:.6f}  (band {report.estimate.band:.2e}), s0_hat = {report.s0_hat:.6f}",
        f"entropy (lap counts)  = {report.entropy_lap:.6f}",
    ]
    if report.root is not None:
        lines.append(f"determinant = {report.determinant.render(args.decimal)}")
        lines.append(f"root r = {_fmt(report.root, args.decimal or 9)}")
        lines.append(f"entropy (determinant) = {report.entropy_root:.6f}  |difference| = {report.discrepancy:.2e}")
    else:
        lines.append("root method not applicable")
    lines.extend(f"warning: {w}" for w in report.warnings)
    return CommandResult(report.to_dict(args.decimal), lines, {"growth": report.csv_rows()})


def cmd_matrix(spec: SystemSpec, args) -> CommandResult:
    km = kneading_matrix(spec, args.cap)
    lines = [f"vartheta_{i} = {row}" for i, row in enumerate(increment_rows_text(km, args.decimal), 1)]
    lines += [f"e_{j} = {e.render(args.decimal)}" for j, e in enumerate(km.e)]
    return CommandResult(km.to_dict(), lines)


def cmd_determinant(spec: SystemSpec, args) -> CommandResult:
    value = kneading_determinant(spec, args.cap, delete_column=args.column)
    text = value.render(args.decimal)
    payload = {"system": spec.name, "cap": args.cap, "column": args.column, "determinant": value.to_strings(), "rendered": text}
    return CommandResult(payload, [text])


def cmd_itinerary(spec: SystemSpec, args) -> CommandResult:
    if args.point is not None:
        tree = itinerary(spec, _signed_point(args.point), args.depth)
        payload = {"system": spec.name, "itinerary": tree.to_dict()}
        lines = [f"{tree.base.render()}: {len(tree.entries)} admissible words to depth {args.depth}"]
        payload["theta"] = theta(spec, tree.base, args.cap).to_dict()
        if args.stability:
            result = one_sided_stability(spec, tree.base.value, args.depth)
            payload["one_sided_stability"] = result.to_dict()
            lines.append(f"theta(x+) vs theta(x+{result.delta}): {'agree' if result.agree else 'differ'}")
        return CommandResult(payload, lines)
    data = kneading_data(spec, args.depth)
    lines = [
        f"c{i} = {tree.base.value}: {len(tree.entries)} admissible words"
        for i, tree in enumerate(data.trees, 1)
    ]
    return CommandResult({"system": spec.name, "kneading": data.to_dict()}, lines)


def cmd_compare(spec_a: SystemSpec, spec_b: SystemSpec, args) -> CommandResult:
    comparison = compare_kneading(spec_a, spec_b, args.depth)
    lines = [comparison.describe()]
    payload = {"systems": [spec_a.name, spec_b.name], "kneading": comparison.to_dict()}
    if comparison.equal:
        report = combinatorial_map(spec_a, spec_b, get_settings().orbit_depth_for(args.depth))
        payload["combinatorial_map"] = report.to_dict()
        if report.success:
            lines.append(f"combinatorial map consistent on {report.points} orbit points")
        else:
            v = report.violation
            lines.append(f"combinatorial map fails ({v['kind']}): {v['first']} vs {v['second']}")
    return CommandResult(payload, lines, passed=comparison.equal)


def cmd_separability(spec: SystemSpec, args) -> CommandResult:
    report = check_separability(spec, args.depth)
    payload = report.to_dict()
    lines = [
        f"future separation: {payload['future_separation']} ({report.future_pairs} pairs)",
        f"past separation:   {payload['past_separation']} ({report.past_pairs} pairs"
        f"{', sampled' if report.past_sampled else ''})",
    ]
    for failure in report.future_failures + report.past_failures:
        lines.append(f"  counterexample: {failure}")
    lines.extend(f"warning: {w}" for w in report.warnings)
    return CommandResult(payload, lines)


def cmd_measure(spec: SystemSpec, args) -> CommandResult:
    index = LapIndex(spec, max(args.depth, args.cap))
    index.require_gate()
    interval = ClosedInterval(*args.interval) if args.interval else spec.hull
    estimate = measure_estimate(spec, interval, args.depth, args.cap, index)
    similarity = self_similarity_check(spec, interval, args.depth, args.cap, index)
    profile = phi_profile(spec, uniform_grid(spec.hull, args.grid), args.depth, index)
    payload = {
        "system": spec.name,
        "measure": estimate.to_dict(args.decimal),
        "self_similarity": similarity.to_dict(),
    }
    lines = [
        f"Lambda({interval.render()}) = {_fmt(estimate.value, args.decimal or 6)}"
        f"  bracket [{estimate.bracket[0]:.6f}, {estimate.bracket[1]:.6f}]",
        f"self-similarity residual {similarity.residual:.2e} (bracket {similarity.bracket:.2e})",
    ]
    lines.extend(f"warning: {w}" for w in estimate.endpoint_warnings)
    tables = {"phi": [["x", "phi"]] + [[_fmt(x, args.decimal), _fmt(v, args.decimal)] for x, v in profile]}
    return CommandResult(payload, lines, tables, passed=similarity.passed)


def cmd_linearize(spec: SystemSpec, args) -> CommandResult:
    report = linearize(spec, args.depth, args.cap, args.tol, args.grid)
    model = report.model
    lines = [f"s = {_fmt(model.s, args.decimal or 6)} (from {report.entropy_source})"]
    for i, b in enumerate(model.branches, 1):
        flag = " degenerate" if b.degenerate else ""
        lines.append(
            f"U{i}: slope {_fmt(model.slope(i), args.decimal or 6)} on {b.domain.render(args.decimal or 6)}{flag}"
        )
    lines.append(f"max residual {report.max_residual:.2e}")
    rows = [["branch", "x", "residual"]] + [[i, _fmt(x, args.decimal), r] for i, x, r in report.rows]
    return CommandResult(report.to_dict(args.decimal), lines, {"residual": rows})


def cmd_overlap(spec: SystemSpec, args) -> CommandResult:
    itineraries = overlap_itineraries(spec, args.length)
    model = overlap_entropy_model(itineraries, args.tol, spec)
    check = overlap_determinant_check(spec, args.cap)
    payload = {
        "system": spec.name,
        "itineraries": itineraries.to_dict(),
        "model": model.to_dict(args.decimal),
        "determinant_check": check.to_dict(),
    }
    lines = [
        f"alpha = {''.join(str(a) for a in itineraries.alpha.symbols)}",
        f"beta  = {''.join(str(b) for b in itineraries.beta.symbols)}",
    ]
    if model.found:
        lines.append(f"r = {_fmt(model.root, args.decimal or 9)} ({'exact' if model.exact else 'truncated'}), s = {_fmt(model.s, args.decimal or 6)}")
        lines.append(f"p = {_fmt(model.p, args.decimal or 9)} (tail bound {float(model.tail_bound):.2e})")
    else:
        lines.append("no entropy root found")
    lines.append(f"N21 = sum (alpha_i - beta_i) t^i: {check.n21_matches}; D = -N21/(1-t): {check.determinant_matches}")
    lines.extend(f"warning: {w}" for w in model.warnings)
    return CommandResult(payload, lines, passed=check.n21_matches and check.determinant_matches)


def cmd_verify(spec: SystemSpec, args) -> CommandResult:
    suite = IdentitySuite(args.depth, args.cap, seed=args.seed)
    report = suite.run(spec)
    lines = [
        f"{r.check:<20} {'ok' if r.passed else 'FAILED':<7} residual {r.residual}  {r.detail}"
        for r in report.results
    ]
    return CommandResult(report.to_dict(), lines, {"suite": report.csv_rows()}, passed=report.passed)


COMMANDS: Dict[str, Callable] = {
    "entropy": cmd_entropy,
    "matrix": cmd_matrix,
    "determinant": cmd_determinant,
    "itinerary": cmd_itinerary,
    "separability": cmd_separability,
    "measure": cmd_measure,
    "linearize": cmd_linearize,
    "overlap": cmd_overlap,
    "verify": cmd_verify,
}


def _positive_fraction(text: str) -> Fraction:
    value = parse_rational(text)
    if value <= 0:
        raise InputError("tolerance must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-m', '--depth', type=int, default=settings.default_depth,
                        help=f'Word depth m (default: {settings.default_depth})')
    common.add_argument('-M', '--cap', type=int, default=settings.default_series_cap,
                        help=f'Series cap M (default: {settings.default_series_cap})')
    common.add_argument('--tol', type=_positive_fraction, default=settings.default_tolerance,
                        help='Root tolerance as an exact number (default: 1/1000000000)')
    common.add_argument('--output-dir', type=str, default=settings.output_dir,
                        help=f'Directory for JSON and CSV results (default: {settings.output_dir})')
    common.add_argument('--decimal', type=int, default=None,
                        help='Render numbers with this many decimals instead of exact fractions')
    common.add_argument('--threads', type=int, default=settings.threads,
                        help='Worker threads for deep enumerations')
    common.add_argument('--log-level', type=str, default=settings.log_level,
                        help='Logging level (default: %(default)s)')
    common.add_argument('--format', choices=['text', 'json'], default='text',
                        help='Console output format')

    parser = argparse.ArgumentParser(
        prog="kneadlab",
        description="Kneading theory for systems of monotone interval maps",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("entropy", parents=[common], help="Lap-count and determinant-root entropy").add_argument("system")
    sub.add_parser("matrix", parents=[common], help="Kneading increments and e_j polynomials").add_argument("system")

    p = sub.add_parser("determinant", parents=[common], help="Kneading determinant")
    p.add_argument("system")
    p.add_argument('--column', type=int, default=None,
                   help='Deleted column (default: all columns, checked for agreement)')

    p = sub.add_parser("itinerary", parents=[common], help="Kneading data or the itinerary of one point")
    p.add_argument("system")
    p.add_argument('--point', type=str, default=None, help='Base point, e.g. 1/3, 1/3+ or 1/3-')
    p.add_argument('--stability', action='store_true', help='Also run the one-sided stability check at --point')

    p = sub.add_parser("compare", parents=[common], help="Compare kneading data of two systems")
    p.add_argument("system")
    p.add_argument("other")

    sub.add_parser("separability", parents=[common], help="Finite-depth separation checks").add_argument("system")

    for name, text in (("measure", "Self-similar measure estimates and phi profile"),
                       ("linearize", "Constant-slope model through phi")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("system")
        p.add_argument('--grid', type=int, default=200, help='Grid size for phi profiles and residuals')
        if name == "measure":
            p.add_argument('--interval', nargs=2, type=parse_rational, metavar=('A', 'B'), default=None,
                           help='Interval [A, B] (default: the hull)')

    p = sub.add_parser("overlap", parents=[common], help="Two-branch overlapping systems")
    p.add_argument("system")
    p.add_argument('-N', '--length', type=int, default=32, help='Critical itinerary length N (default: 32)')

    p = sub.add_parser("verify", parents=[common], help="Run the identity suite")
    p.add_argument("system")
    p.add_argument('--seed', type=int, default=0, help='Seed for sampled points and intervals')
    return parser


def _validate(args) -> None:
    if args.depth < 1:
        raise InputError("depth m must be at least 1")
    if args.cap < 0:
        raise InputError("series cap M must be non-negative")
    if args.threads < 1:
        raise InputError("--threads must be at least 1")
    if getattr(args, "grid", 2) < 2:
        raise InputError("--grid must be at least 2")
    if getattr(args, "interval", None) and args.interval[0] > args.interval[1]:
        raise InputError("--interval endpoints out of order")


def _write_outputs(result: CommandResult, command: str, stem: str, output_dir: Path) -> List[Path]:
    output_dir.mkdir(parents=True, exist_ok=True)
    written = []
    path = output_dir / f"{command}_{stem}.json"
    with open(path, 'w') as f:
        json.dump(result.payload, f, indent=2, default=str)
    written.append(path)
    for prefix, rows in result.tables.items():
        path = output_dir / f"{prefix}_{stem}.csv"
        with open(path, 'w', newline='') as f:
            csv.writer(f).writerows(rows)
        written.append(path)
    return written


def run(args) -> int:
    _validate(args)
    with settings_override(threads=args.threads):
        return _run(args)


def _run(args) -> int:
    spec = load_system_file(args.system)
    stem = Path(args.system).stem

    if args.format == "text":
        print("=" * 70)
        print(f"kneadlab {args.command}")
        print("=" * 70)
        print(f"System: {spec.name} ({spec.branch_count} branches, turning points "
              f"{', '.join(format_rational(c, args.decimal) for c in spec.turning_points)})")
        print(f"Depth m: {args.depth}, series cap M: {args.cap}")

    if args.command == "compare":
        other = load_system_file(args.other)
        stem = f"{stem}_{Path(args.other).stem}"
        result = cmd_compare(spec, other, args)
    else:
        result = COMMANDS[args.command](spec, args)
    written = _write_outputs(result, args.command, stem, Path(args.output_dir))

    if args.format == "json":
        print(json.dumps(result.payload, indent=2, default=str))
    else:
        print("-" * 70)
        for line in result.lines:
            print(line)
        print("-" * 70)
        for path in written:
            print(f"Results saved to {path}")
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return run(args)
    except InputError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (json.JSONDecodeError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except PreconditionError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except NotApplicableError as e:
        print(f"Not applicable: {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except InconsistencyError as e:
        print(f"Check failed: {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except NodeBudgetExceeded as e:
        print(f"Node budget exceeded: {e}", file=sys.stderr)
        if isinstance(e.partial, list) and all(isinstance(c, int) for c in e.partial):
            print(f"Completed level counts: {e.partial}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except KneadlabError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == '__main__':
    sys.exit(main())
