"""
Identity suite: every exact identity of the theory run against one system.

Each check reports an exact residual; a check passes only when the residual
is identically zero. Random points and intervals come from a seeded
generator, so two runs with the same arguments produce the same report.
"""

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from kneadlab.entropy_service import (
    L_gamma_identity_check,
    cylinder_identity_check,
    l_recursion_check,
    tri_bijection_check,
)
from kneadlab.errors import PreconditionError
from kneadlab.kneading_service import (
    column_determinants,
    kneading_matrix,
    verify_column_relation,
    verify_increment_jump,
    verify_ld_identity,
)
from kneadlab.models import SystemSpec
from kneadlab.numeric import ClosedInterval

logger = logging.getLogger(__name__)

# Prime denominator for sampled points: small enough to stay fast, unlikely to be pre-turning.
SAMPLE_DENOMINATOR = 997
MAX_DRAWS = 200


@dataclass
class CheckResult:
    check: str
    system: str
    residual: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> Dict:
        return {
            "check": self.check,
            "system": self.system,
            "residual": self.residual,
            "passed": self.passed,
            "detail": self.detail,
        }


@dataclass
class SuiteReport:
    system: str
    depth: int
    cap: int
    results: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if not r.passed]

    def csv_rows(self) -> List[List]:
        rows = [["check", "system", "residual", "passed"]]
        rows.extend([r.check, r.system, r.residual, r.passed] for r in self.results)
        return rows

    def to_dict(self) -> Dict:
        return {
            "system": self.system,
            "depth": self.depth,
            "cap": self.cap,
            "passed": self.passed,
            "results": [r.to_dict() for r in self.results],
        }


def _max_abs(values: List[int]) -> int:
    return max((abs(v) for v in values), default=0)


class IdentitySuite:
    """Runs the identity checks on a system at depth m and series cap M."""

    def __init__(
        self,
        depth: int,
        cap: int,
        points: int = 20,
        intervals: int = 5,
        seed: int = 0,
        recursion_depth: int = 12,
        cylinder_depth: int = 10,
        l_gamma_cap: int = 10,
        tri_depth: int = 8,
    ):
        """Initialize suite.

        Args:
            depth: Word depth m for the counting identities (capped per check)
            cap: Series cap M for the theta identities
            points: Random points for the e_j identity
            intervals: Random intervals for the jump identity and the recursion
            seed: Seed for the point generator
        """
        self.depth = depth
        self.cap = cap
        self.points = points
        self.intervals = intervals
        self.seed = seed
        self.recursion_depth = min(depth, recursion_depth)
        self.cylinder_depth = min(depth, cylinder_depth)
        self.l_gamma_cap = max(1, min(cap, l_gamma_cap))
        self.tri_depth = min(depth, tri_depth)

    def _rng(self, spec: SystemSpec, salt: str) -> random.Random:
        return random.Random(f"{self.seed}:{spec.name}:{salt}")

    def _draw_point(self, spec: SystemSpec, rng: random.Random) -> Fraction:
        hull = spec.hull
        return hull.lo + hull.length * Fraction(rng.randint(1, SAMPLE_DENOMINATOR - 1), SAMPLE_DENOMINATOR)

    def _draw_interval(self, spec: SystemSpec, rng: random.Random) -> Tuple[Fraction, Fraction]:
        a = self._draw_point(spec, rng)
        b = self._draw_point(spec, rng)
        while b == a:
            b = self._draw_point(spec, rng)
        return min(a, b), max(a, b)

    def check_ld_identity(self, spec: SystemSpec) -> CheckResult:
        rng = self._rng(spec, "ld")
        tested, skipped, worst = 0, 0, None
        for _ in range(MAX_DRAWS):
            if tested == self.points:
                break
            x = self._draw_point(spec, rng)
            try:
                residual = verify_ld_identity(spec, x, self.cap)
            except PreconditionError:
                skipped += 1
                continue
            tested += 1
            if not residual.is_zero and worst is None:
                worst = (x, residual)
        if worst is not None:
            return CheckResult("ld_identity", spec.name, worst[1].render(), False, f"x={worst[0]}")
        return CheckResult(
            "ld_identity",
            spec.name,
            "0",
            tested == self.points,
            f"{tested} of {self.points} points, {skipped} pre-turning skipped",
        )

    def check_matrix(self, spec: SystemSpec) -> List[CheckResult]:
        km = kneading_matrix(spec, self.cap)
        relation = verify_column_relation(km)
        relation_ok = relation.is_zero
        out = [
            CheckResult(
                "column_relation",
                spec.name,
                "0" if relation_ok else str(relation.to_strings()),
                relation_ok,
            )
        ]
        values = column_determinants(km)
        differing = [j for j, v in enumerate(values) if v != values[0]]
        out.append(
            CheckResult(
                "determinant_columns",
                spec.name,
                "0" if not differing else (values[differing[0]] - values[0]).render(),
                not differing,
                f"{len(values)} columns" if not differing else f"column {differing[0]} differs from column 0",
            )
        )
        return out

    def check_jump(self, spec: SystemSpec) -> CheckResult:
        rng = self._rng(spec, "jump")
        for _ in range(self.intervals):
            a, b = self._draw_interval(spec, rng)
            residual = verify_increment_jump(spec, a, b, self.cap)
            if not residual.is_zero:
                return CheckResult("increment_jump", spec.name, str(residual.to_strings()), False, f"[{a}, {b}]")
        return CheckResult("increment_jump", spec.name, "0", True, f"{self.intervals} intervals")

    def check_counting(self, spec: SystemSpec) -> List[CheckResult]:
        out = []
        cylinders = cylinder_identity_check(spec, self.cylinder_depth)
        out.append(
            CheckResult("cylinders", spec.name, str(_max_abs(cylinders)), not any(cylinders), f"m={self.cylinder_depth}")
        )

        rng = self._rng(spec, "recursion")
        intervals = [spec.hull] + [ClosedInterval(*self._draw_interval(spec, rng)) for _ in range(self.intervals)]
        worst, where = 0, ""
        for interval in intervals:
            value = _max_abs(l_recursion_check(spec, interval, self.recursion_depth))
            if value > worst:
                worst, where = value, interval.render()
        out.append(CheckResult("lap_recursion", spec.name, str(worst), worst == 0, where or f"k<={self.recursion_depth}"))

        l_gamma = L_gamma_identity_check(spec, self.l_gamma_cap)
        out.append(
            CheckResult(
                "L_gamma", spec.name, "0" if l_gamma.is_zero else l_gamma.render(), l_gamma.is_zero,
                f"mod t^{self.l_gamma_cap}",
            )
        )

        tri = tri_bijection_check(spec, self.tri_depth)
        out.append(
            CheckResult("tri_bijection", spec.name, str(tri.residual), tri.residual == 0, f"m={self.tri_depth}")
        )
        return out

    def run(self, spec: SystemSpec, progress: Optional[Callable[[CheckResult], None]] = None) -> SuiteReport:
        report = SuiteReport(spec.name, self.depth, self.cap)
        steps = [
            lambda: [self.check_ld_identity(spec)],
            lambda: self.check_matrix(spec),
            lambda: [self.check_jump(spec)],
            lambda: self.check_counting(spec),
        ]
        for step in steps:
            for result in step():
                report.results.append(result)
                if progress:
                    progress(result)
                if not result.passed:
                    logger.warning("%s: %s residual %s", spec.name, result.check, result.residual)
        return report
