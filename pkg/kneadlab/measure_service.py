"""
Estimates of the self-similar measure on intervals and the constant-slope model.

The measure of J is approached through the counting ratio ell(m|J)/ell(m) and,
as a cross-check, through the Abel ratio L(J)(t)/L(t) evaluated close to 1/s.
"""

import logging
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from kneadlab.entropy_service import entropy_report, estimate_growth, point_growth, root_gate
from kneadlab.errors import InputError, NotApplicableError
from kneadlab.models import Branch, SystemSpec
from kneadlab.numeric import ClosedInterval
from kneadlab.words import iter_levels

logger = logging.getLogger(__name__)

ABEL_DELTAS = (0.1, 0.05, 0.02)
RATIO_WINDOW = 3
# endpoint checks walk all words admissible for a point; keep them shallow
ENDPOINT_DEPTH = 12


class LapIndex:
    """Sorted domain endpoints of the interior-admissible words, level by level."""

    def __init__(self, spec: SystemSpec, depth: int, node_budget: Optional[int] = None):
        if depth < RATIO_WINDOW:
            raise InputError(f"measure estimates need depth at least {RATIO_WINDOW}")
        self.spec = spec
        self.depth = depth
        self.lows: List[List[Fraction]] = []
        self.highs: List[List[Fraction]] = []
        self.laps: List[int] = []
        boundary: Dict[int, List[int]] = {i: [] for i in range(1, spec.turning_count + 1)}
        for k, nodes in iter_levels(spec, depth, node_budget):
            if k == 0:
                self.lows.append([])
                self.highs.append([])
                self.laps.append(1)
                continue
            self.lows.append(sorted(n.domain.lo for n in nodes))
            self.highs.append(sorted(n.domain.hi for n in nodes))
            self.laps.append(len(nodes))
            for i, c in enumerate(spec.turning_points, 1):
                boundary[i].append(sum(1 for n in nodes if c in (n.domain.lo, n.domain.hi)))
        self.estimate = estimate_growth(self.laps[1:])
        self.s0_hat = max((estimate_growth(v).s_hat for v in boundary.values()), default=0.0)
        logger.info("%s: lap index to depth %d, s_hat=%.6f", spec.name, depth, self.estimate.s_hat)

    @property
    def s_hat(self) -> float:
        return self.estimate.s_hat

    def require_gate(self) -> None:
        if not root_gate(self.s_hat, self.s0_hat, self.depth):
            raise NotApplicableError(
                f"{self.spec.name}: measure needs s0 < s (s0_hat={self.s0_hat:.6f}, s_hat={self.s_hat:.6f})"
            )

    def count(self, k: int, interval: ClosedInterval) -> int:
        """ell(k|J): words of length k whose domain meets J in an interval with interior."""
        if k == 0:
            return 1 if interval.has_interior else 0
        if interval.is_full:
            return self.laps[k]
        if not interval.has_interior:
            return 0
        # domains with lo < b, minus those lying entirely left of a
        return bisect_left(self.lows[k], interval.hi) - bisect_right(self.highs[k], interval.lo)

    def ratio(self, k: int, interval: ClosedInterval) -> Fraction:
        return Fraction(self.count(k, interval), self.laps[k])


@dataclass
class MeasureEstimate:
    interval: ClosedInterval
    depth: int
    value: Fraction
    ratios: List[Fraction]
    abel: Dict[float, float] = field(default_factory=dict)
    abel_extrapolated: Optional[float] = None
    bracket: Tuple[float, float] = (0.0, 0.0)
    endpoint_warnings: List[str] = field(default_factory=list)

    @property
    def width(self) -> float:
        return self.bracket[1] - self.bracket[0]

    def to_dict(self, decimal: Optional[int] = None) -> Dict:
        return {
            "interval": self.interval.render(decimal),
            "depth": self.depth,
            "method": f"ratio{{depth {self.depth}}}",
            "value": str(self.value) if decimal is None else f"{float(self.value):.{decimal}f}",
            "ratios": [str(r) for r in self.ratios],
            "abel": {str(d): v for d, v in self.abel.items()},
            "abel_extrapolated": self.abel_extrapolated,
            "bracket": list(self.bracket),
            "endpoint_warnings": self.endpoint_warnings,
        }


def _abel(index: LapIndex, interval: ClosedInterval, cap: int) -> Tuple[Dict[float, float], Optional[float]]:
    top = min(cap, index.depth)
    if top < 1 or index.s_hat <= 0:
        return {}, None
    whole = np.asarray([index.laps[k] for k in range(1, top + 1)], dtype=float)
    part = np.asarray([index.count(k, interval) for k in range(1, top + 1)], dtype=float)
    values = {}
    for delta in ABEL_DELTAS:
        t = (1 - delta) / index.s_hat
        # polyval wants the highest power first; L = sum ell(k) t^(k-1)
        values[delta] = float(np.polyval(part[::-1], t) / np.polyval(whole[::-1], t))
    deltas = np.asarray(ABEL_DELTAS)
    intercept = float(np.polyfit(deltas, np.asarray([values[d] for d in ABEL_DELTAS]), 1)[1])
    return values, min(1.0, max(0.0, intercept))


def measure_estimate(
    spec: SystemSpec,
    interval: ClosedInterval,
    depth: int,
    cap: int,
    index: Optional[LapIndex] = None,
    check_endpoints: bool = True,
) -> MeasureEstimate:
    index = index or LapIndex(spec, max(depth, cap))
    index.require_gate()
    ratios = [index.ratio(k, interval) for k in range(depth - RATIO_WINDOW + 1, depth + 1)]
    value = ratios[-1]
    abel, extrapolated = _abel(index, interval, cap)
    candidates = [float(r) for r in ratios]
    lo, hi = max(0.0, min(candidates)), min(1.0, max(candidates))
    result = MeasureEstimate(interval, depth, value, ratios, abel, extrapolated, (lo, hi))
    if extrapolated is not None and not lo - 0.05 <= extrapolated <= hi + 0.05:
        result.endpoint_warnings.append(
            f"Abel estimate {extrapolated:.4f} disagrees with the ratio bracket [{lo:.4f}, {hi:.4f}]"
        )
    if check_endpoints and not interval.is_full and not interval.is_empty:
        for end in {interval.lo, interval.hi}:
            growth = point_growth(spec, end, min(depth, ENDPOINT_DEPTH), s_hat=index.s_hat)
            if not growth.in_a_hat:
                result.endpoint_warnings.append(f"endpoint {end} is not certified in the slow-growth set")
    for warning in result.endpoint_warnings:
        logger.warning("%s: %s", spec.name, warning)
    return result


@dataclass
class SelfSimilarityResult:
    interval: ClosedInterval
    value: float
    images: List[Tuple[str, float]]
    residual: float
    bracket: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.bracket

    def to_dict(self) -> Dict:
        return {
            "interval": self.interval.render(),
            "value": self.value,
            "images": [{"image": im, "value": v} for im, v in self.images],
            "residual": self.residual,
            "bracket": self.bracket,
            "passed": self.passed,
        }


def self_similarity_check(
    spec: SystemSpec, interval: ClosedInterval, depth: int, cap: int, index: Optional[LapIndex] = None
) -> SelfSimilarityResult:
    """|Lambda(J) - (1/s) sum_i Lambda(f_i(J))| against the combined estimator bracket."""
    index = index or LapIndex(spec, max(depth, cap))
    own = measure_estimate(spec, interval, depth, cap, index, check_endpoints=False)
    s = index.s_hat
    images, spread = [], 0.0
    total = 0.0
    for branch in spec.branches:
        image = branch.push_forward(interval)
        if image.is_empty:
            continue
        estimate = measure_estimate(spec, image, depth, cap, index, check_endpoints=False)
        images.append((image.render(), float(estimate.value)))
        total += float(estimate.value)
        spread += estimate.width
    residual = abs(float(own.value) - total / s)
    step_ratio = index.laps[depth] / index.laps[depth - 1]
    bracket = own.width + spread / s + spec.branch_count / s * abs(1 - s / step_ratio) + 1e-12
    return SelfSimilarityResult(interval, float(own.value), images, residual, bracket)


def phi_profile(
    spec: SystemSpec, grid: Sequence[Fraction], depth: int, index: Optional[LapIndex] = None
) -> List[Tuple[Fraction, Fraction]]:
    """phi(x) = Lambda([c_1, x]) on a grid inside the hull; non-decreasing by construction."""
    index = index or LapIndex(spec, depth)
    index.require_gate()
    hull = spec.hull
    out = []
    for x in grid:
        if not hull.contains(x):
            raise InputError(f"grid point {x} is outside the hull {hull.render()}")
        out.append((x, index.ratio(depth, ClosedInterval(hull.lo, x))))
    return out


def uniform_grid(interval: ClosedInterval, size: int) -> List[Fraction]:
    if size < 2:
        raise InputError("grid needs at least two points")
    step = interval.length / (size - 1)
    return [interval.lo + step * k for k in range(size)]


@dataclass
class AffineBranchModel:
    domain: ClosedInterval
    orientation: int
    anchor: Fraction
    degenerate: bool

    def to_dict(self, s: Fraction) -> Dict:
        return {
            "domain": self.domain.to_list(),
            "slope": str(self.orientation * s),
            "value_at_left": str(self.anchor),
            "degenerate": self.degenerate,
        }


@dataclass
class AffineModel:
    """Branches with slope +-s; s is stored once."""
    s: Fraction
    breakpoints: List[Fraction]
    branches: List[AffineBranchModel]

    def slope(self, i: int) -> Fraction:
        return self.branches[i - 1].orientation * self.s

    def evaluate(self, i: int, y: Fraction) -> Fraction:
        b = self.branches[i - 1]
        return b.orientation * self.s * (y - b.domain.lo) + b.anchor

    def to_dict(self) -> Dict:
        return {
            "s": str(self.s),
            "breakpoints": [str(c) for c in self.breakpoints],
            "branches": [b.to_dict(self.s) for b in self.branches],
        }


@dataclass
class LinearizationReport:
    model: AffineModel
    residuals: Dict[int, float]
    rows: List[Tuple[int, Fraction, float]]
    entropy_source: str

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def to_dict(self, decimal: Optional[int] = None) -> Dict:
        return {
            "model": self.model.to_dict(),
            "entropy_source": self.entropy_source,
            "residuals": {f"a{i}": r for i, r in self.residuals.items()},
            "max_residual": self.max_residual,
        }


def _branch_grid(branch: Branch, size: int) -> List[Fraction]:
    return uniform_grid(branch.domain, size) if branch.domain.has_interior else [branch.domain.lo]


def linearize(spec: SystemSpec, depth: int, cap: int, tol: Fraction, grid_size: int = 200) -> LinearizationReport:
    """
    Transport the system through phi to a system of slope +-s.

    s comes from the determinant root when the root method applies, and from
    the lap-count estimate otherwise.
    """
    index = LapIndex(spec, max(depth, cap))
    index.require_gate()
    growth = entropy_report(spec, depth, cap, tol)
    if growth.root is not None:
        s, source = 1 / growth.root, "determinant root"
    else:
        s, source = Fraction(growth.s_hat).limit_denominator(10**6), "lap counts"
    hull = spec.hull

    def phi(x: Fraction) -> Fraction:
        return index.ratio(depth, ClosedInterval(hull.lo, x))

    breakpoints = [phi(c) for c in spec.turning_points]
    branches = []
    for branch in spec.branches:
        lo, hi = phi(branch.domain.lo), phi(branch.domain.hi)
        left = branch.domain.lo
        branches.append(AffineBranchModel(ClosedInterval(lo, hi), branch.orientation, phi(branch.evaluate(left)), lo == hi))
    model = AffineModel(s, breakpoints, branches)
    for i, b in enumerate(branches, 1):
        if b.degenerate:
            logger.warning("%s: phi collapses Dom(a%d) to a point", spec.name, i)

    residuals: Dict[int, float] = {}
    rows = []
    for i, branch in enumerate(spec.branches, 1):
        worst = 0.0
        for x in _branch_grid(branch, grid_size):
            y = branch.evaluate(x)
            if not hull.contains(y):
                continue
            r = float(abs(phi(y) - model.evaluate(i, phi(x))))
            rows.append((i, x, r))
            worst = max(worst, r)
        residuals[i] = worst
    logger.info("%s: linearized with s=%s, max residual %.6f", spec.name, s, max(residuals.values(), default=0.0))
    return LinearizationReport(model, residuals, rows, source)
