"""
Lap-count growth, boundary counts, determinant-root entropy and the counting identities.

Counts are exact integers. Growth rates are float estimates computed with numpy
from a finite depth and are always reported next to the counts they come from.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from kneadlab.config import get_settings
from kneadlab.errors import InconsistencyError, InputError
from kneadlab.models import SignedPoint, SystemSpec, Word
from kneadlab.numeric import ClosedInterval, TruncatedSeries, smallest_root_in_unit_interval
from kneadlab.kneading_service import kneading_determinant
from kneadlab.words import TreeNode, admissible_for_point, iter_levels, word_domain

logger = logging.getLogger(__name__)

# tail slope must sit this far below log s_hat for a point to count as in A
A_MARGIN = 0.1


@dataclass
class Census:
    """Per-level counts from one enumeration; index k is the word length."""
    depth: int
    laps: List[int] = field(default_factory=list)
    laps_in: List[List[int]] = field(default_factory=list)
    boundary: Dict[int, List[int]] = field(default_factory=dict)
    gamma: Dict[int, List[int]] = field(default_factory=dict)
    levels: Optional[List[List[TreeNode]]] = None


def census(
    spec: SystemSpec,
    depth: int,
    intervals: Sequence[ClosedInterval] = (),
    keep_levels: bool = False,
    node_budget: Optional[int] = None,
) -> Census:
    """ell, ell restricted to each interval, ell'_{c_i} and gamma_{i,k}(R) in one pass."""
    turning = list(enumerate(spec.turning_points, 1))
    out = Census(depth)
    out.laps_in = [[] for _ in intervals]
    out.boundary = {i: [] for i, _ in turning}
    out.gamma = {i: [] for i, _ in turning}
    if keep_levels:
        out.levels = []
    for k, nodes in iter_levels(spec, depth, node_budget, track_pre_turning=True):
        out.laps.append(len(nodes))
        for slot, interval in enumerate(intervals):
            out.laps_in[slot].append(sum(1 for n in nodes if n.domain.interior_meets(interval)))
        for i, c in turning:
            out.boundary[i].append(
                sum(1 for n in nodes if not n.domain.is_full and c in (n.domain.lo, n.domain.hi))
            )
            out.gamma[i].append(sum(1 for n in nodes for j, _ in n.pre_turning if j == i))
        if keep_levels:
            out.levels.append(nodes)
    return out


def lap_counts(spec: SystemSpec, interval: ClosedInterval, depth: int) -> List[int]:
    """ell(1..depth | J)."""
    if depth < 1:
        raise InputError("depth must be at least 1")
    return census(spec, depth, [interval]).laps_in[0][1:]


@dataclass
class GrowthEstimate:
    nth_root: float
    last_ratio: float
    s_hat: float
    band: float


def estimate_growth(counts: Sequence[int]) -> GrowthEstimate:
    """
    Growth rate estimates from ell(1..m).

    s_hat is the geometric mean of the last ceil(m/4) ratios; ``band`` is the
    spread of their logarithms.
    """
    m = len(counts)
    if m == 0:
        raise InputError("no counts to estimate growth from")
    full = np.asarray([1] + list(counts), dtype=float)
    nth_root = float(full[-1] ** (1.0 / m)) if full[-1] > 0 else 0.0
    last_ratio = float(full[-1] / full[-2]) if full[-2] > 0 else 0.0
    window = math.ceil(m / 4)
    tail = full[-(window + 1):]
    if np.any(tail <= 0):
        return GrowthEstimate(nth_root, last_ratio, nth_root, 0.0)
    logs = np.log(tail[1:] / tail[:-1])
    return GrowthEstimate(nth_root, last_ratio, float(np.exp(np.mean(logs))), float(np.ptp(logs)))


def boundary_counts(spec: SystemSpec, depth: int) -> Tuple[Dict[int, List[int]], float]:
    """ell'_{c_i}(1..depth) per turning point, and the s0 estimate."""
    if depth < 1:
        raise InputError("depth must be at least 1")
    data = census(spec, depth)
    counts = {i: v[1:] for i, v in data.boundary.items()}
    return counts, _s0_hat(counts)


def _s0_hat(boundary: Dict[int, List[int]]) -> float:
    return max((estimate_growth(v).s_hat for v in boundary.values()), default=0.0)


@dataclass
class GrowthReport:
    name: str
    depth: int
    cap: int
    laps: List[int]
    boundary: Dict[int, List[int]]
    estimate: GrowthEstimate
    s0_hat: float
    gate_passed: bool
    entropy_lap: float
    determinant: Optional[TruncatedSeries] = None
    root: Optional[Fraction] = None
    entropy_root: Optional[float] = None
    discrepancy: Optional[float] = None
    warnings: List[str] = field(default_factory=list)

    @property
    def s_hat(self) -> float:
        return self.estimate.s_hat

    @property
    def entropy(self) -> float:
        """Root-based entropy when available, otherwise the lap-count one."""
        return self.entropy_root if self.entropy_root is not None else self.entropy_lap

    @property
    def s(self) -> float:
        return math.exp(self.entropy)

    def csv_rows(self) -> List[List]:
        indices = sorted(self.boundary)
        rows = [["level", "lap_count"] + [f"boundary_c{i}" for i in indices]]
        for k, lap in enumerate(self.laps, 1):
            rows.append([k, lap] + [self.boundary[i][k - 1] for i in indices])
        return rows

    def to_dict(self, decimal: Optional[int] = None) -> Dict:
        return {
            "system": self.name,
            "depth": self.depth,
            "cap": self.cap,
            "lap_counts": self.laps,
            "boundary_counts": {f"c{i}": v for i, v in self.boundary.items()},
            "s_hat": self.estimate.s_hat,
            "s_hat_nth_root": self.estimate.nth_root,
            "s_hat_last_ratio": self.estimate.last_ratio,
            "s_hat_band": self.estimate.band,
            "s0_hat": self.s0_hat,
            "root_method": "applicable" if self.gate_passed else "not-applicable",
            "entropy_lap": self.entropy_lap,
            "determinant": self.determinant.render(decimal) if self.determinant is not None else None,
            "root": str(self.root) if self.root is not None else None,
            "entropy_root": self.entropy_root,
            "discrepancy": self.discrepancy,
            "warnings": self.warnings,
        }


def root_gate(s_hat: float, s0_hat: float, depth: int) -> bool:
    """The determinant root is only meaningful when s0 is clearly below s."""
    return s_hat > 1 and s0_hat <= s_hat * (1 - 1 / depth)


def entropy_report(spec: SystemSpec, depth: int, cap: int, tol: Fraction) -> GrowthReport:
    """Lap-count entropy, and the determinant-root entropy when s0 < s."""
    if depth < 2:
        raise InputError("entropy needs depth at least 2")
    settings = get_settings()
    data = census(spec, depth)
    laps = data.laps[1:]
    boundary = {i: v[1:] for i, v in data.boundary.items()}
    estimate = estimate_growth(laps)
    s0 = _s0_hat(boundary)
    gate = root_gate(estimate.s_hat, s0, depth)
    entropy_lap = math.log(estimate.s_hat) if estimate.s_hat > 1 else 0.0
    report = GrowthReport(spec.name, depth, cap, laps, boundary, estimate, s0, gate, entropy_lap)
    logger.info("%s: s_hat=%.6f s0_hat=%.6f gate=%s", spec.name, estimate.s_hat, s0, gate)
    if not gate:
        report.warnings.append(
            f"root method not applicable: s0_hat={s0:.6f}, s_hat={estimate.s_hat:.6f}"
        )
        return report

    determinant = kneading_determinant(spec, cap)
    report.determinant = determinant
    hi = Fraction(1) if s0 <= 1 else min(Fraction(1), Fraction(1 / s0).limit_denominator(10**6))
    lo = min(Fraction(tol), hi / 2)
    root = smallest_root_in_unit_interval(determinant, lo, hi, tol, settings.root_scan_grid)
    if root is None:
        raise InconsistencyError(
            f"{spec.name}: no determinant root in ({lo}, {hi}) although s_hat={estimate.s_hat:.6f} > 1",
            data=report.to_dict(),
        )
    earlier = earlier_sign_change(determinant, root, settings.root_scan_grid)
    if earlier is not None:
        raise InconsistencyError(
            f"{spec.name}: determinant changes sign near {earlier}, below the bracketed root {root}",
            data=report.to_dict(),
        )
    report.root = root
    report.entropy_root = -math.log(float(root))
    report.discrepancy = abs(report.entropy_root - entropy_lap)
    expected = 1 / estimate.s_hat
    if float(root) < expected * (1 - 10 * estimate.band) - 0.05:
        report.warnings.append(
            f"determinant root {float(root):.6f} lies well below 1/s_hat={expected:.6f}"
        )
        logger.warning("%s: determinant root far below 1/s_hat", spec.name)
    logger.info("%s: root %s, entropy_root=%.6f, entropy_lap=%.6f", spec.name, root, report.entropy_root, entropy_lap)
    return report


def earlier_sign_change(determinant: TruncatedSeries, root: Fraction, grid: int) -> Optional[Fraction]:
    """
    Scan (0, root) in ``grid`` equal steps for a zero or a sign change of the determinant.

    Returns the first scan point at or past the change, or None when the sign
    is constant below ``root``.
    """
    step = Fraction(root) / grid
    prev = determinant.evaluate(Fraction(0))
    for k in range(1, grid):
        t = step * k
        value = determinant.evaluate(t)
        if value == 0 or (prev != 0 and (value > 0) != (prev > 0)):
            return t
        prev = value
    return None


def _cylinders(spec: SystemSpec, depth: int) -> List[int]:
    """Distinct padded prefixes of each length, grown by appending letters."""
    counts = [1]
    words = [Word(())]
    seen: Set[Tuple[int, ...]] = {()}
    for k in range(1, depth + 1):
        grown = []
        for word in words:
            for letter in range(1, spec.branch_count + 1):
                child = word.append(letter)
                if word_domain(spec, child).has_interior:
                    grown.append(child)
        # prefixes of length k: the new words, plus every shorter word padded with 0
        seen = {w + (0,) for w in seen} | {w.letters for w in grown}
        counts.append(len(seen))
        words = grown
    return counts[1:]


def cylinder_identity_check(spec: SystemSpec, depth: int) -> List[int]:
    """#cylinders of length k minus (ell(1) + ... + ell(k) + 1), for k = 1..depth."""
    laps = census(spec, depth).laps
    cylinders = _cylinders(spec, depth)
    return [cylinders[k - 1] - sum(laps[: k + 1]) for k in range(1, depth + 1)]


def l_recursion_check(spec: SystemSpec, interval: ClosedInterval, depth: int) -> List[int]:
    """ell(k+1|J) - sum_i ell(k|f_i(J)) for k = 0..depth-1."""
    images = [b.push_forward(interval) for b in spec.branches]
    data = census(spec, depth, [interval] + images)
    own, rest = data.laps_in[0], data.laps_in[1:]
    return [
        own[k + 1] - sum(counts[k] for counts, image in zip(rest, images) if not image.is_empty)
        for k in range(depth)
    ]


def L_gamma_identity_check(spec: SystemSpec, cap: int) -> TruncatedSeries:
    """L - 1/2 sum_i L'_{c_i} gamma_i mod t^cap."""
    if cap < 1:
        raise InputError("series cap must be at least 1")
    data = census(spec, cap)
    top = cap - 1
    laps = TruncatedSeries.from_coefficients(data.laps[1:], top)
    total = TruncatedSeries.zero(top)
    for i in data.boundary:
        boundary = TruncatedSeries.from_coefficients(data.boundary[i][1:], top)
        gamma = TruncatedSeries.from_coefficients(data.gamma[i], top)
        total = total + boundary * gamma
    return laps - total * Fraction(1, 2)


@dataclass
class TriCheck:
    depth: int
    triples: int
    boundary_pairs: int
    unmatched: int

    @property
    def residual(self) -> int:
        """Zero only for a bijection: equal sizes and nothing left unmatched."""
        return abs(self.triples - self.boundary_pairs) + self.unmatched

    def to_dict(self) -> Dict:
        return {
            "depth": self.depth,
            "triples": self.triples,
            "boundary_pairs": self.boundary_pairs,
            "unmatched": self.unmatched,
            "residual": self.residual,
        }


def tri_bijection_check(spec: SystemSpec, depth: int) -> TriCheck:
    """
    Match pre-turning triples against (word, boundary point) pairs at length ``depth``.

    A triple is a pre-turning pair (b, x) with f_b(x) = c_i together with a word g
    of length depth - |b| whose domain has c_i on its boundary; it maps to (bg, x).
    """
    if depth < 1:
        raise InputError("depth must be at least 1")
    data = census(spec, depth, keep_levels=True)
    levels = data.levels
    on_boundary: Dict[Tuple[int, int], List[Word]] = {}
    for k in range(1, depth + 1):
        for node in levels[k]:
            for end in (node.domain.lo, node.domain.hi):
                i = spec.turning_index(end)
                if i is not None:
                    on_boundary.setdefault((k, i), []).append(node.word)
    images = []
    for k in range(depth):
        for node in levels[k]:
            for i, x in node.pre_turning:
                for tail in on_boundary.get((depth - k, i), []):
                    images.append((node.word + tail, x))
    target = {(node.word, end) for node in levels[depth] for end in (node.domain.lo, node.domain.hi)}
    unmatched = len(set(images) ^ target) + (len(images) - len(set(images)))
    return TriCheck(depth, len(images), len(target), unmatched)


@dataclass
class PointGrowth:
    point: Fraction
    counts: List[int]
    slope: Optional[float]
    s_hat: float
    in_a_hat: bool

    def to_dict(self) -> Dict:
        return {
            "x": str(self.point),
            "interior_counts": self.counts,
            "tail_slope": self.slope,
            "s_hat": self.s_hat,
            "in_A_heuristic": self.in_a_hat,
        }


def point_growth(spec: SystemSpec, x: Fraction, depth: int, s_hat: Optional[float] = None) -> PointGrowth:
    """
    ell_x(1..depth) and a heuristic membership flag for the slow-growth set.

    The flag compares the fitted tail slope of log ell_x with log s_hat minus a
    fixed margin; it is advisory only.
    """
    counts = admissible_for_point(spec, SignedPoint(x), depth).interior_counts()
    if s_hat is None:
        s_hat = estimate_growth(census(spec, depth).laps[1:]).s_hat
    window = math.ceil(depth / 4) + 1
    tail = [(k, c) for k, c in enumerate(counts, 1)][-window:]
    if any(c == 0 for _, c in tail) or len(tail) < 2:
        slope = None if counts[-1] == 0 else 0.0
    else:
        ks = np.asarray([k for k, _ in tail], dtype=float)
        logs = np.log(np.asarray([c for _, c in tail], dtype=float))
        slope = float(np.polyfit(ks, logs, 1)[0])
    log_s = math.log(s_hat) if s_hat > 0 else float("-inf")
    in_a = slope is None or slope < log_s - A_MARGIN
    return PointGrowth(x, counts, slope, s_hat, in_a)
