"""
Itineraries, kneading data and finite-depth certificates built on them.

Every result here is a statement about words of bounded length and reports
the depth it was checked to.
"""

import logging
from bisect import bisect_left, insort
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

from kneadlab.config import get_settings
from kneadlab.errors import InputError, NodeBudgetExceeded, StructuralError
from kneadlab.models import Address, Side, SignedPoint, SystemSpec, Word
from kneadlab.system_service import address
from kneadlab.words import step, walk_point

logger = logging.getLogger(__name__)

MAX_COUNTEREXAMPLES = 5


@dataclass
class ItineraryTree:
    """Addresses of f_g(p) for every admissible S-word g with |g| <= depth."""
    base: SignedPoint
    depth: int
    entries: Dict[Word, Address] = field(default_factory=dict)

    def words(self) -> List[Word]:
        return sorted(self.entries, key=lambda w: w.sort_key)

    def to_dict(self) -> Dict:
        return {
            "base": self.base.render(),
            "depth": self.depth,
            "entries": {w.render(): self.entries[w].render() for w in self.words()},
        }


@dataclass
class KneadingData:
    depth: int
    trees: Tuple[ItineraryTree, ...]

    def tree(self, i: int) -> ItineraryTree:
        """Itinerary of c_i (1-based)."""
        return self.trees[i - 1]

    def to_dict(self) -> Dict:
        return {"depth": self.depth, "trees": [t.to_dict() for t in self.trees]}


def itinerary(spec: SystemSpec, point: SignedPoint, depth: int, node_budget: Optional[int] = None) -> ItineraryTree:
    if depth < 0:
        raise InputError("itinerary depth must be non-negative")
    tree = ItineraryTree(point, depth)
    for entry in walk_point(spec, point, depth, node_budget=node_budget):
        tree.entries[entry.word] = address(spec, entry.point)
    return tree


def kneading_data(spec: SystemSpec, depth: int, node_budget: Optional[int] = None) -> KneadingData:
    trees = tuple(
        itinerary(spec, SignedPoint(c, Side.EXACT), depth, node_budget)
        for c in spec.turning_points
    )
    return KneadingData(depth, trees)


def check_signature(spec_a: SystemSpec, spec_b: SystemSpec) -> None:
    """Branch count, orientations and combinatorial domain layout must match."""
    if spec_a.branch_count != spec_b.branch_count:
        raise StructuralError(
            f"branch count differs: {spec_a.branch_count} vs {spec_b.branch_count}"
        )
    if spec_a.orientations != spec_b.orientations:
        raise StructuralError(f"orientations differ: {spec_a.orientations} vs {spec_b.orientations}")
    if spec_a.turning_count != spec_b.turning_count:
        raise StructuralError("number of turning points differs")
    for k, (a, b) in enumerate(zip(spec_a.branches, spec_b.branches), 1):
        if spec_a.endpoint_indices(a) != spec_b.endpoint_indices(b):
            raise StructuralError(f"Dom(a{k}) sits on different turning points in the two systems")


@dataclass
class KneadingComparison:
    equal: bool
    depth: int
    turning_index: Optional[int] = None
    witness: Optional[Word] = None
    address_a: Optional[Address] = None
    address_b: Optional[Address] = None

    def describe(self) -> str:
        if self.equal:
            return f"kneading equal to depth {self.depth}"
        a = self.address_a.render() if self.address_a else "not admissible"
        b = self.address_b.render() if self.address_b else "not admissible"
        return (
            f"kneading differs at c{self.turning_index}, word {self.witness.render()}: "
            f"{a} vs {b}"
        )

    def to_dict(self) -> Dict:
        return {
            "equal": self.equal,
            "depth": self.depth,
            "turning_index": self.turning_index,
            "witness": self.witness.render() if self.witness else None,
            "address_a": self.address_a.render() if self.address_a else None,
            "address_b": self.address_b.render() if self.address_b else None,
        }


def compare_kneading(spec_a: SystemSpec, spec_b: SystemSpec, depth: int) -> KneadingComparison:
    """Shallowest disagreement between the kneading data of two systems."""
    check_signature(spec_a, spec_b)
    data_a, data_b = kneading_data(spec_a, depth), kneading_data(spec_b, depth)
    candidates = []
    for i, (ta, tb) in enumerate(zip(data_a.trees, data_b.trees), 1):
        for word in set(ta.entries) | set(tb.entries):
            a, b = ta.entries.get(word), tb.entries.get(word)
            if a != b:
                candidates.append(((len(word), i, word.sort_key), i, word, a, b))
    if not candidates:
        return KneadingComparison(True, depth)
    _, i, word, a, b = min(candidates, key=lambda c: c[0])
    return KneadingComparison(False, depth, i, word, a, b)


def _orientation_of(word: Word, orientations: Sequence[int]) -> int:
    sign = 1
    for letter in word.letters:
        sign *= orientations[abs(letter) - 1]
    return sign


def _compare_addresses(a: Address, b: Address) -> int:
    return (b.position > a.position) - (b.position < a.position)


def order_from_symbolic(
    tree_a: ItineraryTree, tree_b: ItineraryTree, orientations: Sequence[int]
) -> Optional[int]:
    """
    Recover sign(y - x) for the base points x, y of two itineraries.

    The first word (breadth-first) where the addresses differ decides, corrected
    by the orientation of f_w. Both images on the same turning point means
    x = y. Returns None when the trees agree to their common depth.
    """
    words = sorted(set(tree_a.entries) | set(tree_b.entries), key=lambda w: w.sort_key)
    for word in words:
        a, b = tree_a.entries.get(word), tree_b.entries.get(word)
        if a is None or b is None:
            # admissible on one side only: the parent's addresses must already differ
            parent = word.prefix(len(word) - 1)
            pa, pb = tree_a.entries.get(parent), tree_b.entries.get(parent)
            if pa is not None and pb is not None and pa != pb:
                return _orientation_of(parent, orientations) * _compare_addresses(pa, pb)
            continue
        if a.is_turning and a == b:
            return 0
        if a != b:
            return _orientation_of(word, orientations) * _compare_addresses(a, b)
    return None


def _point_orbit(
    spec: SystemSpec, seeds: Sequence[Fraction], depth: int, letters: Sequence[int], budget: int
) -> Set[Fraction]:
    """All values reachable from ``seeds`` by at most ``depth`` exact letter steps."""
    seen = set(seeds)
    frontier = list(seeds)
    for _ in range(depth):
        nxt = []
        for value in frontier:
            for letter in letters:
                moved = step(spec, letter, SignedPoint(value))
                if moved is not None and moved.value not in seen:
                    seen.add(moved.value)
                    nxt.append(moved.value)
        if len(seen) > budget:
            raise NodeBudgetExceeded(f"orbit exceeded {budget} points", partial=len(seen))
        frontier = nxt
    return seen


def separating_word(
    spec: SystemSpec, x: Fraction, y: Fraction, depth: int, negative: bool = False
) -> Optional[Word]:
    """
    Breadth-first search for a word separating x and y.

    A word separates when exactly one of the points is admissible for it, or
    both are and their images have different addresses.
    """
    letters = [-k for k in range(1, spec.branch_count + 1)] if negative else list(range(1, spec.branch_count + 1))
    frontier = [(Word(()), SignedPoint(x), SignedPoint(y))]
    for level in range(depth + 1):
        nxt = []
        for word, px, py in frontier:
            if address(spec, px) != address(spec, py):
                return word
            if level == depth:
                continue
            for letter in letters:
                qx, qy = step(spec, letter, px), step(spec, letter, py)
                if (qx is None) != (qy is None):
                    return word.append(letter)
                if qx is not None:
                    nxt.append((word.append(letter), qx, qy))
        frontier = nxt
    return None


@dataclass
class SeparabilityReport:
    depth: int
    orbit_depth: int
    future_points: int = 0
    future_pairs: int = 0
    future_failures: List[Dict] = field(default_factory=list)
    criterion_disagreements: List[Dict] = field(default_factory=list)
    past_points: int = 0
    past_pairs: int = 0
    past_sampled: bool = False
    past_failures: List[Dict] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def future_separation(self) -> bool:
        return not self.future_failures

    @property
    def past_separation(self) -> bool:
        return not self.past_failures

    def to_dict(self) -> Dict:
        return {
            "depth": self.depth,
            "orbit_depth": self.orbit_depth,
            "future_separation": "counterexample-free" if self.future_separation else "fails",
            "future_points": self.future_points,
            "future_pairs": self.future_pairs,
            "future_failures": self.future_failures,
            "criterion_disagreements": self.criterion_disagreements,
            "past_separation": "counterexample-free" if self.past_separation else "fails",
            "past_points": self.past_points,
            "past_pairs": self.past_pairs,
            "past_sampled": self.past_sampled,
            "past_failures": self.past_failures,
            "warnings": self.warnings,
        }


def _past_pairs(groups: Dict[int, List[Fraction]], budget: int) -> Tuple[List[Tuple[int, Fraction, int, Fraction]], bool]:
    """Nearest cross-generator neighbours plus a strided sample of all pairs."""
    pairs = []
    seen = set()
    keys = sorted(groups)

    def add(a, x, b, y):
        if x != y and (a, x, b, y) not in seen:
            seen.add((a, x, b, y))
            pairs.append((a, x, b, y))

    for ai, a in enumerate(keys):
        for b in keys[ai + 1:]:
            xs, ys = groups[a], groups[b]
            for x in xs:
                k = bisect_left(ys, x)
                for j in (k - 1, k, k + 1):
                    if 0 <= j < len(ys):
                        add(a, x, b, ys[j])
    total = sum(len(groups[a]) * len(groups[b]) for ai, a in enumerate(keys) for b in keys[ai + 1:])
    sampled = total > budget
    stride = max(1, -(-total // budget))
    for ai, a in enumerate(keys):
        for b in keys[ai + 1:]:
            xs, ys = groups[a], groups[b]
            for idx in range(0, len(xs) * len(ys), stride):
                add(a, xs[idx // len(ys)], b, ys[idx % len(ys)])
    return pairs, sampled


def check_separability(spec: SystemSpec, depth: int) -> SeparabilityReport:
    """Finite-depth certificates for future and past separation."""
    if depth < 1:
        raise InputError("separability depth must be at least 1")
    settings = get_settings()
    orbit_depth = settings.orbit_depth_for(depth)
    budget = settings.node_budget
    n = spec.branch_count
    report = SeparabilityReport(depth, orbit_depth)

    # future: consecutive points of the critical orbit under all of G
    all_letters = list(range(1, n + 1)) + [-k for k in range(1, n + 1)]
    orbit = sorted(_point_orbit(spec, spec.turning_points, orbit_depth, all_letters, budget))
    pullbacks = sorted(_point_orbit(spec, spec.turning_points, depth, [-k for k in range(1, n + 1)], budget))
    report.future_points = len(orbit)
    for x, y in zip(orbit, orbit[1:]):
        report.future_pairs += 1
        word = separating_word(spec, x, y, depth)
        k = bisect_left(pullbacks, x)
        by_pullback = k < len(pullbacks) and pullbacks[k] <= y
        if (word is not None) != by_pullback:
            report.criterion_disagreements.append(
                {"x": str(x), "y": str(y), "word": word.render() if word else None, "pullback_between": by_pullback}
            )
        if word is None and len(report.future_failures) < MAX_COUNTEREXAMPLES:
            report.future_failures.append({"x": str(x), "y": str(y)})
    if report.criterion_disagreements:
        logger.warning(
            "%s: %d pairs where word search and pullback criterion disagree",
            spec.name, len(report.criterion_disagreements),
        )

    # past: images of the backward critical orbit under each inverse generator
    backward = _point_orbit(spec, spec.turning_points, orbit_depth, [-k for k in range(1, n + 1)], budget)
    groups: Dict[int, List[Fraction]] = {}
    for k in range(1, n + 1):
        images = {q.value for q in (step(spec, -k, SignedPoint(v)) for v in backward) if q is not None}
        groups[k] = sorted(images)
    report.past_points = sum(len(v) for v in groups.values())
    pairs, report.past_sampled = _past_pairs(groups, settings.separation_pair_budget)
    if report.past_sampled:
        report.warnings.append("past separation checked on a deterministic sample of pairs")
        logger.warning("%s: past separation sampled (%d pairs)", spec.name, len(pairs))
    for a, x, b, y in pairs:
        report.past_pairs += 1
        if separating_word(spec, x, y, depth, negative=True) is None:
            report.past_failures.append(
                {"x": str(x), "y": str(y), "x_from": f"A{a}", "y_from": f"A{b}"}
            )
            if len(report.past_failures) >= MAX_COUNTEREXAMPLES:
                report.warnings.append(f"stopped after {MAX_COUNTEREXAMPLES} past counterexamples")
                break
    return report


@dataclass(frozen=True)
class OrbitLabel:
    turning_index: int
    word: Word

    def render(self) -> str:
        return f"f_{self.word.render()}(c{self.turning_index})"


@dataclass
class CombinatorialMapReport:
    depth: int
    success: bool = True
    points: int = 0
    violation: Optional[Dict] = None
    mapping: List[Tuple[str, str, str]] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "depth": self.depth,
            "success": self.success,
            "points": self.points,
            "violation": self.violation,
            "mapping": [{"label": l, "a": a, "b": b} for l, a, b in self.mapping],
        }


def _fail(report: CombinatorialMapReport, kind: str, first: OrbitLabel, second: Optional[OrbitLabel], **values) -> CombinatorialMapReport:
    report.success = False
    report.violation = {
        "kind": kind,
        "first": first.render(),
        "second": second.render() if second else None,
        **{k: str(v) for k, v in values.items()},
    }
    return report


def combinatorial_map(spec_a: SystemSpec, spec_b: SystemSpec, depth: int) -> CombinatorialMapReport:
    """
    Build phi(f_g(c)) = f~_g(c) on the depth-limited critical G-orbit and check it.

    Checks run level by level so the reported witness is as shallow as
    possible: domain agreement for every letter, well-definedness, injectivity
    and strict order preservation.
    """
    check_signature(spec_a, spec_b)
    comparison = compare_kneading(spec_a, spec_b, depth)
    report = CombinatorialMapReport(depth)
    if not comparison.equal:
        report.success = False
        report.violation = {"kind": "kneading", **comparison.to_dict()}
        return report

    n = spec_a.branch_count
    letters = list(range(1, n + 1)) + [-k for k in range(1, n + 1)]
    budget = get_settings().node_budget
    forward: Dict[Fraction, Tuple[Fraction, OrbitLabel]] = {}
    backward: Dict[Fraction, Tuple[Fraction, OrbitLabel]] = {}
    order_a: List[Fraction] = []

    level = [
        (ca, cb, OrbitLabel(i, Word(())))
        for i, (ca, cb) in enumerate(zip(spec_a.turning_points, spec_b.turning_points), 1)
    ]
    for k in range(depth + 1):
        fresh = []
        for xa, xb, label in level:
            if xa in forward:
                known_b, known = forward[xa]
                if known_b != xb:
                    return _fail(report, "not well-defined", known, label, a=xa, b_first=known_b, b_second=xb)
                continue
            if xb in backward:
                _, known = backward[xb]
                return _fail(report, "not injective", known, label, b=xb)
            pos = bisect_left(order_a, xa)
            for j in (pos - 1, pos):
                if 0 <= j < len(order_a):
                    qa = order_a[j]
                    qb, qlabel = forward[qa]
                    if (qa < xa) != (qb < xb):
                        return _fail(report, "order", qlabel, label, a_first=qa, a_second=xa, b_first=qb, b_second=xb)
            insort(order_a, xa)
            forward[xa] = (xb, label)
            backward[xb] = (xa, label)
            report.mapping.append((label.render(), str(xa), str(xb)))
            fresh.append((xa, xb, label))
        if len(forward) > budget:
            raise NodeBudgetExceeded(f"critical orbit exceeded {budget} points", partial=report)
        if k == depth:
            break
        level = []
        for xa, xb, label in fresh:
            last = label.word.letters[-1] if label.word.letters else 0
            for letter in letters:
                if letter == -last:
                    continue
                qa = step(spec_a, letter, SignedPoint(xa))
                qb = step(spec_b, letter, SignedPoint(xb))
                word = label.word.append(letter)
                if (qa is None) != (qb is None):
                    return _fail(
                        report, "domain", label, OrbitLabel(label.turning_index, word),
                        letter=Word((letter,)).render(),
                    )
                if qa is not None:
                    level.append((qa.value, qb.value, OrbitLabel(label.turning_index, word)))
    report.points = len(forward)
    logger.info("combinatorial map on %d orbit points, depth %d", report.points, depth)
    return report
