"""
Two increasing branches on [0, q] and [q, 1] with possibly overlapping images.

The entropy of such a system is read off the critical itineraries alpha
(orbit of q from the left) and beta (from the right): 1/s is the smallest
root in (0, 1) of sum (alpha_i - beta_i) t^i.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from kneadlab.errors import DegenerateSeriesError, InputError, ShapeError
from kneadlab.kneading_service import kneading_determinant, kneading_matrix
from kneadlab.models import AffineShape, Branch, SystemSpec
from kneadlab.numeric import ClosedInterval, TruncatedSeries, smallest_root_in_unit_interval

logger = logging.getLogger(__name__)


def overlap_shape(spec: SystemSpec) -> Tuple[Fraction, Branch, Branch]:
    """Validate the overlapping form and return (q, f_0, f_1)."""
    if spec.branch_count != 2:
        raise ShapeError(f"overlap systems have exactly two branches, {spec.name} has {spec.branch_count}")
    f0, f1 = spec.branches
    q = f0.domain.hi
    if f0.domain.lo != 0 or f1.domain.lo != q or f1.domain.hi != 1 or not 0 < q < 1:
        raise ShapeError("branch domains must be [0, q] and [q, 1] with 0 < q < 1")
    if f0.orientation < 0 or f1.orientation < 0:
        raise ShapeError("both overlap branches must be increasing")
    if not (0 <= f0.evaluate(Fraction(0)) < f0.evaluate(q) <= 1):
        raise ShapeError("need 0 <= f_0(0) < f_0(q) <= 1")
    if not (0 <= f1.evaluate(q) < f1.evaluate(Fraction(1)) <= 1):
        raise ShapeError("need 0 <= f_1(q) < f_1(1) <= 1")
    return q, f0, f1


@dataclass
class CriticalOrbit:
    """Symbols along the orbit of q; ``cycle`` is (start, period) once a point repeats."""
    symbols: List[int]
    points: List[Fraction]
    cycle: Optional[Tuple[int, int]] = None

    def to_dict(self) -> Dict:
        return {
            "symbols": self.symbols,
            "cycle": {"start": self.cycle[0], "period": self.cycle[1]} if self.cycle else None,
        }


def _critical_orbit(q: Fraction, f0: Branch, f1: Branch, length: int, tie: int) -> CriticalOrbit:
    x = q
    symbols, points = [], []
    seen: Dict[Fraction, int] = {}
    cycle = None
    for i in range(length + 1):
        symbol = tie if x == q else (0 if x < q else 1)
        if cycle is None and x in seen:
            cycle = (seen[x], i - seen[x])
        seen.setdefault(x, i)
        symbols.append(symbol)
        points.append(x)
        x = (f0 if symbol == 0 else f1).evaluate(x)
    return CriticalOrbit(symbols, points, cycle)


@dataclass
class OverlapItineraries:
    q: Fraction
    length: int
    alpha: CriticalOrbit
    beta: CriticalOrbit

    def difference(self) -> TruncatedSeries:
        return TruncatedSeries.from_coefficients(
            [a - b for a, b in zip(self.alpha.symbols, self.beta.symbols)], self.length
        )

    def to_dict(self) -> Dict:
        return {
            "q": str(self.q),
            "N": self.length,
            "alpha": self.alpha.to_dict(),
            "beta": self.beta.to_dict(),
        }


def overlap_itineraries(spec: SystemSpec, length: int) -> OverlapItineraries:
    """alpha_0..alpha_N and beta_0..beta_N; a landing on q reads 0 for alpha and 1 for beta."""
    if length < 1:
        raise InputError("itinerary length must be at least 1")
    q, f0, f1 = overlap_shape(spec)
    return OverlapItineraries(
        q, length, _critical_orbit(q, f0, f1, length, tie=0), _critical_orbit(q, f0, f1, length, tie=1)
    )


def _generating_function(orbit: CriticalOrbit, cap: int) -> Tuple[TruncatedSeries, TruncatedSeries]:
    """(P, Q) with sum symbols_i t^i = P / Q, Q = 1 - t^period; ``cap`` must cover both degrees."""
    start, period = orbit.cycle
    head = TruncatedSeries.from_coefficients(orbit.symbols[:start], cap)
    loop = TruncatedSeries.from_coefficients([0] * start + orbit.symbols[start:start + period], cap)
    denominator = TruncatedSeries.from_coefficients([1] + [0] * (period - 1) + [-1], cap)
    return head * denominator + loop, denominator


@dataclass
class ClosedForm:
    """sum (alpha_i - beta_i) t^i as numerator / denominator, held exactly below the cap."""
    alpha: Tuple[TruncatedSeries, TruncatedSeries]
    beta: Tuple[TruncatedSeries, TruncatedSeries]

    @classmethod
    def from_itineraries(cls, itineraries: OverlapItineraries) -> "ClosedForm":
        cap = sum(start + period for start, period in (itineraries.alpha.cycle, itineraries.beta.cycle))
        return cls(
            _generating_function(itineraries.alpha, cap), _generating_function(itineraries.beta, cap)
        )

    @property
    def numerator(self) -> TruncatedSeries:
        (pa, qa), (pb, qb) = self.alpha, self.beta
        numerator = pa * qb - pb * qa
        return numerator.with_cap(max(numerator.degree, 0))

    def alpha_sum(self, t: Fraction) -> Fraction:
        p, q = self.alpha
        return p.evaluate(t) / q.evaluate(t)


@dataclass
class OverlapModel:
    status: str
    length: int
    root: Optional[Fraction] = None
    root_truncated: Optional[Fraction] = None
    root_previous: Optional[Fraction] = None
    exact: bool = False
    s: Optional[Fraction] = None
    p: Optional[Fraction] = None
    p_truncated: Optional[Fraction] = None
    tail_bound: Optional[Fraction] = None
    model: Optional[SystemSpec] = None
    warnings: List[str] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.status == "found"

    def to_dict(self, decimal: Optional[int] = None) -> Dict:
        def text(q):
            if q is None:
                return None
            return str(q) if decimal is None else f"{float(q):.{decimal}f}"

        return {
            "status": self.status,
            "N": self.length,
            "r": text(self.root),
            "r_truncated": text(self.root_truncated),
            "r_exact": self.exact,
            "s": text(self.s),
            "p": text(self.p),
            "p_truncated": text(self.p_truncated),
            "p_tail_bound": text(self.tail_bound),
            "model": self.model.to_dict() if self.model else None,
            "warnings": self.warnings,
        }


def _truncated_root(series: TruncatedSeries, tol: Fraction) -> Optional[Fraction]:
    try:
        return smallest_root_in_unit_interval(series, tol, 1, tol)
    except DegenerateSeriesError:
        return None


def overlap_entropy_model(
    itineraries: OverlapItineraries, tol: Fraction, spec: Optional[SystemSpec] = None
) -> OverlapModel:
    """
    Smallest root r of sum (alpha_i - beta_i) t^i, s = 1/r, the breakpoint p and model U.

    When both orbits repeat a point the series is rational and its numerator is
    rooted instead; the truncated root is always reported alongside.
    """
    n = itineraries.length
    diff = itineraries.difference()
    out = OverlapModel("not_found", n)
    if diff.is_zero:
        out.warnings.append("alpha and beta agree to length N: zero entropy at this truncation")
        return out
    out.root_truncated = _truncated_root(diff, tol)
    out.root_previous = _truncated_root(diff.with_cap(n - 1), tol) if n > 1 else None
    if (
        out.root_truncated is not None
        and out.root_previous is not None
        and abs(out.root_truncated - out.root_previous) > tol
    ):
        out.warnings.append(f"truncated root not stable between N={n - 1} and N={n}")
        logger.warning("overlap root moves by more than %s between N=%d and N=%d", tol, n - 1, n)

    closed = None
    if itineraries.alpha.cycle and itineraries.beta.cycle:
        closed = ClosedForm.from_itineraries(itineraries)
        poly = closed.numerator
        if poly.is_zero:
            out.warnings.append("alpha and beta have equal generating functions")
            return out
        root = _truncated_root(poly, tol)
        if root is not None and root < 1:
            out.root = root
            out.exact = poly.evaluate(root) == 0
    if out.root is None:
        out.root = out.root_truncated
    if out.root is None or out.root >= 1:
        out.root = None
        out.warnings.append("no sign change in (0, 1): entropy not positive at this truncation")
        return out

    r = out.root
    out.status = "found"
    out.s = 1 / r
    alpha = itineraries.alpha.symbols
    out.p_truncated = (1 - r) * sum((Fraction(a) * r**i for i, a in enumerate(alpha)), Fraction(0))
    out.tail_bound = r ** (n + 1)
    out.p = (1 - r) * closed.alpha_sum(r) if closed is not None and out.exact else out.p_truncated
    if spec is not None:
        q, f0, f1 = overlap_shape(spec)
        if f0.evaluate(Fraction(0)) == 0 and f1.evaluate(Fraction(1)) == 1:
            out.model = overlap_affine_model(out.s, out.p, name=f"{spec.name}_model")
        else:
            out.warnings.append("model U needs f_0(0) = 0 and f_1(1) = 1")
    logger.info("overlap root r=%s (exact=%s), p=%s", r, out.exact, out.p)
    return out


def overlap_affine_model(s: Fraction, p: Fraction, name: str = "overlap_model") -> SystemSpec:
    """U_0(x) = s x on [0, p] and U_1(x) = s (x - 1) + 1 on [p, 1]."""
    return SystemSpec(
        branches=(
            Branch(ClosedInterval(Fraction(0), p), AffineShape(s, Fraction(0)), "U0"),
            Branch(ClosedInterval(p, Fraction(1)), AffineShape(s, 1 - s), "U1"),
        ),
        name=name,
    )


@dataclass
class OverlapDeterminantCheck:
    cap: int
    n21: TruncatedSeries
    expected: TruncatedSeries
    determinant: TruncatedSeries

    @property
    def n21_matches(self) -> bool:
        return self.n21 == self.expected

    @property
    def determinant_matches(self) -> bool:
        one_minus_t = TruncatedSeries.from_coefficients((1, -1), self.cap)
        return self.determinant == -self.n21 / one_minus_t

    def to_dict(self) -> Dict:
        return {
            "cap": self.cap,
            "N21": self.n21.render(),
            "alpha_minus_beta": self.expected.render(),
            "determinant": self.determinant.render(),
            "N21_matches": self.n21_matches,
            "determinant_matches": self.determinant_matches,
        }


def overlap_determinant_check(spec: SystemSpec, cap: int) -> OverlapDeterminantCheck:
    """Compare N_{2,1} with sum (alpha_i - beta_i) t^i and D with -N_{2,1}/(1 - t)."""
    itineraries = overlap_itineraries(spec, max(cap, 1))
    km = kneading_matrix(spec, cap)
    expected = itineraries.difference().with_cap(cap)
    return OverlapDeterminantCheck(cap, km.entry(2, 1), expected, kneading_determinant(spec, cap, matrix=km))
