"""
Invariant coordinates, kneading increments, the kneading matrix and determinant.

All series are exact and truncated mod t^(M+1). The ``verify_*`` functions
return residuals that are identically zero for a correct implementation; they
never compare against a tolerance.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from kneadlab.errors import InconsistencyError, InputError, PreconditionError, StructuralError
from kneadlab.models import Side, SignedPoint, SystemSpec, Word
from kneadlab.numeric import ClosedInterval, TruncatedSeries, VectorSeries, series_det
from kneadlab.system_service import address, sigma
from kneadlab.words import iter_levels, walk_point

logger = logging.getLogger(__name__)

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class ThetaSeries:
    """theta(p) as one truncated series per cell P_0 .. P_{l+1}."""
    base: SignedPoint
    cap: int
    value: VectorSeries

    def component(self, j: int) -> TruncatedSeries:
        return self.value[j]

    def to_dict(self) -> Dict:
        return {"base": self.base.render(), "cap": self.cap, "cells": self.value.to_strings()}


def _address_vector(spec: SystemSpec, point: SignedPoint) -> Dict[int, Fraction]:
    """D(x) as sparse cell coordinates; an exact turning hit splits between two cells."""
    where = address(spec, point)
    if where.is_turning:
        return {where.index - 1: HALF, where.index: HALF}
    return {where.index: Fraction(1)}


def theta(spec: SystemSpec, point: SignedPoint, cap: int, node_budget: Optional[int] = None) -> ThetaSeries:
    if cap < 0:
        raise InputError("series cap must be non-negative")
    rows = [[Fraction(0)] * (cap + 1) for _ in range(spec.cell_count)]
    for entry in walk_point(spec, point, cap, interior_only=True, node_budget=node_budget):
        sign = sigma(spec, entry.word)
        degree = len(entry.word)
        for j, weight in _address_vector(spec, entry.point).items():
            rows[j][degree] += sign * weight
    return ThetaSeries(point, cap, VectorSeries.from_rows(rows, cap))


def e_polynomials(spec: SystemSpec, cap: int) -> Tuple[TruncatedSeries, ...]:
    """e_j = 1 - sum of sigma(f_a) t over the generators whose domain covers P_j."""
    out = []
    for j in range(spec.cell_count):
        cell = spec.cell_interval(j)
        linear = Fraction(0)
        if cell is not None:
            for branch in spec.branches:
                if branch.domain.contains(cell.lo) and branch.domain.contains(cell.hi):
                    linear -= branch.orientation
        out.append(TruncatedSeries.from_coefficients((1, linear), cap))
    return tuple(out)


@dataclass(frozen=True)
class PreTurningRecord:
    """f_word(x) = c_i exactly, and no shorter prefix of word hits a turning point."""
    word: Word
    point: Fraction
    turning_index: int

    def to_dict(self) -> Dict:
        return {"word": self.word.render(), "x": str(self.point), "c": self.turning_index}


@dataclass
class PreTurningData:
    interval: ClosedInterval
    depth: int
    records: List[PreTurningRecord] = field(default_factory=list)
    counts: Dict[int, List[int]] = field(default_factory=dict)

    def series(self, i: int, cap: int) -> TruncatedSeries:
        """gamma_i(J) truncated at ``cap`` (must not exceed the enumerated depth)."""
        if cap > self.depth:
            raise StructuralError(f"gamma series enumerated to degree {self.depth}, asked for {cap}")
        return TruncatedSeries.from_coefficients(self.counts[i], cap)

    def to_dict(self) -> Dict:
        return {
            "interval": self.interval.render(),
            "depth": self.depth,
            "counts": {f"c{i}": v for i, v in self.counts.items()},
            "records": [r.to_dict() for r in self.records],
        }


def pre_turning_pairs(
    spec: SystemSpec, interval: ClosedInterval, depth: int, node_budget: Optional[int] = None
) -> PreTurningData:
    """Pre-turning pairs (g, x) with x in ``interval`` and |g| <= depth, counted per turning point."""
    if depth < 0:
        raise InputError("pre-turning depth must be non-negative")
    data = PreTurningData(interval, depth)
    data.counts = {i: [0] * (depth + 1) for i in range(1, spec.turning_count + 1)}
    for k, nodes in iter_levels(spec, depth, node_budget, track_pre_turning=True):
        for node in nodes:
            for i, x in node.pre_turning:
                if interval.contains(x):
                    data.records.append(PreTurningRecord(node.word, x, i))
                    data.counts[i][k] += 1
    return data


def find_pre_turning(spec: SystemSpec, x: Fraction, depth: int) -> Optional[PreTurningRecord]:
    """The shortest pre-turning pair at x of order <= depth, if any."""
    for entry in walk_point(spec, SignedPoint(x), depth, interior_only=True):
        i = spec.turning_index(entry.point.value)
        if i is not None:
            return PreTurningRecord(entry.word, x, i)
    return None


def verify_ld_identity(spec: SystemSpec, x: Fraction, cap: int) -> TruncatedSeries:
    """sum_j theta_j(x) e_j - 1 for a point that is not pre-turning to order ``cap``."""
    witness = find_pre_turning(spec, x, cap)
    if witness is not None:
        raise PreconditionError(
            f"{x} is pre-turning: f_{witness.word.render()}({x}) = c{witness.turning_index}",
            witness=witness,
        )
    value = theta(spec, SignedPoint(x), cap).value
    es = e_polynomials(spec, cap)
    total = TruncatedSeries.zero(cap)
    for j, e in enumerate(es):
        total = total + value[j] * e
    return total - 1


def kneading_increments(spec: SystemSpec, cap: int, node_budget: Optional[int] = None) -> Tuple[VectorSeries, ...]:
    """theta(c_i+) - theta(c_i-) for every turning point."""
    return tuple(
        theta(spec, SignedPoint(c, Side.PLUS), cap, node_budget).value
        - theta(spec, SignedPoint(c, Side.MINUS), cap, node_budget).value
        for c in spec.turning_points
    )


@dataclass(frozen=True)
class KneadingMatrix:
    """Rows are the increments (i = 1..l+1), columns the cells (j = 0..l+1)."""
    cap: int
    rows: Tuple[VectorSeries, ...]
    e: Tuple[TruncatedSeries, ...]

    def __post_init__(self):
        widths = {len(row) for row in self.rows}
        if widths and widths != {len(self.e)}:
            raise StructuralError("kneading matrix rows and e polynomials disagree on width")

    @property
    def row_count(self) -> int:
        return len(self.rows)

    @property
    def column_count(self) -> int:
        return len(self.e)

    def entry(self, i: int, j: int) -> TruncatedSeries:
        """N_{i,j} with i 1-based and j 0-based."""
        return self.rows[i - 1][j]

    def column(self, j: int) -> List[TruncatedSeries]:
        return [row[j] for row in self.rows]

    def without_column(self, j: int) -> List[List[TruncatedSeries]]:
        return [[row[k] for k in range(self.column_count) if k != j] for row in self.rows]

    def render_rows(self, decimal: Optional[int] = None) -> List[List[str]]:
        return [[row[j].render(decimal) for j in range(self.column_count)] for row in self.rows]

    def to_dict(self) -> Dict:
        return {
            "cap": self.cap,
            "rows": [row.to_strings() for row in self.rows],
            "rendered": self.render_rows(),
            "e": [e.render() for e in self.e],
        }


def kneading_matrix(spec: SystemSpec, cap: int, node_budget: Optional[int] = None) -> KneadingMatrix:
    km = KneadingMatrix(cap, kneading_increments(spec, cap, node_budget), e_polynomials(spec, cap))
    logger.info("%s: kneading matrix %dx%d at cap %d", spec.name, km.row_count, km.column_count, cap)
    return km


def determinant_from_matrix(km: KneadingMatrix, delete_column: int) -> TruncatedSeries:
    """(-1)^i D_i / e_i for the deleted column i."""
    if not 0 <= delete_column < km.column_count:
        raise InputError(f"column {delete_column} is out of range 0..{km.column_count - 1}")
    minor = series_det(km.without_column(delete_column), km.cap)
    sign = -1 if delete_column % 2 else 1
    return (minor * sign) / km.e[delete_column]


def column_determinants(km: KneadingMatrix) -> List[TruncatedSeries]:
    return [determinant_from_matrix(km, j) for j in range(km.column_count)]


def kneading_determinant(
    spec: SystemSpec, cap: int, delete_column: Optional[int] = None, matrix: Optional[KneadingMatrix] = None
) -> TruncatedSeries:
    """
    Kneading determinant mod t^(cap+1).

    With no column given every column is deleted in turn and the results must
    coincide; a disagreement is raised as an InconsistencyError.
    """
    km = matrix or kneading_matrix(spec, cap)
    if delete_column is not None:
        return determinant_from_matrix(km, delete_column)
    values = column_determinants(km)
    first = values[0]
    for j, value in enumerate(values[1:], 1):
        if value != first:
            raise InconsistencyError(
                f"determinant depends on the deleted column: column 0 gives {first}, column {j} gives {value}",
                data={"columns": [v.to_strings() for v in values]},
            )
    return first


def verify_column_relation(km: KneadingMatrix) -> VectorSeries:
    """sum_j e_j Gamma_j, one entry per row."""
    out = []
    for row in km.rows:
        total = TruncatedSeries.zero(km.cap)
        for j, e in enumerate(km.e):
            total = total + row[j] * e
        out.append(total)
    if not out:
        return VectorSeries.zero(1, km.cap)
    return VectorSeries(tuple(out))


def verify_increment_jump(
    spec: SystemSpec, a: Fraction, b: Fraction, cap: int, node_budget: Optional[int] = None
) -> VectorSeries:
    """theta(b+) - theta(a-) - sum_i vartheta_i gamma_i([a, b])."""
    if not a < b:
        raise InputError(f"jump identity needs a < b, got [{a}, {b}]")
    left = (
        theta(spec, SignedPoint(b, Side.PLUS), cap, node_budget).value
        - theta(spec, SignedPoint(a, Side.MINUS), cap, node_budget).value
    )
    gammas = pre_turning_pairs(spec, ClosedInterval(a, b), cap, node_budget)
    right = VectorSeries.zero(spec.cell_count, cap)
    for i, increment in enumerate(kneading_increments(spec, cap, node_budget), 1):
        right = right + increment.scale(gammas.series(i, cap))
    return left - right


@dataclass
class StabilityResult:
    point: Fraction
    depth: int
    delta: Fraction
    agree: bool
    first_difference: Optional[int] = None

    def to_dict(self) -> Dict:
        return {
            "x": str(self.point),
            "depth": self.depth,
            "delta": str(self.delta),
            "agree": self.agree,
            "first_difference": self.first_difference,
        }


def one_sided_stability(spec: SystemSpec, x: Fraction, depth: int) -> StabilityResult:
    """
    Compare theta(x+) with theta(x + delta) up to degree ``depth``.

    delta is half the gap from x to the next pre-turning point of order at
    most ``depth`` (or 1 when there is none to the right).
    """
    points = sorted(
        {r.point for r in pre_turning_pairs(spec, ClosedInterval.full_line(), depth).records if r.point > x}
    )
    delta = (points[0] - x) / 2 if points else Fraction(1)
    plus = theta(spec, SignedPoint(x, Side.PLUS), depth).value
    near = theta(spec, SignedPoint(x + delta), depth).value
    diff = plus - near
    first = next((k for k in range(depth + 1) if any(diff.coefficient_vector(k))), None)
    return StabilityResult(x, depth, delta, first is None, first)


def increment_rows_text(km: KneadingMatrix, decimal: Optional[int] = None) -> List[str]:
    """One line per increment, e.g. ``(-1 + 2t)P0 + P1``."""
    lines = []
    for row in km.rows:
        terms = []
        for j in range(km.column_count):
            if row[j].is_zero:
                continue
            text = row[j].render(decimal)
            terms.append(f"P{j}" if text == "1" else f"-P{j}" if text == "-1" else f"({text})P{j}")
        lines.append(" + ".join(terms) if terms else "0")
    return lines