"""
Exact numeric substrate.

Rationals are ``fractions.Fraction``. This module adds closed intervals with an
explicit empty/full tag, power series truncated mod t^(M+1), vectors of such
series (one per partition cell), a determinant over the truncated ring and an
exact sign-scan root search.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from kneadlab.errors import DegenerateSeriesError, InputError, StructuralError

logger = logging.getLogger(__name__)

Scalar = Union[Fraction, int]

# Largest denominator tried when snapping a bisection bracket to an exact root.
SNAP_DENOMINATORS = (10, 100, 1_000, 10_000, 1_000_000)


def parse_rational(value) -> Fraction:
    """Parse an exact number from a fraction/decimal string or an int."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool) or isinstance(value, float):
        raise InputError(f"expected an exact number string, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    text = str(value).strip().replace("−", "-")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"not an exact number: {value!r}") from exc


def format_rational(q: Scalar, decimal: Optional[int] = None) -> str:
    """Render ``q`` as a lowest-terms fraction string, or with ``decimal`` digits."""
    q = Fraction(q)
    if decimal is None:
        return str(q)
    scaled = round(q * 10**decimal)
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(decimal + 1, "0")
    if decimal == 0:
        return f"{sign}{digits}"
    return f"{sign}{digits[:-decimal]}.{digits[-decimal:]}"


class IntervalKind(Enum):
    BOUNDED = "bounded"
    EMPTY = "empty"
    FULL = "full"


@dataclass(frozen=True)
class ClosedInterval:
    """A closed interval [lo, hi]; ``kind`` tags the empty set and the full line."""
    lo: Fraction = Fraction(0)
    hi: Fraction = Fraction(0)
    kind: IntervalKind = IntervalKind.BOUNDED

    def __post_init__(self):
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))
        if self.kind is IntervalKind.BOUNDED and self.lo > self.hi:
            raise InputError(f"interval endpoints out of order: [{self.lo}, {self.hi}]")

    @classmethod
    def of(cls, lo, hi) -> "ClosedInterval":
        return cls(parse_rational(lo), parse_rational(hi))

    @classmethod
    def empty(cls) -> "ClosedInterval":
        return cls(kind=IntervalKind.EMPTY)

    @classmethod
    def full_line(cls) -> "ClosedInterval":
        return cls(kind=IntervalKind.FULL)

    @classmethod
    def point(cls, x) -> "ClosedInterval":
        x = parse_rational(x)
        return cls(x, x)

    @property
    def is_empty(self) -> bool:
        return self.kind is IntervalKind.EMPTY

    @property
    def is_full(self) -> bool:
        return self.kind is IntervalKind.FULL

    @property
    def has_interior(self) -> bool:
        if self.kind is IntervalKind.BOUNDED:
            return self.lo < self.hi
        return self.is_full

    @property
    def length(self) -> Fraction:
        if self.kind is not IntervalKind.BOUNDED:
            raise InputError("length is only defined for bounded intervals")
        return self.hi - self.lo

    def contains(self, x: Scalar) -> bool:
        if self.kind is IntervalKind.BOUNDED:
            return self.lo <= x <= self.hi
        return self.is_full

    def interior_contains(self, x: Scalar) -> bool:
        if self.kind is IntervalKind.BOUNDED:
            return self.lo < x < self.hi
        return self.is_full

    def intersect(self, other: "ClosedInterval") -> "ClosedInterval":
        if self.is_empty or other.is_empty:
            return ClosedInterval.empty()
        if self.is_full:
            return other
        if other.is_full:
            return self
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            return ClosedInterval.empty()
        return ClosedInterval(lo, hi)

    def interior_meets(self, other: "ClosedInterval") -> bool:
        """True when the intersection has non-empty interior."""
        return self.intersect(other).has_interior

    def render(self, decimal: Optional[int] = None) -> str:
        if self.is_empty:
            return "empty"
        if self.is_full:
            return "(-inf, inf)"
        return f"[{format_rational(self.lo, decimal)}, {format_rational(self.hi, decimal)}]"

    def to_list(self) -> Optional[List[str]]:
        if self.kind is not IntervalKind.BOUNDED:
            return None
        return [str(self.lo), str(self.hi)]


@dataclass(frozen=True)
class TruncatedSeries:
    """Power series in t with rational coefficients, truncated mod t^(cap+1)."""
    cap: int
    coefficients: Tuple[Fraction, ...]

    def __post_init__(self):
        if self.cap < 0:
            raise StructuralError("degree cap must be non-negative")
        coefficients = tuple(Fraction(c) for c in self.coefficients)
        if len(coefficients) != self.cap + 1:
            raise StructuralError(
                f"expected {self.cap + 1} coefficients, got {len(coefficients)}"
            )
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def from_coefficients(cls, coefficients: Iterable[Scalar], cap: int) -> "TruncatedSeries":
        """Build from any iterable, padding with zeros or truncating to ``cap``."""
        values = [Fraction(c) for c in coefficients][: cap + 1]
        values.extend([Fraction(0)] * (cap + 1 - len(values)))
        return cls(cap, tuple(values))

    @classmethod
    def zero(cls, cap: int) -> "TruncatedSeries":
        return cls.from_coefficients((), cap)

    @classmethod
    def constant(cls, value: Scalar, cap: int) -> "TruncatedSeries":
        return cls.from_coefficients((value,), cap)

    @classmethod
    def one(cls, cap: int) -> "TruncatedSeries":
        return cls.constant(1, cap)

    @classmethod
    def monomial(cls, degree: int, coefficient: Scalar, cap: int) -> "TruncatedSeries":
        values = [Fraction(0)] * (cap + 1)
        if 0 <= degree <= cap:
            values[degree] = Fraction(coefficient)
        return cls(cap, tuple(values))

    @classmethod
    def geometric(cls, ratio: Scalar, cap: int) -> "TruncatedSeries":
        """Expansion of 1/(1 - ratio*t)."""
        ratio = Fraction(ratio)
        return cls(cap, tuple(ratio**k for k in range(cap + 1)))

    def _check_cap(self, other: "TruncatedSeries") -> None:
        if self.cap != other.cap:
            raise StructuralError(f"degree cap mismatch: {self.cap} vs {other.cap}")

    def __getitem__(self, k: int) -> Fraction:
        return self.coefficients[k]

    def __len__(self) -> int:
        return self.cap + 1

    def __neg__(self) -> "TruncatedSeries":
        return TruncatedSeries(self.cap, tuple(-c for c in self.coefficients))

    def __add__(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            self._check_cap(other)
            return TruncatedSeries(
                self.cap, tuple(a + b for a, b in zip(self.coefficients, other.coefficients))
            )
        if isinstance(other, (int, Fraction)):
            return self + TruncatedSeries.constant(other, self.cap)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other) -> "TruncatedSeries":
        if isinstance(other, (TruncatedSeries, int, Fraction)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other) -> "TruncatedSeries":
        return (-self) + other

    def __mul__(self, other) -> "TruncatedSeries":
        if isinstance(other, (int, Fraction)):
            factor = Fraction(other)
            return TruncatedSeries(self.cap, tuple(c * factor for c in self.coefficients))
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        self._check_cap(other)
        a, b = self.coefficients, other.coefficients
        out = [Fraction(0)] * (self.cap + 1)
        for i, ai in enumerate(a):
            if ai == 0:
                continue
            for j in range(self.cap + 1 - i):
                if b[j]:
                    out[i + j] += ai * b[j]
        return TruncatedSeries(self.cap, tuple(out))

    __rmul__ = __mul__

    def inverse(self) -> "TruncatedSeries":
        """Multiplicative inverse mod t^(cap+1); needs a nonzero constant term."""
        a = self.coefficients
        if a[0] == 0:
            raise InputError("series with zero constant term has no inverse")
        inv0 = 1 / a[0]
        b = [inv0]
        for k in range(1, self.cap + 1):
            acc = sum((a[j] * b[k - j] for j in range(1, k + 1) if a[j]), Fraction(0))
            b.append(-inv0 * acc)
        return TruncatedSeries(self.cap, tuple(b))

    def __truediv__(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            return self * other.inverse()
        if isinstance(other, (int, Fraction)):
            return self * (1 / Fraction(other))
        return NotImplemented

    def evaluate(self, t):
        """Horner evaluation; exact when ``t`` is a Fraction."""
        acc = 0 * t
        for c in reversed(self.coefficients):
            acc = acc * t + c
        return acc

    @property
    def is_zero(self) -> bool:
        return not any(self.coefficients)

    @property
    def degree(self) -> int:
        """Index of the highest nonzero coefficient, -1 for the zero series."""
        for k in range(self.cap, -1, -1):
            if self.coefficients[k]:
                return k
        return -1

    def shift(self, k: int) -> "TruncatedSeries":
        """Multiply by t^k."""
        return TruncatedSeries.from_coefficients([0] * k + list(self.coefficients), self.cap)

    def with_cap(self, cap: int) -> "TruncatedSeries":
        return TruncatedSeries.from_coefficients(self.coefficients, cap)

    def to_strings(self) -> List[str]:
        return [str(c) for c in self.coefficients]

    def render(self, decimal: Optional[int] = None, variable: str = "t") -> str:
        """Human-readable polynomial text, e.g. ``1 - 2t + (1/2)t^2``."""
        parts = []
        for k, c in enumerate(self.coefficients):
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            magnitude = abs(c)
            text = format_rational(magnitude, decimal)
            if k > 0:
                if magnitude == 1:
                    text = ""
                elif magnitude.denominator != 1 or decimal is not None:
                    text = f"({text})"
                text += variable if k == 1 else f"{variable}^{k}"
            parts.append((sign, text))
        if not parts:
            return "0"
        first_sign, first_text = parts[0]
        out = ("-" if first_sign == "-" else "") + first_text
        for sign, text in parts[1:]:
            out += f" {sign} {text}"
        return out

    def __str__(self) -> str:
        return self.render()


def series_add(a: TruncatedSeries, b) -> TruncatedSeries:
    return a + b


def series_mul(a: TruncatedSeries, b) -> TruncatedSeries:
    return a * b


def series_scale(a: TruncatedSeries, factor: Scalar) -> TruncatedSeries:
    return a * Fraction(factor)


@dataclass(frozen=True)
class VectorSeries:
    """One truncated series per partition cell P_0 ... P_{l+1}."""
    cells: Tuple[TruncatedSeries, ...]

    def __post_init__(self):
        cells = tuple(self.cells)
        if not cells:
            raise StructuralError("a vector series needs at least one cell")
        caps = {cell.cap for cell in cells}
        if len(caps) != 1:
            raise StructuralError(f"cells disagree on degree cap: {sorted(caps)}")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def zero(cls, size: int, cap: int) -> "VectorSeries":
        return cls(tuple(TruncatedSeries.zero(cap) for _ in range(size)))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Scalar]], cap: int) -> "VectorSeries":
        return cls(tuple(TruncatedSeries.from_coefficients(row, cap) for row in rows))

    @property
    def cap(self) -> int:
        return self.cells[0].cap

    def __len__(self) -> int:
        return len(self.cells)

    def __getitem__(self, j: int) -> TruncatedSeries:
        return self.cells[j]

    def _check(self, other: "VectorSeries") -> None:
        if len(self) != len(other):
            raise StructuralError(f"cell count mismatch: {len(self)} vs {len(other)}")

    def __add__(self, other: "VectorSeries") -> "VectorSeries":
        self._check(other)
        return VectorSeries(tuple(a + b for a, b in zip(self.cells, other.cells)))

    def __neg__(self) -> "VectorSeries":
        return VectorSeries(tuple(-a for a in self.cells))

    def __sub__(self, other: "VectorSeries") -> "VectorSeries":
        return self + (-other)

    def scale(self, factor) -> "VectorSeries":
        """Multiply every cell by a scalar or by a series."""
        return VectorSeries(tuple(cell * factor for cell in self.cells))

    @property
    def is_zero(self) -> bool:
        return all(cell.is_zero for cell in self.cells)

    def coefficient_vector(self, k: int) -> Tuple[Fraction, ...]:
        return tuple(cell[k] for cell in self.cells)

    def compare(self, other: "VectorSeries") -> int:
        """Order degree by degree; within a degree the highest differing cell decides."""
        self._check(other)
        for k in range(min(self.cap, other.cap) + 1):
            for j in range(len(self) - 1, -1, -1):
                delta = self.cells[j][k] - other.cells[j][k]
                if delta:
                    return 1 if delta > 0 else -1
        return 0

    def __le__(self, other: "VectorSeries") -> bool:
        return self.compare(other) <= 0

    def __lt__(self, other: "VectorSeries") -> bool:
        return self.compare(other) < 0

    def to_strings(self) -> List[List[str]]:
        return [cell.to_strings() for cell in self.cells]


def _cofactor_det(rows: List[List[TruncatedSeries]], cap: int) -> TruncatedSeries:
    n = len(rows)
    if n == 0:
        return TruncatedSeries.one(cap)
    if n == 1:
        return rows[0][0]
    total = TruncatedSeries.zero(cap)
    for col, entry in enumerate(rows[0]):
        if entry.is_zero:
            continue
        minor = [row[:col] + row[col + 1:] for row in rows[1:]]
        term = entry * _cofactor_det(minor, cap)
        total = total - term if col % 2 else total + term
    return total


def _berkowitz_det(rows: List[List[TruncatedSeries]], cap: int) -> TruncatedSeries:
    """Division-free determinant via characteristic polynomials of leading minors."""
    n = len(rows)
    one, zero = TruncatedSeries.one(cap), TruncatedSeries.zero(cap)
    poly = [one]  # char poly of the 0x0 leading block, highest power first
    for k in range(n):
        a = rows[k][k]
        column = [rows[i][k] for i in range(k)]
        row = [rows[k][j] for j in range(k)]
        # Toeplitz column: 1, -a, -R C, -R A C, ..., -R A^(k-1) C
        toeplitz = [one, -a]
        vec = column
        for _ in range(k):
            toeplitz.append(-sum((r * v for r, v in zip(row, vec)), zero))
            vec = [
                sum((rows[i][j] * vec[j] for j in range(k)), zero) for i in range(k)
            ]
        poly = [
            sum((toeplitz[r - c] * poly[c] for c in range(len(poly)) if 0 <= r - c < len(toeplitz)), zero)
            for r in range(k + 2)
        ]
    det = poly[n]
    return det if n % 2 == 0 else -det


def series_det(matrix: Sequence[Sequence[TruncatedSeries]], cap: Optional[int] = None) -> TruncatedSeries:
    """Determinant mod t^(M+1): cofactor expansion up to 5x5, Berkowitz above."""
    rows = [list(row) for row in matrix]
    n = len(rows)
    if any(len(row) != n for row in rows):
        raise StructuralError("determinant needs a square matrix")
    caps = {entry.cap for row in rows for entry in row}
    if cap is not None:
        caps.add(cap)
    if not caps:
        raise StructuralError("an empty matrix needs an explicit degree cap")
    if len(caps) != 1:
        raise StructuralError(f"matrix entries disagree on degree cap: {sorted(caps)}")
    cap = caps.pop()
    if n <= 5:
        return _cofactor_det(rows, cap)
    return _berkowitz_det(rows, cap)


def _sign(value: Fraction) -> int:
    return (value > 0) - (value < 0)


def snap_to_exact_root(p: TruncatedSeries, lo: Fraction, hi: Fraction) -> Optional[Fraction]:
    """Small-denominator rational in [lo, hi] that is an exact zero of ``p``, if any."""
    middle = (lo + hi) / 2
    for bound in SNAP_DENOMINATORS:
        candidate = middle.limit_denominator(bound)
        if lo <= candidate <= hi and p.evaluate(candidate) == 0:
            return candidate
    return None


def _bisect(p: TruncatedSeries, a: Fraction, b: Fraction, sign_a: int, tol: Fraction) -> Fraction:
    while b - a > tol:
        mid = (a + b) / 2
        value = p.evaluate(mid)
        if value == 0:
            return mid
        if _sign(value) == sign_a:
            a = mid
        else:
            b = mid
    exact = snap_to_exact_root(p, a, b)
    return exact if exact is not None else (a + b) / 2


def smallest_root_in_unit_interval(
    p: TruncatedSeries,
    lo: Scalar,
    hi: Scalar,
    tol: Scalar,
    grid: int = 1024,
) -> Optional[Fraction]:
    """
    Smallest real root of the polynomial ``p`` in [lo, hi].

    Args:
        p: Truncated series read as a polynomial
        lo, hi: Search interval with 0 < lo < hi <= 1
        tol: Bracket width for bisection
        grid: Number of equal scan steps

    Returns:
        A rational within ``tol`` of the root, or None if the scan sees no sign change
    """
    lo, hi, tol = Fraction(lo), Fraction(hi), Fraction(tol)
    if not (0 < lo < hi <= 1):
        raise InputError(f"root search needs 0 < lo < hi <= 1, got [{lo}, {hi}]")
    if tol <= 0:
        raise InputError("root tolerance must be positive")
    if p.is_zero:
        raise DegenerateSeriesError("series is identically zero at this truncation")

    step = (hi - lo) / grid
    prev_t = lo
    prev_v = p.evaluate(lo)
    if prev_v == 0:
        return lo
    for k in range(1, grid + 1):
        t = lo + step * k
        value = p.evaluate(t)
        if value == 0:
            return t
        if _sign(value) != _sign(prev_v):
            root = _bisect(p, prev_t, t, _sign(prev_v), tol)
            logger.debug("root bracketed in [%s, %s] -> %s", prev_t, t, root)
            return root
        prev_t, prev_v = t, value
    logger.info("no sign change on %d-step grid over [%s, %s]", grid, lo, hi)
    return None
