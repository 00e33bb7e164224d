"""
Data models: signed points, branches, systems of partial monotone maps and words.

Models validate themselves on construction and raise InputError subclasses
for bad domains or shapes.
"""

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from functools import cached_property
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

from kneadlab.errors import ConfigError, DomainError, InputError, RangeError
from kneadlab.numeric import ClosedInterval


class Side(Enum):
    MINUS = -1
    EXACT = 0
    PLUS = 1

    def times(self, orientation: int) -> "Side":
        """Side after a branch with the given orientation."""
        return Side(self.value * orientation)

    @property
    def label(self) -> str:
        return {Side.MINUS: "-", Side.EXACT: "", Side.PLUS: "+"}[self]


@dataclass(frozen=True)
class SignedPoint:
    """A rational point carrying a one-sided limit tag."""
    value: Fraction
    side: Side = Side.EXACT

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))

    def render(self) -> str:
        return f"{self.value}{self.side.label}"


class AddressKind(Enum):
    CELL = "cell"
    TURNING = "turning"


@dataclass(frozen=True)
class Address:
    """Either a partition cell P_j or an exact hit on turning point c_i."""
    kind: AddressKind
    index: int

    @classmethod
    def cell(cls, j: int) -> "Address":
        return cls(AddressKind.CELL, j)

    @classmethod
    def turning(cls, i: int) -> "Address":
        return cls(AddressKind.TURNING, i)

    @property
    def is_turning(self) -> bool:
        return self.kind is AddressKind.TURNING

    @property
    def position(self) -> int:
        """Rank along the line: P_0 < c_1 < P_1 < c_2 < ..."""
        if self.kind is AddressKind.CELL:
            return 2 * self.index
        return 2 * self.index - 1

    def render(self) -> str:
        return f"P{self.index}" if self.kind is AddressKind.CELL else f"c{self.index}"


@dataclass(frozen=True)
class AffineShape:
    slope: Fraction
    intercept: Fraction

    def __post_init__(self):
        if self.slope == 0:
            raise ConfigError("affine branch slope must be nonzero")


@dataclass(frozen=True)
class TableShape:
    """Piecewise-linear interpolation through strictly monotone samples."""
    points: Tuple[Tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        if len(self.points) < 2:
            raise ConfigError("a table branch needs at least two sample points")
        xs = [x for x, _ in self.points]
        ys = [y for _, y in self.points]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ConfigError("table x values must be strictly increasing")
        increasing = all(b > a for a, b in zip(ys, ys[1:]))
        decreasing = all(b < a for a, b in zip(ys, ys[1:]))
        if not (increasing or decreasing):
            raise ConfigError("table y values must be strictly monotone")

    @property
    def xs(self) -> List[Fraction]:
        return [x for x, _ in self.points]

    @property
    def ys(self) -> List[Fraction]:
        return [y for _, y in self.points]


@dataclass(frozen=True)
class Branch:
    """A strictly monotone map f_i on a closed interval."""
    domain: ClosedInterval
    shape: Union[AffineShape, TableShape]
    label: str = ""

    def __post_init__(self):
        if self.domain.is_empty or self.domain.is_full:
            raise ConfigError("branch domain must be a bounded interval")
        if isinstance(self.shape, TableShape):
            xs = self.shape.xs
            if xs[0] != self.domain.lo or xs[-1] != self.domain.hi:
                raise ConfigError(
                    f"table samples span [{xs[0]}, {xs[-1]}] but domain is {self.domain.render()}"
                )

    @cached_property
    def orientation(self) -> int:
        if isinstance(self.shape, AffineShape):
            return 1 if self.shape.slope > 0 else -1
        ys = self.shape.ys
        return 1 if ys[-1] > ys[0] else -1

    @cached_property
    def image(self) -> ClosedInterval:
        a, b = self.evaluate(self.domain.lo), self.evaluate(self.domain.hi)
        return ClosedInterval(min(a, b), max(a, b))

    @property
    def is_degenerate(self) -> bool:
        return self.domain.lo == self.domain.hi

    def evaluate(self, x: Fraction) -> Fraction:
        if not self.domain.contains(x):
            raise DomainError(f"{x} is outside the branch domain {self.domain.render()}")
        if isinstance(self.shape, AffineShape):
            return self.shape.slope * x + self.shape.intercept
        xs, ys = self.shape.xs, self.shape.ys
        k = bisect_left(xs, x)
        if xs[k] == x:
            return ys[k]
        x0, x1, y0, y1 = xs[k - 1], xs[k], ys[k - 1], ys[k]
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0)

    def invert(self, y: Fraction) -> Fraction:
        if not self.image.contains(y):
            raise RangeError(f"{y} is outside the branch image {self.image.render()}")
        if isinstance(self.shape, AffineShape):
            if self.is_degenerate:
                return self.domain.lo
            return (y - self.shape.intercept) / self.shape.slope
        xs, ys = self.shape.xs, self.shape.ys
        if self.orientation < 0:
            xs, ys = xs[::-1], ys[::-1]
        k = bisect_left(ys, y)
        if ys[k] == y:
            return xs[k]
        x0, x1, y0, y1 = xs[k - 1], xs[k], ys[k - 1], ys[k]
        return x0 + (x1 - x0) * (y - y0) / (y1 - y0)

    def pullback(self, target: ClosedInterval) -> ClosedInterval:
        """Dom(f) intersected with the preimage of ``target``."""
        if target.is_full:
            return self.domain
        overlap = self.image.intersect(target)
        if overlap.is_empty:
            return ClosedInterval.empty()
        a, b = self.invert(overlap.lo), self.invert(overlap.hi)
        return ClosedInterval(min(a, b), max(a, b))

    def push_forward(self, source: ClosedInterval) -> ClosedInterval:
        """Image of ``source`` intersected with the domain."""
        part = self.domain.intersect(source)
        if part.is_empty:
            return part
        a, b = self.evaluate(part.lo), self.evaluate(part.hi)
        return ClosedInterval(min(a, b), max(a, b))

    def to_dict(self) -> Dict:
        data: Dict = {"domain": self.domain.to_list()}
        if isinstance(self.shape, AffineShape):
            data["affine"] = {"slope": str(self.shape.slope), "intercept": str(self.shape.intercept)}
        else:
            data["table"] = [[str(x), str(y)] for x, y in self.shape.points]
        return data


@dataclass(frozen=True)
class SystemSpec:
    """A family of monotone branches with its turning-point partition."""
    branches: Tuple[Branch, ...]
    name: str = "system"
    degenerate: bool = False
    table_resolution: Optional[int] = None
    turning_points: Tuple[Fraction, ...] = field(init=False)

    def __post_init__(self):
        branches = tuple(self.branches)
        if not branches:
            raise ConfigError("a system needs at least one branch")
        if not self.degenerate and any(b.is_degenerate for b in branches):
            raise ConfigError("degenerate branch domain in a system not flagged degenerate")
        object.__setattr__(self, "branches", branches)
        endpoints = {b.domain.lo for b in branches} | {b.domain.hi for b in branches}
        object.__setattr__(self, "turning_points", tuple(sorted(endpoints)))

    @property
    def branch_count(self) -> int:
        return len(self.branches)

    @property
    def turning_count(self) -> int:
        """l + 1."""
        return len(self.turning_points)

    @property
    def cell_count(self) -> int:
        """l + 2 cells P_0 ... P_{l+1}."""
        return len(self.turning_points) + 1

    @property
    def orientations(self) -> Tuple[int, ...]:
        return tuple(b.orientation for b in self.branches)

    @property
    def hull(self) -> ClosedInterval:
        return ClosedInterval(self.turning_points[0], self.turning_points[-1])

    def turning_point(self, i: int) -> Fraction:
        """c_i, 1-based."""
        return self.turning_points[i - 1]

    def turning_index(self, x: Fraction) -> Optional[int]:
        k = bisect_left(self.turning_points, x)
        if k < len(self.turning_points) and self.turning_points[k] == x:
            return k + 1
        return None

    def cell_of(self, x: Fraction) -> int:
        """Index j of the cell with c_j < x < c_{j+1}; x must not be a turning point."""
        return bisect_right(self.turning_points, x)

    def cell_interval(self, j: int) -> Optional[ClosedInterval]:
        """Closure of a bounded cell P_j, None for the unbounded end cells."""
        if j <= 0 or j >= self.cell_count - 1:
            return None
        return ClosedInterval(self.turning_points[j - 1], self.turning_points[j])

    def branch(self, letter: int) -> Branch:
        index = abs(letter)
        if not 1 <= index <= len(self.branches):
            raise InputError(f"generator a{index} does not exist in {self.name}")
        return self.branches[index - 1]

    def endpoint_indices(self, branch: Branch) -> Tuple[int, int]:
        """Turning-point indices of a branch's domain endpoints."""
        return self.turning_index(branch.domain.lo), self.turning_index(branch.domain.hi)

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "degenerate": self.degenerate,
            "table_resolution": self.table_resolution,
            "turning_points": [str(c) for c in self.turning_points],
            "branches": [b.to_dict() for b in self.branches],
        }


def _reduce(letters) -> Tuple[int, ...]:
    stack: List[int] = []
    for letter in letters:
        if letter == 0:
            raise InputError("generator index 0 is not valid")
        if stack and stack[-1] == -letter:
            stack.pop()
        else:
            stack.append(letter)
    return tuple(stack)


@dataclass(frozen=True, order=True)
class Word:
    """Reduced word over a_1..a_n and their inverses (+i / -i)."""
    letters: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", _reduce(self.letters))

    @classmethod
    def parse(cls, text: str) -> "Word":
        text = text.strip()
        if text in ("", "e"):
            return cls(())
        letters = []
        for token in text.split("."):
            if len(token) < 2 or token[0] not in "aA" or not token[1:].isdigit():
                raise InputError(f"bad word letter {token!r} in {text!r}")
            index = int(token[1:])
            letters.append(index if token[0] == "a" else -index)
        return cls(tuple(letters))

    def __len__(self) -> int:
        return len(self.letters)

    def __add__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def append(self, letter: int) -> "Word":
        return Word(self.letters + (letter,))

    def prepend(self, letter: int) -> "Word":
        return Word((letter,) + self.letters)

    def inverse(self) -> "Word":
        return Word(tuple(-x for x in reversed(self.letters)))

    def prefix(self, k: int) -> "Word":
        return Word(self.letters[:k])

    @property
    def is_positive(self) -> bool:
        """In the semigroup S (the empty word included)."""
        return all(x > 0 for x in self.letters)

    @property
    def is_negative(self) -> bool:
        """In S^-1 (the empty word included)."""
        return all(x < 0 for x in self.letters)

    @property
    def classification(self) -> str:
        if not self.letters:
            return "empty"
        if self.is_positive:
            return "positive"
        if self.is_negative:
            return "negative"
        return "mixed"

    @property
    def sort_key(self) -> Tuple[int, Tuple[int, ...]]:
        """Canonical order: by length, then letter-wise with a1 < a2 < ... < A1 < A2."""
        return len(self.letters), tuple(x if x > 0 else 10**6 - x for x in self.letters)

    def render(self) -> str:
        if not self.letters:
            return "e"
        return ".".join(f"a{x}" if x > 0 else f"A{-x}" for x in self.letters)

    def __str__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class WordDomain:
    word: Word
    domain: ClosedInterval

    @property
    def has_interior(self) -> bool:
        return self.domain.has_interior

    def render(self, decimal: Optional[int] = None) -> str:
        return f"{self.word.render()}: {self.domain.render(decimal)}"


@dataclass(frozen=True)
class NotAdmissible:
    """Word application failed at letter ``failed_at`` (0-based)."""
    word: Word
    failed_at: int

    @property
    def prefix(self) -> Word:
        return self.word.prefix(self.failed_at)
