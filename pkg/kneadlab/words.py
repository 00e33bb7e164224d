"""
Word machinery: Dom(f_w), pointwise application and admissible-word enumeration.

Semigroup words are enumerated breadth-first by *prepending* letters, using
Dom(f_{a w}) = Dom(f_a) ∩ f_a^-1(Dom(f_w)), so every child costs one interval
pullback. Words whose domain has empty interior are pruned: every extension
on either side has a smaller domain.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, List, Optional, Tuple, Union

from kneadlab.config import get_settings
from kneadlab.errors import InputError, NodeBudgetExceeded
from kneadlab.models import NotAdmissible, Side, SignedPoint, SystemSpec, Word, WordDomain
from kneadlab.numeric import ClosedInterval

logger = logging.getLogger(__name__)


def word_domain(spec: SystemSpec, word: Word) -> WordDomain:
    """Exact Dom(f_w) for w in S or S^-1."""
    domain = ClosedInterval.full_line()
    if word.is_positive:
        for letter in reversed(word.letters):
            domain = spec.branch(letter).pullback(domain)
    elif word.is_negative:
        for letter in reversed(word.letters):
            domain = spec.branch(letter).push_forward(domain)
    else:
        raise InputError(f"{word.render()} is mixed; use apply_word point-wise")
    return WordDomain(word, domain)


def _applicable(interval: ClosedInterval, point: SignedPoint) -> bool:
    v = point.value
    if point.side is Side.EXACT:
        return interval.lo <= v <= interval.hi
    if point.side is Side.PLUS:
        return interval.lo <= v < interval.hi
    return interval.lo < v <= interval.hi


def step(spec: SystemSpec, letter: int, point: SignedPoint) -> Optional[SignedPoint]:
    """Apply one generator (or inverse) to a signed point; None if not applicable."""
    branch = spec.branch(letter)
    if letter > 0:
        if not _applicable(branch.domain, point):
            return None
        value = branch.evaluate(point.value)
    else:
        if not _applicable(branch.image, point):
            return None
        value = branch.invert(point.value)
    return SignedPoint(value, point.side.times(branch.orientation))


def apply_word(spec: SystemSpec, word: Word, point: SignedPoint) -> Union[SignedPoint, NotAdmissible]:
    """Apply letters left to right: f_{gh} = f_h o f_g."""
    current = point
    for k, letter in enumerate(word.letters):
        current = step(spec, letter, current)
        if current is None:
            return NotAdmissible(word, k)
    return current


@dataclass
class TreeNode:
    """An interior-admissible semigroup word with its domain.

    ``pre_turning`` lists (turning index i, x) with f_w(x) = c_i reached
    without an earlier turning hit; filled only when tracking is requested.
    """
    word: Word
    domain: ClosedInterval
    pre_turning: Tuple[Tuple[int, Fraction], ...] = ()


def _children(spec: SystemSpec, node: TreeNode, track: bool) -> List[TreeNode]:
    out = []
    for letter, branch in enumerate(spec.branches, 1):
        domain = branch.pullback(node.domain)
        if not domain.has_interior:
            continue
        pre: Tuple[Tuple[int, Fraction], ...] = ()
        if track:
            image = branch.image
            found = []
            for i, y in node.pre_turning:
                if image.contains(y):
                    x = branch.invert(y)
                    if spec.turning_index(x) is None:
                        found.append((i, x))
            pre = tuple(found)
        out.append(TreeNode(node.word.prepend(letter), domain, pre))
    return out


def _expand(spec: SystemSpec, nodes: List[TreeNode], track: bool) -> List[TreeNode]:
    out: List[TreeNode] = []
    for node in nodes:
        out.extend(_children(spec, node, track))
    return out


def iter_levels(
    spec: SystemSpec,
    depth: int,
    node_budget: Optional[int] = None,
    track_pre_turning: bool = False,
    threads: Optional[int] = None,
) -> Iterator[Tuple[int, List[TreeNode]]]:
    """
    Yield (k, nodes of length k) for k = 0..depth, in canonical word order.

    Only two levels are alive at a time. Raises NodeBudgetExceeded with the
    completed level counts once more than ``node_budget`` nodes were built.
    """
    settings = get_settings()
    budget = node_budget or settings.node_budget
    threads = threads or settings.threads
    root_pre = tuple((i, c) for i, c in enumerate(spec.turning_points, 1)) if track_pre_turning else ()
    level = [TreeNode(Word(()), ClosedInterval.full_line(), root_pre)]
    built = 1
    counts = [1]
    yield 0, level
    for k in range(1, depth + 1):
        if threads > 1 and len(level) > 256:
            size = -(-len(level) // threads)
            chunks = [level[i:i + size] for i in range(0, len(level), size)]
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(lambda chunk: _expand(spec, chunk, track_pre_turning), chunks))
            level = [node for part in parts for node in part]
        else:
            level = _expand(spec, level, track_pre_turning)
        level.sort(key=lambda node: node.word.sort_key)
        built += len(level)
        if built > budget:
            raise NodeBudgetExceeded(
                f"node budget {budget} exceeded at level {k}", partial=counts
            )
        counts.append(len(level))
        logger.debug("%s: level %d has %d interior words", spec.name, k, len(level))
        yield k, level
        if not level:
            for rest in range(k + 1, depth + 1):
                counts.append(0)
                yield rest, []
            return


@dataclass
class AdmissibleTree:
    """Per-level interior-admissible words; ``levels[0]`` is the empty word."""
    depth: int
    levels: List[List[WordDomain]] = field(default_factory=list)

    @property
    def counts(self) -> List[int]:
        """l(1), ..., l(depth)."""
        return [len(level) for level in self.levels[1:]]


def enumerate_admissible(spec: SystemSpec, depth: int, node_budget: Optional[int] = None) -> AdmissibleTree:
    if depth < 1:
        raise InputError("enumeration depth must be at least 1")
    tree = AdmissibleTree(depth)
    for _, nodes in iter_levels(spec, depth, node_budget):
        tree.levels.append([WordDomain(n.word, n.domain) for n in nodes])
    return tree


@dataclass(frozen=True)
class PointWord:
    """An S-word admissible for a base point, with the base point's image."""
    word: Word
    point: SignedPoint
    has_interior: bool
    in_interior: bool


def walk_point(
    spec: SystemSpec,
    base: SignedPoint,
    depth: int,
    interior_only: bool = False,
    node_budget: Optional[int] = None,
) -> List[PointWord]:
    """
    All S-words of length <= depth admissible for ``base``, in canonical order.

    The value is tracked exactly and from both sides at once; a word's domain
    has interior around the base exactly when one of the one-sided points
    survives, and contains the base in its interior when both do.
    """
    budget = node_budget or get_settings().node_budget
    value = base.value
    start = (
        SignedPoint(value, Side.EXACT),
        SignedPoint(value, Side.PLUS),
        SignedPoint(value, Side.MINUS),
    )
    pick = {Side.EXACT: 0, Side.PLUS: 1, Side.MINUS: 2}[base.side]

    def record(word: Word, states) -> Optional[PointWord]:
        own = states[pick]
        if own is None:
            return None
        plus, minus = states[1], states[2]
        has_interior = (plus is not None or minus is not None) if pick == 0 else True
        if interior_only and not has_interior:
            return None
        return PointWord(word, own, has_interior, plus is not None and minus is not None)

    out = [record(Word(()), start)]
    frontier = [(Word(()), start)]
    for _ in range(depth):
        next_frontier = []
        for word, states in frontier:
            for letter in range(1, spec.branch_count + 1):
                moved = tuple(step(spec, letter, s) if s is not None else None for s in states)
                entry = record(word.append(letter), moved)
                if entry is None:
                    continue
                out.append(entry)
                next_frontier.append((entry.word, moved))
                if len(out) > budget:
                    raise NodeBudgetExceeded(
                        f"node budget {budget} exceeded walking {base.render()}", partial=out
                    )
        frontier = next_frontier
    return out


@dataclass
class PointAdmissibility:
    base: SignedPoint
    depth: int
    entries: List[PointWord]

    def interior_counts(self) -> List[int]:
        """l_x(1..depth): words with the base inside the interior of Dom."""
        counts = [0] * (self.depth + 1)
        for entry in self.entries:
            if entry.in_interior:
                counts[len(entry.word)] += 1
        return counts[1:]

    def admissible_counts(self) -> List[int]:
        counts = [0] * (self.depth + 1)
        for entry in self.entries:
            counts[len(entry.word)] += 1
        return counts[1:]


def admissible_for_point(
    spec: SystemSpec, point: SignedPoint, depth: int, node_budget: Optional[int] = None
) -> PointAdmissibility:
    if depth < 1:
        raise InputError("depth must be at least 1")
    return PointAdmissibility(point, depth, walk_point(spec, point, depth, node_budget=node_budget))
