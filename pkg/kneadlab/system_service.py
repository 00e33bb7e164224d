"""
Loading systems of monotone branches and the pointwise primitives on them.

A config is a JSON document::

    {"name": "scaling",
     "branches": [{"domain": ["-1", "1"], "affine": {"slope": "2", "intercept": "0"}},
                  {"domain": ["0", "1"], "table": [["0", "0"], ["1/2", "3/4"], ["1", "1"]]},
                  {"domain": ["0", "1"], "function": "neg_square", "samples": 32}],
     "degenerate": false}

or, for a continuous piecewise-monotone map, ``{"kind": "multimodal",
"breakpoints": [...], "laps": [...]}`` with one affine/table/function lap per
consecutive breakpoint pair.
"""

import json
import logging
from fractions import Fraction
from math import isqrt
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

from kneadlab.errors import ConfigError, InputError
from kneadlab.models import (
    Address,
    AffineShape,
    Branch,
    Side,
    SignedPoint,
    SystemSpec,
    TableShape,
    Word,
)
from kneadlab.numeric import ClosedInterval, parse_rational

logger = logging.getLogger(__name__)


def _exact_sqrt(q: Fraction) -> Fraction:
    num, den = isqrt(q.numerator), isqrt(q.denominator)
    if num * num != q.numerator or den * den != q.denominator:
        raise ConfigError(f"root-sampled branch needs endpoints with rational square roots, got {q}")
    return Fraction(num, den)


def _uniform(lo: Fraction, hi: Fraction, samples: int) -> List[Fraction]:
    return [lo + (hi - lo) * k / samples for k in range(samples + 1)]


def _root_grid(lo: Fraction, hi: Fraction, samples: int) -> List[Fraction]:
    """x values whose |x| are exact squares, uniform in sqrt|x|."""
    sign = -1 if hi <= 0 else 1
    if lo < 0 < hi:
        raise ConfigError("root-sampled branch domain must not straddle 0")
    u_lo, u_hi = _exact_sqrt(abs(lo)), _exact_sqrt(abs(hi))
    return sorted(sign * u * u for u in _uniform(u_lo, u_hi, samples))


# name -> (function on exact |x| square roots, sampling grid)
SAMPLED_FUNCTIONS: Dict[str, Tuple[Callable[[Fraction], Fraction], Callable]] = {
    "square": (lambda x: x * x, _uniform),
    "neg_square": (lambda x: -x * x, _uniform),
    "cube": (lambda x: x * x * x, _uniform),
    "sqrt_abs": (lambda x: _exact_sqrt(abs(x)), _root_grid),
    "neg_sqrt_abs": (lambda x: -_exact_sqrt(abs(x)), _root_grid),
}


def _parse_domain(raw: Any) -> ClosedInterval:
    if not isinstance(raw, (list, tuple)) or len(raw) != 2:
        raise ConfigError(f"domain must be a [lo, hi] pair, got {raw!r}")
    lo, hi = parse_rational(raw[0]), parse_rational(raw[1])
    if lo > hi:
        raise ConfigError(f"domain endpoints out of order: {raw!r}")
    return ClosedInterval(lo, hi)


def _parse_shape(data: Dict[str, Any], domain: ClosedInterval) -> Tuple[Union[AffineShape, TableShape], Optional[int]]:
    if "affine" in data:
        affine = data["affine"]
        return AffineShape(
            parse_rational(affine.get("slope")),
            parse_rational(affine.get("intercept", "0")),
        ), None
    if "table" in data:
        points = tuple((parse_rational(x), parse_rational(y)) for x, y in data["table"])
        return TableShape(points), len(points) - 1
    if "function" in data:
        name = data["function"]
        if name not in SAMPLED_FUNCTIONS:
            raise ConfigError(f"unknown sampled function {name!r}; options: {sorted(SAMPLED_FUNCTIONS)}")
        samples = int(data.get("samples", 64))
        if samples < 1:
            raise ConfigError("samples must be at least 1")
        func, grid = SAMPLED_FUNCTIONS[name]
        xs = grid(domain.lo, domain.hi, samples)
        return TableShape(tuple((x, func(x)) for x in xs)), samples
    raise ConfigError("branch needs one of 'affine', 'table' or 'function'")


def _parse_branch(data: Dict[str, Any], index: int) -> Tuple[Branch, Optional[int]]:
    if not isinstance(data, dict):
        raise ConfigError(f"branch {index} must be an object")
    if "domain" in data:
        domain = _parse_domain(data["domain"])
    elif "table" in data:
        xs = [parse_rational(x) for x, _ in data["table"]]
        domain = ClosedInterval(xs[0], xs[-1])
    else:
        raise ConfigError(f"branch {index} has no domain")
    shape, resolution = _parse_shape(data, domain)
    return Branch(domain=domain, shape=shape, label=data.get("label", f"a{index}")), resolution


def _warn_overlaps(spec: SystemSpec) -> None:
    for i, a in enumerate(spec.branches, 1):
        for j, b in enumerate(spec.branches[i:], i + 1):
            if a.domain.interior_meets(b.domain):
                logger.warning(
                    "%s: interiors of Dom(a%d) and Dom(a%d) overlap", spec.name, i, j
                )


def _build(branches: List[Tuple[Branch, Optional[int]]], name: str, degenerate: bool) -> SystemSpec:
    resolutions = [r for _, r in branches if r is not None]
    spec = SystemSpec(
        branches=tuple(b for b, _ in branches),
        name=name,
        degenerate=degenerate,
        table_resolution=max(resolutions) if resolutions else None,
    )
    _warn_overlaps(spec)
    logger.info(
        "loaded %s: %d branches, turning points %s",
        spec.name, spec.branch_count, [str(c) for c in spec.turning_points],
    )
    return spec


def _load_multimodal(data: Dict[str, Any], name: str) -> SystemSpec:
    breakpoints = [parse_rational(x) for x in data.get("breakpoints", [])]
    laps = data.get("laps", [])
    if len(breakpoints) < 2 or len(laps) != len(breakpoints) - 1:
        raise ConfigError("multimodal map needs k+1 breakpoints and k laps")
    branches = []
    for index, (lap, lo, hi) in enumerate(zip(laps, breakpoints, breakpoints[1:]), 1):
        lap = dict(lap, domain=[str(lo), str(hi)])
        branches.append(_parse_branch(lap, index))
    for (left, _), (right, _) in zip(branches, branches[1:]):
        x = left.domain.hi
        if left.evaluate(x) != right.evaluate(x):
            raise ConfigError(f"multimodal map is discontinuous at {x}")
        if left.orientation == right.orientation:
            raise ConfigError(f"laps meeting at {x} must alternate monotonicity")
    return _build(branches, name, degenerate=False)


def load_system(text: str, name: str = "system") -> SystemSpec:
    """Parse and validate a system config document."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    name = data.get("name", name)
    if data.get("kind") == "multimodal":
        return _load_multimodal(data, name)
    raw_branches = data.get("branches")
    if not raw_branches:
        raise ConfigError("config has an empty branch list")
    branches = [_parse_branch(b, i) for i, b in enumerate(raw_branches, 1)]
    return _build(branches, name, bool(data.get("degenerate", False)))


def load_system_file(path: Union[str, Path]) -> SystemSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return load_system(text, name=path.stem)


def conjugate_affine(spec: SystemSpec, scale, shift, name: Optional[str] = None) -> SystemSpec:
    """The system h o f o h^-1 for the increasing affine map h(x) = scale*x + shift."""
    scale, shift = parse_rational(scale), parse_rational(shift)
    if scale <= 0:
        raise InputError("conjugating map must be increasing")
    h = lambda x: scale * x + shift
    branches = []
    for b in spec.branches:
        domain = ClosedInterval(h(b.domain.lo), h(b.domain.hi))
        if isinstance(b.shape, AffineShape):
            slope = b.shape.slope
            shape = AffineShape(slope, scale * b.shape.intercept + shift - slope * shift)
        else:
            shape = TableShape(tuple((h(x), h(y)) for x, y in b.shape.points))
        branches.append(Branch(domain=domain, shape=shape, label=b.label))
    return SystemSpec(
        branches=tuple(branches),
        name=name or f"{spec.name}_conj",
        degenerate=spec.degenerate,
        table_resolution=spec.table_resolution,
    )


def eval_branch(branch: Branch, x) -> Fraction:
    return branch.evaluate(parse_rational(x))


def invert_branch(branch: Branch, y) -> Fraction:
    return branch.invert(parse_rational(y))


def address(spec: SystemSpec, point: SignedPoint) -> Address:
    """Cell or turning point occupied by a signed point."""
    i = spec.turning_index(point.value)
    if i is None:
        return Address.cell(spec.cell_of(point.value))
    if point.side is Side.EXACT:
        return Address.turning(i)
    return Address.cell(i - 1 if point.side is Side.MINUS else i)


def sigma(spec: SystemSpec, word: Word) -> int:
    """Orientation of f_w; inverse letters count like their base letter."""
    sign = 1
    for letter in word.letters:
        sign *= spec.branch(letter).orientation
    return sign
