"""The middle-thirds Cantor set with packings whose mesh ratio grows without bound.

All quantities are exact ``Fraction`` values.
"""

from __future__ import annotations

import bisect
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

MAX_DEPTH = 30


@dataclass(frozen=True)
class CantorModel:
    """Depth-d approximation: 2^d closed intervals of length 3^-d.

    Intervals are addressed by ternary strings over {0, 2}; the endpoint
    list is generated on demand since it has 2^(d+1) entries.
    """

    depth: int

    def __post_init__(self) -> None:
        if not 1 <= self.depth <= MAX_DEPTH:
            raise ValueError(f"depth must lie in [1, {MAX_DEPTH}], got {self.depth}")

    @property
    def denominator(self) -> int:
        return 3**self.depth

    @property
    def n_intervals(self) -> int:
        return 2**self.depth

    @property
    def n_endpoints(self) -> int:
        return 2 ** (self.depth + 1)

    def addresses(self) -> Iterator[str]:
        for digits in itertools.product("02", repeat=self.depth):
            yield "".join(digits)

    def left_numerator(self, address: str) -> int:
        d = self.depth
        return sum(int(a) * 3 ** (d - 1 - k) for k, a in enumerate(address))

    def intervals(self) -> Iterator[tuple[str, Fraction, Fraction]]:
        den = self.denominator
        for addr in self.addresses():
            left = self.left_numerator(addr)
            yield addr, Fraction(left, den), Fraction(left + 1, den)

    def endpoints(self) -> Iterator[Fraction]:
        """All interval endpoints in ascending order."""
        for _, left, right in self.intervals():
            yield left
            yield right


@dataclass(frozen=True)
class CantorPacking:
    k: int
    points: tuple[Fraction, ...]
    delta: Fraction
    eta: Fraction
    gamma: Fraction
    eval_depth: int


def in_cantor_set(x: Fraction) -> bool:
    """Membership test for rationals via the ternary expansion (eventually periodic)."""
    if not 0 <= x <= 1:
        return False
    seen = set()
    while x not in seen:
        if x in (0, 1):
            return True
        seen.add(x)
        x *= 3
        digit = int(x)
        x -= digit
        if digit == 1:
            return x == 0
    return True


def _nearest_gap(sorted_points: list[Fraction], y: Fraction) -> Fraction:
    k = bisect.bisect_left(sorted_points, y)
    best = None
    for idx in (k - 1, k):
        if 0 <= idx < len(sorted_points):
            gap = abs(y - sorted_points[idx])
            best = gap if best is None or gap < best else best
    return best


def mesh_norm(points: list[Fraction], eval_depth: int) -> Fraction:
    """Largest distance from a depth-``eval_depth`` endpoint to the nearest point.

    Branch and bound over the interval tree: an interval is dropped once the
    distance from its midpoint to the nearest point plus its half-width cannot
    beat the best endpoint found so far. Right children are explored first,
    which finds the far endpoint 1 immediately.
    """
    pts = sorted(points)
    best = Fraction(-1)
    stack = [(0, Fraction(0), Fraction(1))]
    while stack:
        depth, left, right = stack.pop()
        half = (right - left) / 2
        if _nearest_gap(pts, left + half) + half <= best:
            continue
        if depth == eval_depth:
            for y in (left, right):
                best = max(best, _nearest_gap(pts, y))
            continue
        third = (right - left) / 3
        stack.append((depth + 1, left, left + third))
        stack.append((depth + 1, right - third, right))
    return best


def cantor_model(depth: int) -> CantorModel:
    return CantorModel(depth)


def cantor_packing(k: int, eval_depth: int | None = None) -> CantorPacking:
    """The first 2^k + 1 depth-k endpoints, ending at 2/3.

    They are 3^-k apart, which is the largest separation possible for that
    many points of the Cantor set, while the covering radius stays at 1/3.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if eval_depth is None:
        eval_depth = k + 4
    if eval_depth < k + 2:
        raise ValueError(f"eval_depth must be at least k + 2 = {k + 2}, got {eval_depth}")
    if eval_depth > MAX_DEPTH:
        raise ValueError(f"eval_depth may not exceed {MAX_DEPTH}")
    model = CantorModel(k)
    points = tuple(itertools.islice(model.endpoints(), 2**k + 1))
    delta = min(b - a for a, b in zip(points, points[1:]))
    eta = mesh_norm(list(points), eval_depth)
    return CantorPacking(k=k, points=points, delta=delta, eta=eta, gamma=eta / delta, eval_depth=eval_depth)


def cantor_pigeonhole_bound(k: int) -> Fraction:
    """Upper bound 3^-k on the separation of any 2^k + 1 points of the Cantor set.

    The set lies in 2^k intervals of length 3^-k, so two of the points share one.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return Fraction(1, 3**k)
