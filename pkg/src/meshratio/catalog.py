"""Analytic constructions of the named configurations."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .config import Configuration, contact_graph

PHI = (1.0 + math.sqrt(5.0)) / 2.0


class ConstructionError(RuntimeError):
    pass


@dataclass(frozen=True)
class NamedConfig:
    name: str
    config: Configuration
    notes: str


def antipodal() -> Configuration:
    return Configuration(2, [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])


def square() -> Configuration:
    """{+-e1, +-e2}: a square on the equator of S^2."""
    return Configuration(2, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])


def tetrahedron() -> Configuration:
    pts = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    return Configuration(2, pts / math.sqrt(3.0))


def bp() -> Configuration:
    """Bipyramid: both poles plus an equilateral triangle on the equator."""
    ring = [[math.cos(2 * math.pi * k / 3), math.sin(2 * math.pi * k / 3), 0.0] for k in range(3)]
    return Configuration(2, [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], *ring])


def q_t(t: float) -> Configuration:
    """Square-base pyramid with apex e2 and the square at height -t."""
    if not 0.0 <= t < 1.0:
        raise ValueError(f"t must lie in [0, 1), got {t}")
    r = math.sqrt(1.0 - t * t)
    return Configuration(
        2,
        [[r, -t, 0.0], [-r, -t, 0.0], [0.0, -t, r], [0.0, -t, -r], [0.0, 1.0, 0.0]],
    )


def sbp_inf() -> Configuration:
    """{e1, -e1, e2, e3, -e3}: the square-base pyramid with its base on the equator."""
    return Configuration(
        2,
        [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]],
    )


def sbp_opt(s: float) -> Configuration:
    """Square-base pyramid at the energy-optimal height for exponent s."""
    from .optimize import sbp_height_opt

    t_star, _ = sbp_height_opt(s)
    return q_t(t_star)


def _icosahedron_points() -> np.ndarray:
    pts = []
    for a, b in itertools.product((1.0, -1.0), repeat=2):
        base = (0.0, a, b * PHI)
        for shift in range(3):
            pts.append(base[-shift:] + base[:-shift] if shift else base)
    pts = np.array(pts)
    return pts / np.linalg.norm(pts, axis=1)[:, None]


def icosahedron() -> Configuration:
    return Configuration(2, _icosahedron_points())


def icosahedron_minus_vertex() -> Configuration:
    return Configuration(2, _icosahedron_points()[1:])


def _even_permutations(n: int):
    for perm in itertools.permutations(range(n)):
        inversions = sum(perm[a] > perm[b] for a in range(n) for b in range(a + 1, n))
        if inversions % 2 == 0:
            yield perm


def cell600() -> Configuration:
    """The 120 vertices of the 600-cell on S^3."""
    pts = [list(v) for v in itertools.product((0.5, -0.5), repeat=4)]
    for k in range(4):
        for sign in (1.0, -1.0):
            v = [0.0] * 4
            v[k] = sign
            pts.append(v)
    base = (PHI / 2.0, 0.5, 1.0 / (2.0 * PHI), 0.0)
    for signs in itertools.product((1.0, -1.0), repeat=3):
        signed = (signs[0] * base[0], signs[1] * base[1], signs[2] * base[2], 0.0)
        for perm in _even_permutations(4):
            pts.append([signed[perm[k]] for k in range(4)])
    pts = np.array(pts)
    if len(pts) != 120:
        raise ConstructionError(f"600-cell construction produced {len(pts)} points")
    return Configuration(3, pts)


def cell600_minus7() -> Configuration:
    """600-cell minus a contact pair and the 5 points at contact distance from both."""
    cell = cell600()
    graph = contact_graph(cell, 1e-9)
    x1, x2 = min(graph.edges)
    nbrs: dict[int, set[int]] = {}
    for a, b in graph.edges:
        nbrs.setdefault(a, set()).add(b)
        nbrs.setdefault(b, set()).add(a)
    common = sorted(nbrs[x1] & nbrs[x2])
    if len(common) != 5:
        raise ConstructionError(
            f"edge ({x1}, {x2}) has {len(common)} common contact neighbours, expected 5"
        )
    return cell.without([x1, x2, *common])


def removed_pair_midpoint_600() -> np.ndarray:
    """Normalized midpoint of the removed contact pair in ``cell600_minus7``."""
    cell = cell600()
    x1, x2 = min(contact_graph(cell, 1e-9).edges)
    m = cell.points[x1] + cell.points[x2]
    return m / np.linalg.norm(m)


_BUILDERS = {
    "antipodal": (antipodal, "two antipodal points on S^2"),
    "square": (square, "square {+-e1, +-e2} on the equator of S^2"),
    "tetrahedron": (tetrahedron, "regular tetrahedron on S^2"),
    "bp": (bp, "bipyramid: poles plus equilateral equatorial triangle"),
    "sbp-inf": (sbp_inf, "square-base pyramid with base on the equator"),
    "icosahedron": (icosahedron, "regular icosahedron, 12 points"),
    "icosahedron-minus-vertex": (icosahedron_minus_vertex, "icosahedron with one vertex removed"),
    "cell600": (cell600, "600-cell vertices on S^3, 120 points"),
    "cell600-minus7": (cell600_minus7, "600-cell minus a contact pair and its 5 common neighbours"),
}

NAMES = (*_BUILDERS, "q-t", "sbp-opt")


def build(name: str, *, s: float | None = None, t: float | None = None) -> NamedConfig:
    """Look up a named configuration; ``q-t`` needs ``t`` and ``sbp-opt`` needs ``s``."""
    if name == "q-t":
        if t is None:
            raise ValueError("q-t needs a height t")
        return NamedConfig(name, q_t(t), f"square-base pyramid at height t={t!r}")
    if name == "sbp-opt":
        if s is None:
            raise ValueError("sbp-opt needs an exponent s")
        return NamedConfig(name, sbp_opt(s), f"optimally heighted square-base pyramid, s={s!r}")
    try:
        builder, notes = _BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown configuration {name!r}; choose from {', '.join(NAMES)}") from None
    return NamedConfig(name, builder(), notes)
