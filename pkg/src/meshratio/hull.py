"""Incremental 3D convex hull with exact orientation signs.

The orientation test runs in floating point behind a forward error bound and
falls back to exact rational arithmetic when the float result is not
trustworthy. Cocircular points (common on symmetric configurations) therefore
get consistent coplanarity verdicts.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

_EPS = 2.0**-53
_O3D_ERRBOUND = (7.0 + 56.0 * _EPS) * _EPS


class DegenerateInputError(ValueError):
    pass


def _exact_orient(a, b, c, p) -> int:
    a, b, c, p = ([Fraction(float(v)) for v in q] for q in (a, b, c, p))
    u = [b[k] - a[k] for k in range(3)]
    v = [c[k] - a[k] for k in range(3)]
    w = [p[k] - a[k] for k in range(3)]
    det = (
        u[0] * (v[1] * w[2] - v[2] * w[1])
        - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0])
    )
    return (det > 0) - (det < 0)


def orient(a, b, c, p) -> int:
    """Sign of ((b - a) x (c - a)) . (p - a): +1 if p is on the normal side."""
    ux, uy, uz = b[0] - a[0], b[1] - a[1], b[2] - a[2]
    vx, vy, vz = c[0] - a[0], c[1] - a[1], c[2] - a[2]
    wx, wy, wz = p[0] - a[0], p[1] - a[1], p[2] - a[2]
    m1, m2, m3 = vy * wz - vz * wy, vx * wz - vz * wx, vx * wy - vy * wx
    det = ux * m1 - uy * m2 + uz * m3
    permanent = (
        abs(ux) * (abs(vy * wz) + abs(vz * wy))
        + abs(uy) * (abs(vx * wz) + abs(vz * wx))
        + abs(uz) * (abs(vx * wy) + abs(vy * wx))
    )
    if abs(det) > _O3D_ERRBOUND * permanent:
        return 1 if det > 0 else -1
    return _exact_orient(a, b, c, p)


def _collinear(a, b, c) -> bool:
    a, b, c = ([Fraction(float(v)) for v in q] for q in (a, b, c))
    u = [b[k] - a[k] for k in range(3)]
    v = [c[k] - a[k] for k in range(3)]
    return u[1] * v[2] == u[2] * v[1] and u[0] * v[2] == u[2] * v[0] and u[0] * v[1] == u[1] * v[0]


def convex_hull(points: np.ndarray) -> list[tuple[int, int, int]]:
    """Triangular facets of the hull, each oriented with an outward normal.

    Coplanar facets come out triangulated. Points that lie inside the hull or
    on it without being needed as vertices are skipped.
    """
    pts = [tuple(float(v) for v in p) for p in np.asarray(points, dtype=np.float64)]
    n = len(pts)
    if n < 4:
        raise DegenerateInputError("a 3D hull needs at least 4 points")

    i0 = 0
    i1 = next((k for k in range(1, n) if pts[k] != pts[i0]), None)
    if i1 is None:
        raise DegenerateInputError("all points coincide")
    i2 = next((k for k in range(n) if not _collinear(pts[i0], pts[i1], pts[k])), None)
    if i2 is None:
        raise DegenerateInputError("all points are collinear")
    i3 = next((k for k in range(n) if orient(pts[i0], pts[i1], pts[i2], pts[k]) != 0), None)
    if i3 is None:
        raise DegenerateInputError("all points are coplanar")

    if orient(pts[i0], pts[i1], pts[i2], pts[i3]) > 0:
        i1, i2 = i2, i1
    faces: dict[int, tuple[int, int, int]] = {}
    edge_face: dict[tuple[int, int], int] = {}
    next_id = 0

    def add_face(a: int, b: int, c: int) -> None:
        nonlocal next_id
        faces[next_id] = (a, b, c)
        for e in ((a, b), (b, c), (c, a)):
            edge_face[e] = next_id
        next_id += 1

    def drop_face(fid: int) -> None:
        a, b, c = faces.pop(fid)
        for e in ((a, b), (b, c), (c, a)):
            if edge_face.get(e) == fid:
                del edge_face[e]

    # i3 lies on the negative side of (i0, i1, i2) after the swap
    add_face(i0, i1, i2)
    add_face(i0, i3, i1)
    add_face(i1, i3, i2)
    add_face(i2, i3, i0)

    seeds = {i0, i1, i2, i3}
    for k in range(n):
        if k in seeds:
            continue
        p = pts[k]
        visible = [fid for fid, (a, b, c) in faces.items() if orient(pts[a], pts[b], pts[c], p) > 0]
        if not visible:
            continue
        visible_set = set(visible)
        horizon = []
        for fid in visible:
            a, b, c = faces[fid]
            for e in ((a, b), (b, c), (c, a)):
                if edge_face.get((e[1], e[0])) not in visible_set:
                    horizon.append(e)
        for fid in visible:
            drop_face(fid)
        for a, b in horizon:
            add_face(a, b, k)

    return [faces[fid] for fid in sorted(faces)]
