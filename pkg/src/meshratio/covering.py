"""Covering radius (mesh norm) and mesh-separation ratio of configurations."""

from __future__ import annotations

import functools
import logging
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize as _scipy_minimize
from scipy.spatial import ConvexHull, cKDTree
from scipy.stats import norm, qmc

from .config import Configuration, contact_graph, separation
from .hull import convex_hull, orient

logger = logging.getLogger(__name__)

EXACT = "exact-hull"
SAMPLED = "sampled-polished"

DEFAULT_SEEDS = 100_000
DEFAULT_POLISH = 32
# multiplier applied to the probed seed covering radius in dim >= 3
PROBE_SAFETY = 1.5
PROBE_COUNT = 20_000


class OriginNotInteriorError(ValueError):
    """The exact method needs the origin inside the closed hull of the points."""


@dataclass(frozen=True)
class MeshResult:
    eta: float
    witness: np.ndarray
    method: str
    certified_gap: float

    @property
    def upper(self) -> float:
        return self.eta + self.certified_gap


@dataclass(frozen=True)
class DiagnosticsReport:
    delta: float
    eta: float
    gamma: float
    contact_edges: int
    method: str
    certified_gap: float
    config_digest: str

    def to_dict(self) -> dict:
        return asdict(self)


def min_distance_to(points: np.ndarray, y: np.ndarray) -> float:
    return float(np.min(np.linalg.norm(points - y, axis=1)))


def fibonacci_sphere(n: int) -> np.ndarray:
    """Spherical Fibonacci lattice of n points on S^2."""
    k = np.arange(n, dtype=np.float64)
    z = 1.0 - (2.0 * k + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    theta = 2.0 * math.pi * k / ((1.0 + math.sqrt(5.0)) / 2.0)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta), z])


def gaussian_directions(n: int, dim: int, seed: int) -> np.ndarray:
    """Scrambled-Sobol normal deviates pushed onto S^dim."""
    m = max(1, math.ceil(math.log2(n)))
    sampler = qmc.Sobol(d=dim + 1, scramble=True, seed=seed)
    u = sampler.random_base2(m)[:n]
    g = norm.ppf(np.clip(u, 1e-15, 1.0 - 1e-15))
    return g / np.linalg.norm(g, axis=1)[:, None]


def seed_directions(n: int, dim: int, seed: int) -> np.ndarray:
    return fibonacci_sphere(n) if dim == 2 else gaussian_directions(n, dim, seed)


@functools.lru_cache(maxsize=16)
def fibonacci_covering_radius(n: int) -> float:
    """Chordal covering radius of the n-point Fibonacci lattice.

    Computed from the circumcaps of the lattice's Delaunay triangulation (the
    facets of its convex hull), so it is exact up to rounding.
    """
    pts = fibonacci_sphere(n)
    hull = ConvexHull(pts)
    normals = hull.equations[:, :3]
    offsets = -hull.equations[:, 3]
    offsets = offsets / np.linalg.norm(normals, axis=1)
    return float(np.sqrt(max(0.0, 2.0 - 2.0 * offsets.min())))


@functools.lru_cache(maxsize=16)
def probed_covering_radius(n: int, dim: int, seed: int) -> float:
    """Estimate of the covering radius of ``gaussian_directions(n, dim, seed)``.

    Largest distance from PROBE_COUNT independent random directions to the
    seed set, times PROBE_SAFETY. An estimate, not a bound.
    """
    seeds = gaussian_directions(n, dim, seed)
    rng = np.random.default_rng([seed, n, dim, 7919])
    probes = rng.standard_normal((PROBE_COUNT, dim + 1))
    probes /= np.linalg.norm(probes, axis=1)[:, None]
    dist, _ = cKDTree(seeds).query(probes)
    return float(PROBE_SAFETY * dist.max())


def _facet_caps(points: np.ndarray, faces):
    normals = []
    offsets = []
    for a, b, c in faces:
        nrm = np.cross(points[b] - points[a], points[c] - points[a])
        nrm /= np.linalg.norm(nrm)
        normals.append(nrm)
        offsets.append(float(np.mean(points[[a, b, c]] @ nrm)))
    return np.array(normals), np.array(offsets)


def _check_coplanar_caps(points, faces, normals) -> None:
    index = {}
    for fid, (a, b, c) in enumerate(faces):
        for e in ((a, b), (b, c), (c, a)):
            index[e] = fid
    for fid, (a, b, c) in enumerate(faces):
        for u, v in ((a, b), (b, c), (c, a)):
            other = index[(v, u)]
            if other <= fid:
                continue
            apex = next(k for k in faces[other] if k not in (u, v))
            if orient(points[a], points[b], points[c], points[apex]) == 0:
                gap = float(np.linalg.norm(normals[fid] - normals[other]))
                if gap > 1e-9:
                    raise AssertionError(
                        f"coplanar facets {fid} and {other} disagree on circumcap ({gap:.3g})"
                    )


def mesh_norm_exact_s2(config: Configuration) -> MeshResult:
    """Covering radius on S^2 from the circumcaps of the spherical Delaunay facets.

    With the origin in the closed hull, the farthest point from the
    configuration is the outward normal of the facet nearest the origin; a
    facet through the origin (all points in a closed hemisphere) gives a
    hemispherical cap of chordal radius sqrt(2).
    """
    if config.dim != 2:
        raise ValueError(f"exact covering radius needs dim=2, got dim={config.dim}")
    if config.n_points < 4:
        raise OriginNotInteriorError(
            f"{config.n_points} points cannot surround the origin; use mesh_norm_sampled"
        )
    pts = config.points
    try:
        faces = convex_hull(pts)
    except ValueError as exc:
        raise OriginNotInteriorError(f"hull is degenerate ({exc}); use mesh_norm_sampled") from exc
    origin = (0.0, 0.0, 0.0)
    outside = [f for f in faces if orient(pts[f[0]], pts[f[1]], pts[f[2]], origin) > 0]
    if outside:
        raise OriginNotInteriorError(
            f"origin lies outside the hull (beyond facet {outside[0]}); use mesh_norm_sampled"
        )
    normals, offsets = _facet_caps(pts, faces)
    _check_coplanar_caps(pts, faces, normals)
    # smallest offset means the largest empty cap; argmin keeps the first facet on ties
    best = int(np.argmin(offsets))
    witness = normals[best]
    return MeshResult(
        eta=min_distance_to(pts, witness),
        witness=witness,
        method=EXACT,
        certified_gap=0.0,
    )


def _circumcenter(points: np.ndarray, active: np.ndarray, near: np.ndarray) -> np.ndarray | None:
    """Point of the sphere equidistant from ``active`` on the side of ``near``."""
    base = points[active[0]]
    rows = points[active[1:]] - base
    _, sv, vt = np.linalg.svd(rows)
    if sv.size < rows.shape[1] - 1 or sv[-1] < 1e-12 * max(sv[0], 1.0):
        return None
    y = vt[-1]
    if y @ near < 0:
        y = -y
    return y


def _polish(points: np.ndarray, y0: np.ndarray, tree: cKDTree) -> tuple[np.ndarray, float]:
    """Local maximization of the distance to the nearest configuration point."""
    amb = points.shape[1]
    k = min(len(points), 4 * amb)
    best_y, best_f = y0, min_distance_to(points, y0)
    for _ in range(20):
        _, idx = tree.query(best_y, k=k)
        near = points[np.atleast_1d(idx)]
        # minimize the largest inner product with nearby points over the sphere
        z0 = float(np.max(near @ best_y))
        res = _scipy_minimize(
            lambda v: v[-1],
            np.append(best_y, z0),
            jac=lambda v: np.eye(amb + 1)[-1],
            method="SLSQP",
            constraints=[
                {
                    "type": "ineq",
                    "fun": lambda v: v[-1] - near @ v[:-1],
                    "jac": lambda v: np.hstack([-near, np.ones((len(near), 1))]),
                },
                {
                    "type": "eq",
                    "fun": lambda v: v[:-1] @ v[:-1] - 1.0,
                    "jac": lambda v: np.append(2.0 * v[:-1], 0.0),
                },
            ],
            options={"ftol": 1e-15, "maxiter": 200},
        )
        cand = res.x[:-1]
        nrm = np.linalg.norm(cand)
        improved = False
        if np.all(np.isfinite(cand)) and nrm > 0:
            cand = cand / nrm
            f = min_distance_to(points, cand)
            if f > best_f + 1e-14:
                best_y, best_f, improved = cand, f, True
        # snap onto the exact Voronoi vertex of the active set
        dist = np.linalg.norm(points - best_y, axis=1)
        active = np.flatnonzero(dist <= best_f + 1e-7)
        if active.size >= amb:
            active = active[np.argsort(dist[active], kind="stable")][:amb]
            snap = _circumcenter(points, active, best_y)
            if snap is not None:
                f = min_distance_to(points, snap)
                if f > best_f + 1e-14:
                    best_y, best_f, improved = snap, f, True
        if not improved:
            break
    return best_y, best_f


def mesh_norm_sampled(
    config: Configuration,
    n_seeds: int = DEFAULT_SEEDS,
    n_polish: int = DEFAULT_POLISH,
    rng_seed: int = 0,
) -> MeshResult:
    """Lower estimate of the covering radius with a gap bound.

    The true value lies in ``[eta, eta + certified_gap]``: the distance to the
    configuration is 1-Lipschitz, so the best seed is within the seed set's
    covering radius of the true maximum.
    """
    if n_seeds < 1000:
        raise ValueError(f"n_seeds must be at least 1000, got {n_seeds}")
    if n_polish < 1:
        raise ValueError("n_polish must be positive")
    pts = config.points
    seeds = seed_directions(n_seeds, config.dim, rng_seed)
    tree = cKDTree(pts)
    dist, _ = tree.query(seeds)
    order = np.lexsort((np.arange(n_seeds), -dist))[:n_polish]
    best_y, best_f = seeds[order[0]], float(dist[order[0]])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for idx in order:
            y, f = _polish(pts, seeds[idx], tree)
            if f > best_f:
                best_y, best_f = y, f
    if config.dim == 2:
        gap = fibonacci_covering_radius(n_seeds)
    else:
        gap = probed_covering_radius(n_seeds, config.dim, rng_seed)
    return MeshResult(eta=best_f, witness=best_y, method=SAMPLED, certified_gap=gap)


def mesh_norm(config: Configuration) -> MeshResult:
    """Exact method when it applies, sampled with the default budget otherwise."""
    if config.dim == 2 and config.n_points >= 4:
        try:
            return mesh_norm_exact_s2(config)
        except OriginNotInteriorError:
            logger.debug("origin not interior; falling back to sampling")
    return mesh_norm_sampled(config, DEFAULT_SEEDS, DEFAULT_POLISH, 0)


def diagnose(config: Configuration) -> DiagnosticsReport:
    delta = separation(config)
    mesh = mesh_norm(config)
    return DiagnosticsReport(
        delta=delta,
        eta=mesh.eta,
        gamma=mesh.eta / delta,
        contact_edges=contact_graph(config).n_edges,
        method=mesh.method,
        certified_gap=mesh.certified_gap,
        config_digest=config.digest(),
    )


HEXAGONAL_PACKING_DENSITY = math.pi / math.sqrt(12.0)
HEXAGONAL_COVERING_DENSITY = 2.0 * math.pi / math.sqrt(27.0)


def gamma_lower_bound_s2(kind: str) -> float:
    """Asymptotic lower bounds on the mesh ratio of best packings on S^2."""
    if kind == "hexagonal":
        return 0.5 * math.sqrt(HEXAGONAL_COVERING_DENSITY / HEXAGONAL_PACKING_DENSITY)
    if kind == "pentagonal":
        return 1.0 / (2.0 * math.cos(math.pi / 5.0))
    raise ValueError(f"unknown bound kind {kind!r}; expected 'hexagonal' or 'pentagonal'")
