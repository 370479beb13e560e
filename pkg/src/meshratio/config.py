"""Point configurations on S^n and their separation-side diagnostics."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import IO, Any

import numpy as np

NORM_REPAIR_TOL = 1e-6
NORM_TOL = 1e-12
DISTINCT_TOL = 1e-9
DEFAULT_REL_TOL = 1e-9


class ConfigurationError(ValueError):
    """Raised for invalid configurations or malformed configuration input."""


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    """Full N x N matrix of chordal distances."""
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n, k=1)


@dataclass(frozen=True)
class Configuration:
    """An ordered list of N unit vectors in R^{dim+1}.

    Inputs whose norms are within ``NORM_REPAIR_TOL`` of 1 are renormalized;
    anything further off is rejected. Point order is preserved.
    """

    dim: int
    points: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if int(self.dim) != self.dim or self.dim < 1:
            raise ConfigurationError(f"dim must be an integer >= 1, got {self.dim!r}")
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim != 2 or pts.shape[1] != self.dim + 1:
            raise ConfigurationError(
                f"points must have shape (N, {self.dim + 1}), got {pts.shape}"
            )
        if pts.shape[0] < 2:
            raise ConfigurationError(f"need N >= 2 points, got {pts.shape[0]}")
        if not np.all(np.isfinite(pts)):
            raise ConfigurationError("points contain non-finite coordinates")
        norms = np.linalg.norm(pts, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_REPAIR_TOL)
        if bad.size:
            raise ConfigurationError(
                f"point {bad[0]} has norm {norms[bad[0]]:.17g}, not on the unit sphere"
            )
        pts /= norms[:, None]
        i, j = _pair_indices(len(pts))
        d = np.linalg.norm(pts[i] - pts[j], axis=1)
        close = np.flatnonzero(d <= DISTINCT_TOL)
        if close.size:
            k = close[0]
            raise ConfigurationError(
                f"points {i[k]} and {j[k]} coincide (distance {d[k]:.3g})"
            )
        pts.setflags(write=False)
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "points", pts)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.n_points

    def transformed(self, matrix: np.ndarray) -> "Configuration":
        """Apply a linear map (typically orthogonal) to every point."""
        return Configuration(self.dim, self.points @ np.asarray(matrix).T)

    def with_point(self, point: np.ndarray) -> "Configuration":
        return Configuration(self.dim, np.vstack([self.points, point]))

    def without(self, indices) -> "Configuration":
        keep = np.setdiff1d(np.arange(self.n_points), np.asarray(list(indices)))
        return Configuration(self.dim, self.points[keep])

    def to_dict(self) -> dict[str, Any]:
        return {"dim": self.dim, "points": [[float(c) for c in p] for p in self.points]}

    def to_json(self, **extra: Any) -> str:
        payload = self.to_dict()
        payload.update(extra)
        return json.dumps(payload, indent=None)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form (dim + points only)."""
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Configuration":
        try:
            dim = data["dim"]
            points = data["points"]
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(
                'configuration JSON needs "dim" and "points" keys'
            ) from exc
        return cls(dim, np.asarray(points, dtype=np.float64))

    @classmethod
    def from_json(cls, text: str) -> "Configuration":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"invalid configuration JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, fh: IO[str]) -> "Configuration":
        return cls.from_json(fh.read())


@dataclass(frozen=True)
class ContactGraph:
    delta: float
    edges: tuple[tuple[int, int], ...]
    tolerance: float

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degrees(self, n_points: int) -> np.ndarray:
        deg = np.zeros(n_points, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg


def separation(config: Configuration) -> float:
    """Minimum pairwise chordal distance, exact O(N^2) scan."""
    if config.n_points < 2:
        raise ConfigurationError("separation needs at least two points")
    i, j = _pair_indices(config.n_points)
    pts = config.points
    return float(np.min(np.linalg.norm(pts[i] - pts[j], axis=1)))


def contact_graph(config: Configuration, rel_tol: float = DEFAULT_REL_TOL) -> ContactGraph:
    """Pairs whose distance is within ``rel_tol * delta`` of the separation."""
    if not 0.0 <= rel_tol <= 0.01:
        raise ValueError(f"rel_tol must lie in [0, 0.01], got {rel_tol}")
    i, j = _pair_indices(config.n_points)
    pts = config.points
    d = np.linalg.norm(pts[i] - pts[j], axis=1)
    delta = float(d.min())
    mask = np.abs(d - delta) <= rel_tol * delta
    edges = tuple((int(a), int(b)) for a, b in zip(i[mask], j[mask]))
    return ContactGraph(delta=delta, edges=edges, tolerance=rel_tol)


def distance_multiset(config: Configuration) -> np.ndarray:
    """Sorted N(N-1)/2 pairwise distances; a rotation- and order-invariant signature."""
    i, j = _pair_indices(config.n_points)
    pts = config.points
    return np.sort(np.linalg.norm(pts[i] - pts[j], axis=1))


def is_isometric_signature(a: Configuration, b: Configuration, tol: float = 1e-9) -> bool:
    """Necessary condition for congruence: equal distance multisets within ``tol``.

    This does not prove the two configurations are isometric.
    """
    if a.dim != b.dim or a.n_points != b.n_points:
        raise ConfigurationError(
            f"cannot compare configurations of shape {a.points.shape} and {b.points.shape}"
        )
    return bool(np.all(np.abs(distance_multiset(a) - distance_multiset(b)) <= tol))


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random orthogonal (dim+1) x (dim+1) matrix."""
    q, r = np.linalg.qr(rng.standard_normal((dim + 1, dim + 1)))
    return q * np.sign(np.diag(r))
