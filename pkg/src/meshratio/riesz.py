"""Riesz s-energy on the sphere: values, derivatives, stability spectrum.

Energies use the ordered-pair convention, so every unordered pair is counted
twice. The log2 form is evaluated with a max-shifted exponent sum and stays
finite long after the plain sum underflows.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .config import Configuration, ConfigurationError

MAX_S = 2000.0
LOG_DOMAIN_S = 200.0
GAUGE_EIG_REL = 1e-8
GAUGE_ANGLE = 1e-4


class CoincidentPointsError(ConfigurationError):
    def __init__(self, i: int, j: int):
        super().__init__(f"points {i} and {j} coincide; Riesz energy is infinite")
        self.pair = (i, j)


@dataclass(frozen=True)
class EnergyParams:
    s: float

    def __post_init__(self) -> None:
        if not (self.s > 0):
            raise ValueError(f"Riesz exponent must be positive, got s={self.s}")
        if self.s > MAX_S:
            raise ValueError(f"s={self.s} exceeds the supported maximum {MAX_S}")


@dataclass(frozen=True)
class EnergyReport:
    s: float
    energy: float
    log2_energy: float
    gradient_sup_norm: float
    hessian_spectrum: tuple[float, ...]
    gauge_dim: int
    rotation_rank: int
    min_constrained_eig: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hessian_spectrum"] = list(self.hessian_spectrum)
        return d


def _params(s) -> EnergyParams:
    return s if isinstance(s, EnergyParams) else EnergyParams(float(s))


def _pair_geometry(points: np.ndarray):
    n = len(points)
    i, j = np.triu_indices(n, k=1)
    diff = points[i] - points[j]
    d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if np.any(d == 0.0):
        k = int(np.flatnonzero(d == 0.0)[0])
        raise CoincidentPointsError(int(i[k]), int(j[k]))
    return i, j, diff, d


def log2sumexp2(values: np.ndarray) -> float:
    """log2 of sum(2**values) without overflow or underflow."""
    values = np.asarray(values, dtype=np.float64)
    m = float(np.max(values))
    if not math.isfinite(m):
        return m
    return m + math.log2(float(np.sum(np.exp2(values - m))))


def log2_energy_points(points: np.ndarray, s: float) -> float:
    _, _, _, d = _pair_geometry(points)
    return 1.0 + log2sumexp2(-s * np.log2(d))


def energy_points(points: np.ndarray, s: float) -> float:
    _, _, _, d = _pair_geometry(points)
    if s > LOG_DOMAIN_S:
        # beyond double range the energy saturates; use log2_energy instead
        return float(np.exp2(1.0 + log2sumexp2(-s * np.log2(d))))
    return float(2.0 * np.sum(d ** (-s)))


def energy(config: Configuration, params) -> float:
    """E_s = sum over ordered pairs i != j of |x_i - x_j|^(-s)."""
    return energy_points(config.points, _params(params).s)


def log2_energy(config: Configuration, params) -> float:
    return log2_energy_points(config.points, _params(params).s)


def _euclidean_gradient(points: np.ndarray, s: float, log: bool = False) -> np.ndarray:
    """Ambient gradient of E (or of log E when ``log`` is set)."""
    i, j, diff, d = _pair_geometry(points)
    if log:
        expo = -s * np.log(d)
        w = np.exp(expo - expo.max())
        w /= w.sum()
        coef = -s * w / d**2
    else:
        coef = -2.0 * s * d ** (-s - 2.0)
    contrib = coef[:, None] * diff
    g = np.zeros_like(points)
    np.add.at(g, i, contrib)
    np.add.at(g, j, -contrib)
    return g


def project_tangent(points: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    radial = np.einsum("ij,ij->i", vectors, points)
    return vectors - radial[:, None] * points


def gradient_points(points: np.ndarray, s: float, log: bool = False) -> np.ndarray:
    return project_tangent(points, _euclidean_gradient(points, s, log=log))


def gradient(config: Configuration, params) -> np.ndarray:
    """Riemannian gradient of E_s: one tangent vector per point."""
    return gradient_points(config.points, _params(params).s)


def tangent_bases(points: np.ndarray) -> np.ndarray:
    """Orthonormal bases of the tangent spaces, shape (N, n+1, n)."""
    bases = []
    for x in points:
        # rows 1.. of V^T span the orthogonal complement of x
        _, _, vt = np.linalg.svd(x[None, :])
        bases.append(vt[1:].T)
    return np.array(bases)


def _scaled_hessian(points: np.ndarray, s: float):
    """Intrinsic Hessian divided by exp(shift), with shift = max_k(-s ln d_k).

    The shift keeps the entries representable for large s; it is returned so
    callers can restore absolute eigenvalues.
    """
    n, amb = points.shape
    i, j, diff, d = _pair_geometry(points)
    expo = -s * np.log(d)
    shift = float(expo.max())
    w = np.exp(expo - shift)  # d^-s / e^shift
    eye = np.eye(amb)
    # Hessian of 2 * |r|^-s in r, one block per unordered pair
    blocks = 2.0 * (
        (-s * w / d**2)[:, None, None] * eye
        + (s * (s + 2.0) * w / d**4)[:, None, None] * np.einsum("ka,kb->kab", diff, diff)
    )
    h = np.zeros((n, amb, n, amb))
    for k, (a, b) in enumerate(zip(i, j)):
        h[a, :, a, :] += blocks[k]
        h[b, :, b, :] += blocks[k]
        h[a, :, b, :] -= blocks[k]
        h[b, :, a, :] -= blocks[k]
    grad = np.zeros_like(points)
    contrib = (-2.0 * s * w / d**2)[:, None] * diff
    np.add.at(grad, i, contrib)
    np.add.at(grad, j, -contrib)
    radial = np.einsum("ij,ij->i", grad, points)

    basis = tangent_bases(points)
    dof = amb - 1
    hess = np.einsum("iap,iajb,jbq->ipjq", basis, h, basis).reshape(n * dof, n * dof)
    for a in range(n):
        sl = slice(a * dof, (a + 1) * dof)
        hess[sl, sl] -= radial[a] * np.eye(dof)
    return hess, shift, basis


def log_energy_hessian(points: np.ndarray, s: float) -> tuple[np.ndarray, np.ndarray]:
    """Intrinsic Hessian of log E_s in tangent charts, with the chart bases."""
    hess, shift, basis = _scaled_hessian(points, s)
    _, _, _, d = _pair_geometry(points)
    e_scaled = 2.0 * float(np.sum(np.exp(-s * np.log(d) - shift)))
    g = gradient_points(points, s, log=True)
    gc = np.einsum("iap,ia->ip", basis, g).reshape(-1)
    return hess / e_scaled - np.outer(gc, gc), basis


def rotation_modes(points: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Tangent-chart images of the infinitesimal rotations, one column each."""
    n, amb = points.shape
    cols = []
    for p in range(amb):
        for q in range(p + 1, amb):
            omega = np.zeros((amb, amb))
            omega[p, q], omega[q, p] = 1.0, -1.0
            moved = points @ omega.T
            cols.append(np.einsum("iap,ia->ip", basis, moved).reshape(-1))
    return np.array(cols).T


def hessian_matrix(config: Configuration, params) -> np.ndarray:
    s = _params(params).s
    hess, shift, _ = _scaled_hessian(config.points, s)
    return hess * math.exp(shift)


def hessian_spectrum(config: Configuration, params) -> EnergyReport:
    """Spectrum of the sphere-constrained Hessian with rotations deflated."""
    s = _params(params).s
    pts = config.points
    hess, shift, basis = _scaled_hessian(pts, s)
    scale = math.exp(shift)
    try:
        evals, evecs = np.linalg.eigh(hess)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigen-solver failed: {exc}") from exc

    rot = rotation_modes(pts, basis)
    u, sv, _ = np.linalg.svd(rot, full_matrices=True)
    rank = int(np.sum(sv > 1e-8 * max(sv.max(), 1.0)))
    gauge_space = u[:, :rank]
    complement = u[:, rank:]

    radius = float(np.max(np.abs(evals))) if evals.size else 0.0
    small = np.abs(evals) <= GAUGE_EIG_REL * max(radius, np.finfo(float).tiny)
    gauge_dim = 0
    if np.any(small) and rank:
        # principal angles between the near-null eigenspace and the rotation span
        cosines = np.linalg.svd(evecs[:, small].T @ gauge_space, compute_uv=False)
        gauge_dim = int(np.sum(cosines >= math.cos(GAUGE_ANGLE)))

    reduced = complement.T @ hess @ complement
    min_constrained = float(np.linalg.eigvalsh(reduced)[0]) * scale

    grad = gradient_points(pts, s)
    return EnergyReport(
        s=s,
        energy=energy_points(pts, s),
        log2_energy=log2_energy_points(pts, s),
        gradient_sup_norm=float(np.max(np.linalg.norm(grad, axis=1))),
        hessian_spectrum=tuple(float(v) * scale for v in evals),
        gauge_dim=gauge_dim,
        rotation_rank=rank,
        min_constrained_eig=min_constrained,
    )


def min_constrained_eig(config: Configuration, s: float) -> float:
    """Smallest Hessian eigenvalue transverse to rigid rotations."""
    return hessian_spectrum(config, s).min_constrained_eig


# Closed forms for the two 5-point families.


def log2_energy_bp_closed(s: float) -> float:
    return log2sumexp2(
        np.array([1.0 - s, math.log2(12.0) - s / 2.0, math.log2(6.0) - s / 2.0 * math.log2(3.0)])
    )


def energy_bp_closed(s: float) -> float:
    """Energy of the bipyramid: 2*2^-s + 12*2^(-s/2) + 6*3^(-s/2)."""
    if not s > 0:
        raise ValueError("s must be positive")
    return 2.0 * 2.0**-s + 12.0 * 2.0 ** (-s / 2.0) + 6.0 * 3.0 ** (-s / 2.0)


def _check_t(t: float) -> None:
    if not 0.0 <= t < 1.0:
        raise ValueError(f"pyramid height t must lie in [0, 1), got {t}")


def log2_energy_qt_closed(t: float, s: float) -> float:
    _check_t(t)
    base = math.log2(1.0 - t * t)
    return log2sumexp2(
        np.array(
            [
                2.0 - s - s / 2.0 * base,
                3.0 - s / 2.0 - s / 2.0 * base,
                3.0 - s / 2.0 - s / 2.0 * math.log2(1.0 + t),
            ]
        )
    )


def energy_qt_closed(t: float, s: float) -> float:
    """Energy of the square-base pyramid Q_t with apex e2 and base at height -t."""
    _check_t(t)
    u = 1.0 - t * t
    return (
        4.0 * 2.0**-s * u ** (-s / 2.0)
        + 8.0 * 2.0 ** (-s / 2.0) * u ** (-s / 2.0)
        + 8.0 * 2.0 ** (-s / 2.0) * (1.0 + t) ** (-s / 2.0)
    )


def qt_slope_sign_function(t: float, s: float) -> float:
    """A positive multiple of dE_s(Q_t)/dt, finite for every s <= MAX_S.

    Equal to 2^(s/2)/s * dE/dt, with each term evaluated through logs.
    """
    _check_t(t)
    u = 1.0 - t * t
    grow = math.exp((-s / 2.0 - 1.0) * math.log(u))
    return (
        4.0 * 2.0 ** (-s / 2.0) * t * grow
        + 8.0 * t * grow
        - 4.0 * math.exp((-s / 2.0 - 1.0) * math.log1p(t))
    )


def lemma_m_value(M: float, A: float, B: float, s: float, x: float) -> float:
    """f(x) = M (1 - A x)^-s + (1 + B x)^-s."""
    if not (M > 0 and A > 0 and B > 0 and s > 0):
        raise ValueError("M, A, B and s must be positive")
    if not 0.0 <= x < 1.0 / A:
        raise ValueError(f"x must lie in [0, 1/A) = [0, {1.0 / A}), got {x}")
    return M * (1.0 - A * x) ** (-s) + (1.0 + B * x) ** (-s)


def lemma_m_bound(M: float, A: float, B: float) -> float:
    if not (M > 0 and A > 0 and B > 0):
        raise ValueError("M, A and B must be positive")
    return M + min(1.0, A * M / B)


def lemma_m_minimizer(M: float, A: float, B: float, s: float) -> float:
    """Location of the minimum of f on [0, 1/A)."""
    if B <= A * M:
        return 0.0
    r = (B / (A * M)) ** (1.0 / (s + 1.0))
    return (r - 1.0) / (B + A * r)
