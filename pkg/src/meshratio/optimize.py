"""Riesz energy minimization on S^n and the 5-point studies built on it.

The descent works on log E_s rather than E_s: the two share minimizers and
line-search decisions, but log E stays O(1) for every s up to ``MAX_S``.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import riesz
from .catalog import bp, q_t
from .config import Configuration, separation
from .covering import mesh_norm_sampled

logger = logging.getLogger(__name__)

DEFAULT_RESTARTS = 64
DEFAULT_MAX_ITERS = 20_000
DEFAULT_GRAD_TOL = 1e-10
LBFGS_MEMORY = 12
ARMIJO = 1e-4
ROUNDING_FLOOR = 1e-13
NEWTON_STEPS = 30
MIN_START_SEPARATION = 1e-3
# largest displacement of any point in one step, as a fraction of the separation
MAX_STEP_FRACTION = 0.25
CONTINUATION_NOISE = 1e-4
CONTINUATION_RATIO = 1.25

SWEEP_COLUMNS = (
    "s",
    "e_bp_log2",
    "e_sbp_log2",
    "t_star",
    "ratio",
    "min_eig_bp",
    "min_eig_sbp",
    "e_min_log2",
    "scaled_energy",
)


class CollisionError(RuntimeError):
    """Two points met during descent; the energy is no longer finite."""


class MeshBoundViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class MinimizeSpec:
    dim: int
    n: int
    s: float
    restarts: int = DEFAULT_RESTARTS
    rng_seed: int = 0
    max_iters: int = DEFAULT_MAX_ITERS
    grad_tol: float = DEFAULT_GRAD_TOL
    init: str = "random"
    start: Configuration | None = None
    threads: int = 1

    def __post_init__(self) -> None:
        riesz.EnergyParams(self.s)
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.n < 2:
            raise ValueError("need at least two points")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if self.init not in ("random", "given", "continuation"):
            raise ValueError(f"unknown init mode {self.init!r}")
        if self.init != "random":
            if self.start is None:
                raise ValueError(f"init={self.init!r} needs a start configuration")
            if self.start.dim != self.dim or self.start.n_points != self.n:
                raise ValueError("start configuration does not match dim/n")


@dataclass(frozen=True)
class MinimizeResult:
    """Best restart. ``grad_sup_norm`` is max_i |grad_i E| / E."""

    config: Configuration
    energy: float
    log2_energy: float
    grad_sup_norm: float
    restart_index: int
    iterations: int
    converged: bool
    discarded: int = 0


@dataclass(frozen=True)
class SweepRow:
    s: float
    e_bp: float
    e_sbp_opt: float
    t_star: float
    ratio_bp_over_sbp: float
    min_eig_bp: float
    min_eig_sbp: float
    e_min_numeric: float
    scaled_energy: float

    def as_csv_row(self) -> list[str]:
        return [
            repr(float(v))
            for v in (
                self.s,
                self.e_bp,
                self.e_sbp_opt,
                self.t_star,
                self.ratio_bp_over_sbp,
                self.min_eig_bp,
                self.min_eig_sbp,
                self.e_min_numeric,
                self.scaled_energy,
            )
        ]


@dataclass
class DescentTrace:
    log2_energies: list[float] = field(default_factory=list)


def _normalize(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=1)[:, None]


def _min_pair_distance(x: np.ndarray) -> float:
    i, j = np.triu_indices(len(x), k=1)
    return float(np.min(np.linalg.norm(x[i] - x[j], axis=1)))


def _log_energy(x: np.ndarray, s: float) -> float:
    try:
        return riesz.log2_energy_points(x, s) * math.log(2.0)
    except riesz.CoincidentPointsError as exc:
        raise CollisionError(str(exc)) from exc


def descend(
    points: np.ndarray,
    s: float,
    max_iters: int = DEFAULT_MAX_ITERS,
    grad_tol: float = DEFAULT_GRAD_TOL,
    trace: DescentTrace | None = None,
) -> tuple[np.ndarray, int, float, bool]:
    """Riemannian L-BFGS on log E_s with renormalization as the retraction.

    Returns (points, iterations, sup-norm of grad log E, converged). Accepted
    steps never raise the energy by more than the rounding resolution of
    log E; away from that floor they satisfy the Armijo condition. A Newton
    polish finishes the run when line search stalls short of ``grad_tol``.
    """
    x = _normalize(np.array(points, dtype=np.float64))
    f = _log_energy(x, s)
    g = riesz.gradient_points(x, s, log=True)
    mem_s: list[np.ndarray] = []
    mem_y: list[np.ndarray] = []
    if trace is not None:
        trace.log2_energies.append(f / math.log(2.0))
    it = 0
    gnorm = float(np.max(np.linalg.norm(g, axis=1)))
    stalls = 0
    while it < max_iters:
        if gnorm <= grad_tol:
            return x, it, gnorm, True
        it += 1
        # two-loop recursion; stored pairs are re-projected onto the current tangent space
        q = g.copy()
        alphas = []
        pairs = [(riesz.project_tangent(x, sk), riesz.project_tangent(x, yk)) for sk, yk in zip(mem_s, mem_y)]
        pairs = [(sk, yk, float(np.sum(sk * yk))) for sk, yk in pairs]
        pairs = [p for p in pairs if p[2] > 1e-300]
        for sk, yk, sy in reversed(pairs):
            a = float(np.sum(sk * q)) / sy
            alphas.append(a)
            q -= a * yk
        if pairs:
            sk, yk, sy = pairs[-1]
            q *= sy / float(np.sum(yk * yk))
        else:
            q *= 1.0 / max(gnorm, 1e-300) * 0.1
        for (sk, yk, sy), a in zip(pairs, reversed(alphas)):
            b = float(np.sum(yk * q)) / sy
            q += (a - b) * sk
        direction = -riesz.project_tangent(x, q)
        slope = float(np.sum(direction * g))
        if not slope < 0:
            direction = -g * (0.1 / max(gnorm, 1e-300))
            slope = float(np.sum(direction * g))
            mem_s.clear()
            mem_y.clear()

        cap = MAX_STEP_FRACTION * _min_pair_distance(x) / float(np.max(np.linalg.norm(direction, axis=1)))
        alpha = min(1.0, cap)
        accepted = False
        g_new = None
        while alpha > 1e-20:
            x_new = _normalize(x + alpha * direction)
            try:
                f_new = _log_energy(x_new, s)
            except CollisionError:
                f_new = math.inf
            if f_new <= f + ARMIJO * alpha * slope and f_new < f:
                accepted = True
                break
            if f_new <= f and -alpha * slope < ROUNDING_FLOOR * max(1.0, abs(f)):
                # predicted decrease is below the resolution of f: accept a
                # non-increasing step only if it shrinks the gradient
                g_try = riesz.gradient_points(x_new, s, log=True)
                if float(np.max(np.linalg.norm(g_try, axis=1))) < gnorm:
                    g_new = g_try
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            stalls += 1
            if not (mem_s or stalls == 1):
                # steepest descent cannot decrease the energy any more: rounding floor
                break
            mem_s.clear()
            mem_y.clear()
            continue
        stalls = 0
        if g_new is None:
            g_new = riesz.gradient_points(x_new, s, log=True)
        mem_s.append(x_new - x)
        mem_y.append(g_new - riesz.project_tangent(x_new, g))
        if len(mem_s) > LBFGS_MEMORY:
            mem_s.pop(0)
            mem_y.pop(0)
        x, f, g = x_new, f_new, g_new
        gnorm = float(np.max(np.linalg.norm(g, axis=1)))
        if trace is not None:
            trace.log2_energies.append(f / math.log(2.0))
    if gnorm > grad_tol and it < max_iters:
        x, extra, gnorm = _newton_polish(x, s, f, gnorm, grad_tol, max_iters - it, trace)
        it += extra
    return x, it, gnorm, gnorm <= grad_tol


def _newton_polish(x, s, f, gnorm, grad_tol, budget, trace):
    """Riemannian Newton steps transverse to rotations.

    Used once line search can no longer resolve energy decreases. A step is
    kept only if it shrinks the gradient without raising log E beyond its
    rounding resolution. Stops at the first non-convex or unproductive point.
    """
    n, amb = x.shape
    dof = amb - 1
    steps = 0
    while gnorm > grad_tol and steps < min(budget, NEWTON_STEPS):
        hess, basis = riesz.log_energy_hessian(x, s)
        g = riesz.gradient_points(x, s, log=True)
        gc = np.einsum("iap,ia->ip", basis, g).reshape(-1)
        u, sv, _ = np.linalg.svd(riesz.rotation_modes(x, basis), full_matrices=True)
        rank = int(np.sum(sv > 1e-8 * max(sv.max(), 1.0)))
        comp = u[:, rank:]
        reduced = comp.T @ hess @ comp
        evals = np.linalg.eigvalsh(reduced)
        if evals[0] <= 0:
            break
        v = -comp @ np.linalg.solve(reduced, comp.T @ gc)
        disp = np.einsum("iap,ip->ia", basis, v.reshape(n, dof))
        slack = ROUNDING_FLOOR * max(1.0, abs(f))
        alpha = 1.0
        moved = False
        while alpha >= 1.0 / 64:
            x_new = _normalize(x + alpha * disp)
            try:
                f_new = _log_energy(x_new, s)
            except CollisionError:
                f_new = math.inf
            if f_new <= f + slack:
                g_new = riesz.gradient_points(x_new, s, log=True)
                gn_new = float(np.max(np.linalg.norm(g_new, axis=1)))
                if gn_new < gnorm:
                    x, f, gnorm = x_new, min(f, f_new), gn_new
                    moved = True
                    break
            alpha *= 0.5
        steps += 1
        if not moved:
            break
        if trace is not None:
            trace.log2_energies.append(f / math.log(2.0))
    return x, steps, gnorm


def _restart_rng(rng_seed: int, restart_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([rng_seed, restart_index]))


def random_start(dim: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points on S^dim, redrawn while any pair is nearly coincident."""
    while True:
        x = _normalize(rng.standard_normal((n, dim + 1)))
        if _min_pair_distance(x) >= MIN_START_SEPARATION:
            return x


def _perturbed(start: np.ndarray, rng: np.random.Generator, scale: float) -> np.ndarray:
    noise = riesz.project_tangent(start, rng.standard_normal(start.shape))
    return _normalize(start + scale * noise)


def _initial_points(spec: MinimizeSpec, k: int) -> np.ndarray:
    rng = _restart_rng(spec.rng_seed, k)
    if spec.init == "random":
        return random_start(spec.dim, spec.n, rng)
    start = spec.start.points
    if spec.init == "given":
        return start.copy() if k == 0 else random_start(spec.dim, spec.n, rng)
    return _perturbed(start, rng, CONTINUATION_NOISE)


def _run_restart(spec: MinimizeSpec, k: int):
    x0 = _initial_points(spec, k)
    try:
        x, iters, gnorm, converged = descend(x0, spec.s, spec.max_iters, spec.grad_tol)
    except CollisionError as exc:
        logger.info("restart %d discarded: %s", k, exc)
        return None
    return k, x, riesz.log2_energy_points(x, spec.s), gnorm, iters, converged


def minimize(spec: MinimizeSpec) -> MinimizeResult:
    """Multi-start minimization; the lowest energy wins, ties go to the lowest restart index."""
    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            runs = list(pool.map(lambda k: _run_restart(spec, k), range(spec.restarts)))
    else:
        runs = [_run_restart(spec, k) for k in range(spec.restarts)]
    good = [r for r in runs if r is not None]
    if not good:
        raise CollisionError(f"all {spec.restarts} restarts collided")
    best = min(good, key=lambda r: (r[2], r[0]))
    k, x, log2e, gnorm, iters, converged = best
    cfg = Configuration(spec.dim, x)
    return MinimizeResult(
        config=cfg,
        energy=riesz.energy_points(cfg.points, spec.s),
        log2_energy=log2e,
        grad_sup_norm=gnorm,
        restart_index=k,
        iterations=iters,
        converged=converged,
        discarded=len(runs) - len(good),
    )


# Square-base pyramid height


def _golden_section(f: Callable[[float], float], lo: float, hi: float, iters: int = 80) -> float:
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def sbp_height_opt(s: float) -> tuple[float, float]:
    """Energy-optimal height t* of the square-base pyramid Q_t and E_s(Q_t*).

    Golden-section search on log E_s(Q_t), then bisection on the sign of
    dE/dt until the bracket is below 1e-12.
    """
    riesz.EnergyParams(s)
    t_hi = 1.0 - 1e-9
    t0 = _golden_section(lambda t: riesz.log2_energy_qt_closed(t, s), 0.0, t_hi)
    slope = lambda t: riesz.qt_slope_sign_function(t, s)  # noqa: E731
    width = 1e-4
    a, b = max(0.0, t0 - width), min(t_hi, t0 + width)
    while slope(a) > 0 and a > 0:
        a = max(0.0, a - width)
        width *= 2
    width = 1e-4
    while slope(b) < 0 and b < t_hi:
        b = min(t_hi, b + width)
        width *= 2
    if not (slope(a) <= 0 <= slope(b)):
        raise RuntimeError(f"could not bracket the optimal pyramid height at s={s}")
    while b - a > 1e-12:
        m = 0.5 * (a + b)
        if m in (a, b):
            break
        if slope(m) < 0:
            a = m
        else:
            b = m
    t_star = 0.5 * (a + b)
    return t_star, riesz.energy_qt_closed(t_star, s)


def bp_vs_sbp_log2_gap(s: float) -> float:
    """log2 E_s(BP) - log2 E_s(SBP*(s)); negative where the bipyramid is lower."""
    t_star, _ = sbp_height_opt(s)
    return riesz.log2_energy_bp_closed(s) - riesz.log2_energy_qt_closed(t_star, s)


def _bisect(f: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError(f"no sign change on [{lo}, {hi}]: f={flo:.3g}, {fhi:.3g}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def crossing_s_star(lo: float = 10.0, hi: float = 20.0, tol: float = 1e-6) -> float:
    """Exponent where the bipyramid and the optimal square pyramid have equal energy."""
    return _bisect(bp_vs_sbp_log2_gap, lo, hi, tol)


def bp_instability_threshold(lo: float = 20.0, hi: float = 23.0, tol: float = 1e-6) -> float:
    """Exponent where the bipyramid stops being a local minimum."""
    cfg = bp()
    return _bisect(lambda s: riesz.min_constrained_eig(cfg, s), lo, hi, tol)


def sbp_stability_threshold(lo: float = 12.5, hi: float = 14.5, tol: float = 1e-6) -> float:
    """Exponent below which the optimal square pyramid stops being a local minimum."""
    return _bisect(lambda s: riesz.min_constrained_eig(q_t(sbp_height_opt(s)[0]), s), lo, hi, tol)


# Sweeps and continuation


def _s_grid(s_min: float, s_max: float, step: float) -> list[float]:
    if not 0 < s_min < s_max:
        raise ValueError("need 0 < s_min < s_max")
    if not step > 0:
        raise ValueError("step must be positive")
    count = int(math.floor((s_max - s_min) / step + 1e-9))
    return [round(s_min + k * step, 12) for k in range(count + 1)]


def five_point_numeric_log2(s: float, restarts: int, rng_seed: int = 0, threads: int = 1) -> MinimizeResult:
    return minimize(MinimizeSpec(2, 5, s, restarts=restarts, rng_seed=rng_seed, threads=threads))


def sweep_row(s: float, restarts: int = 0, rng_seed: int = 0, threads: int = 1) -> SweepRow:
    t_star, _ = sbp_height_opt(s)
    e_bp = riesz.log2_energy_bp_closed(s)
    e_sbp = riesz.log2_energy_qt_closed(t_star, s)
    if restarts > 0:
        e_min = five_point_numeric_log2(s, restarts, rng_seed, threads).log2_energy
        scaled = 2.0 ** (s / 2.0 + e_min)
    else:
        e_min = scaled = math.nan
    return SweepRow(
        s=s,
        e_bp=e_bp,
        e_sbp_opt=e_sbp,
        t_star=t_star,
        ratio_bp_over_sbp=2.0 ** (e_bp - e_sbp),
        min_eig_bp=riesz.min_constrained_eig(bp(), s),
        min_eig_sbp=riesz.min_constrained_eig(q_t(t_star), s),
        e_min_numeric=e_min,
        scaled_energy=scaled,
    )


def sweep(
    s_min: float,
    s_max: float,
    step: float,
    restarts: int = 0,
    rng_seed: int = 0,
    threads: int = 1,
) -> list[SweepRow]:
    """Closed-form and stability data for the 5-point problem on a grid of s.

    ``restarts > 0`` adds a multi-start numeric estimate of the minimal energy.
    """
    return [sweep_row(s, restarts, rng_seed, threads) for s in _s_grid(s_min, s_max, step)]


def sweep_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow(row.as_csv_row())
    return buf.getvalue()


def geometric_schedule(s_start: float, s_end: float, ratio: float = CONTINUATION_RATIO) -> list[float]:
    """s_start, s_start*ratio, ... capped with s_end as the last entry."""
    if not 0 < s_start < s_end:
        raise ValueError("need 0 < s_start < s_end")
    out = [s_start]
    while out[-1] * ratio < s_end:
        out.append(out[-1] * ratio)
    out.append(s_end)
    return out


@dataclass(frozen=True)
class ContinuationStage:
    s: float
    log2_energy: float
    delta: float
    eta: float
    eta_gap: float
    mesh_bound: float
    converged: bool


@dataclass(frozen=True)
class PackingResult:
    config: Configuration
    delta_estimate: float
    stages: tuple[ContinuationStage, ...]


def packing_via_large_s(
    dim: int,
    n: int,
    s_schedule: Sequence[float],
    restarts: int = DEFAULT_RESTARTS,
    rng_seed: int = 0,
    continuation_restarts: int = 4,
    mesh_seeds: int = 10_000,
    mesh_polish: int = 8,
    threads: int = 1,
) -> PackingResult:
    """Track energy minimizers as s grows; E_s^(-1/s) estimates the best-packing distance.

    Each stage restarts from small tangent perturbations of the previous
    minimizer so the branch can leave a point that turned into a saddle.
    After every stage the covering radius is checked against N^(2/s) * delta.
    """
    sched = [float(v) for v in s_schedule]
    if not sched or any(b <= a for a, b in zip(sched, sched[1:])):
        raise ValueError("s_schedule must be strictly increasing")
    if sched[-1] > riesz.MAX_S:
        raise ValueError(f"s_schedule may not exceed {riesz.MAX_S}")
    stages = []
    current: Configuration | None = None
    for idx, s in enumerate(sched):
        if current is None:
            spec = MinimizeSpec(dim, n, s, restarts=restarts, rng_seed=rng_seed, threads=threads)
        else:
            spec = MinimizeSpec(
                dim,
                n,
                s,
                restarts=continuation_restarts,
                rng_seed=rng_seed + 1_000_003 * idx,
                init="continuation",
                start=current,
                threads=threads,
            )
        res = minimize(spec)
        current = res.config
        delta = separation(current)
        mesh = mesh_norm_sampled(current, mesh_seeds, mesh_polish, rng_seed)
        bound = n ** (2.0 / s) * delta
        stages.append(
            ContinuationStage(s, res.log2_energy, delta, mesh.eta, mesh.certified_gap, bound, res.converged)
        )
        if mesh.eta > bound + mesh.certified_gap:
            raise MeshBoundViolation(
                f"s={s}: covering radius {mesh.eta:.6g} exceeds N^(2/s) delta = {bound:.6g}"
            )
    final = stages[-1]
    return PackingResult(
        config=current,
        delta_estimate=2.0 ** (-final.log2_energy / final.s),
        stages=tuple(stages),
    )
