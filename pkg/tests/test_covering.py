import math

import numpy as np
import pytest
from scipy.optimize import minimize as scipy_minimize
from scipy.spatial import cKDTree

from conftest import ICOSA_EDGE, SQRT2, random_points
from meshratio import catalog, covering
from meshratio.config import Configuration, random_rotation, separation

BP_ETA = math.sqrt(2.0 - 2.0 / math.sqrt(5.0))


def dense_oracle(points, n=1_000_000):
    """Independent covering-radius estimate: 10^6 Fibonacci samples, then Nelder-Mead."""
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    r = np.sqrt(1 - z * z)
    th = math.pi * (1 + 5**0.5) * k
    grid = np.column_stack([r * np.cos(th), r * np.sin(th), z])
    dist, _ = cKDTree(points).query(grid)
    start = grid[np.argmax(dist)]

    def neg(angles):
        t, p = angles
        y = np.array([math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), math.cos(t)])
        return -np.min(np.linalg.norm(points - y, axis=1))

    t0 = math.acos(np.clip(start[2], -1, 1))
    p0 = math.atan2(start[1], start[0])
    res = scipy_minimize(neg, [t0, p0], method="Nelder-Mead", options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 5000})
    return max(-res.fun, dist.max())


def test_exact_sbp_inf_matches_dense_oracle():
    cfg = catalog.sbp_inf()
    res = covering.mesh_norm_exact_s2(cfg)
    assert res.eta == pytest.approx(SQRT2, abs=1e-12)
    assert res.certified_gap == 0.0
    assert dense_oracle(cfg.points) == pytest.approx(SQRT2, abs=1e-9)


def test_exact_bp_and_witness():
    cfg = catalog.bp()
    res = covering.mesh_norm_exact_s2(cfg)
    assert res.eta == pytest.approx(BP_ETA, abs=1e-12)
    assert dense_oracle(cfg.points) == pytest.approx(BP_ETA, abs=1e-9)
    # analytic equidistant point of e3, (1,0,0), (-1/2, sqrt3/2, 0)
    analytic = np.array([1.0, math.sqrt(3.0), 1.0]) / math.sqrt(5.0)
    for y in (analytic,):
        d = np.linalg.norm(cfg.points - y, axis=1)
        assert np.min(d) == pytest.approx(BP_ETA, abs=1e-14)
    assert np.min(np.linalg.norm(cfg.points - res.witness, axis=1)) == pytest.approx(res.eta, abs=1e-10)


def test_exact_icosahedron_minus_vertex():
    cfg = catalog.icosahedron_minus_vertex()
    res = covering.mesh_norm_exact_s2(cfg)
    assert res.eta == pytest.approx(ICOSA_EDGE, abs=1e-9)
    assert res.eta / separation(cfg) == pytest.approx(1.0, abs=1e-9)


def test_full_icosahedron_covers_better_than_it_packs():
    cfg = catalog.icosahedron()
    assert covering.mesh_norm_exact_s2(cfg).eta < separation(cfg)


def test_exact_rejects_unsuitable_input():
    with pytest.raises(covering.OriginNotInteriorError):
        covering.mesh_norm_exact_s2(catalog.antipodal())
    with pytest.raises(covering.OriginNotInteriorError):
        covering.mesh_norm_exact_s2(catalog.square())
    cap_pts = np.array([[0, 0, 1], [0.1, 0, 0.995], [0, 0.1, 0.995], [0.1, 0.1, 0.99]])
    cap = Configuration(2, cap_pts / np.linalg.norm(cap_pts, axis=1)[:, None])
    with pytest.raises(covering.OriginNotInteriorError):
        covering.mesh_norm_exact_s2(cap)
    with pytest.raises(ValueError):
        covering.mesh_norm_exact_s2(catalog.cell600())


def test_sampled_examples():
    res = covering.mesh_norm_sampled(catalog.sbp_inf(), 100_000)
    assert SQRT2 - 1e-4 <= res.eta <= SQRT2 + 1e-9
    res = covering.mesh_norm_sampled(catalog.antipodal(), 100_000)
    assert SQRT2 - 1e-4 <= res.eta <= SQRT2 + 1e-15
    assert np.min(np.linalg.norm(catalog.antipodal().points - res.witness, axis=1)) == pytest.approx(res.eta, abs=1e-10)


def test_sampled_cell600_minus7():
    cfg = catalog.cell600_minus7()
    res = covering.mesh_norm_sampled(cfg)
    bound = math.sqrt(2 - (3 + math.sqrt(5)) / math.sqrt(10 + 2 * math.sqrt(5)))
    assert res.eta >= bound - 1e-6
    assert res.eta / separation(cfg) >= 1.2778 - 1e-3
    assert res.method == covering.SAMPLED and res.certified_gap > 0


def test_sampled_is_deterministic():
    cfg = catalog.cell600_minus7()
    a = covering.mesh_norm_sampled(cfg, 20_000, 8, 3)
    b = covering.mesh_norm_sampled(cfg, 20_000, 8, 3)
    assert a.eta == b.eta
    np.testing.assert_array_equal(a.witness, b.witness)


def test_sampled_rejects_small_budget():
    with pytest.raises(ValueError):
        covering.mesh_norm_sampled(catalog.bp(), 500)


def test_fibonacci_gap_is_a_true_covering_radius():
    n = 5000
    seeds = covering.fibonacci_sphere(n)
    gap = covering.fibonacci_covering_radius(n)
    probes = np.random.default_rng(0).standard_normal((200_000, 3))
    probes /= np.linalg.norm(probes, axis=1)[:, None]
    dist, _ = cKDTree(seeds).query(probes)
    assert dist.max() <= gap
    assert dist.max() >= 0.8 * gap


def test_exact_and_sampled_agree_within_gap():
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 50:
        n = int(rng.integers(5, 31))
        cfg = Configuration(2, random_points(rng, n))
        try:
            exact = covering.mesh_norm_exact_s2(cfg)
        except covering.OriginNotInteriorError:
            continue
        sampled = covering.mesh_norm_sampled(cfg, 100_000, 8)
        assert sampled.eta <= exact.eta + 1e-12
        assert exact.eta - sampled.eta <= sampled.certified_gap
        checked += 1


def test_rotation_invariance(rng):
    for _ in range(10):
        cfg = Configuration(2, random_points(rng, 20))
        rotated = cfg.transformed(random_rotation(2, rng))
        assert covering.mesh_norm_exact_s2(rotated).eta == pytest.approx(covering.mesh_norm_exact_s2(cfg).eta, abs=1e-10)


def test_adding_points_never_increases_eta_or_delta(rng):
    for _ in range(20):
        pts = random_points(rng, 10)
        small = Configuration(2, pts[:9])
        big = Configuration(2, pts)
        try:
            eta_small = covering.mesh_norm_exact_s2(small).eta
        except covering.OriginNotInteriorError:
            continue
        assert covering.mesh_norm_exact_s2(big).eta <= eta_small + 1e-15
        assert separation(big) <= separation(small)


def test_gamma_at_least_half_on_sphere(rng):
    for _ in range(30):
        cfg = Configuration(2, random_points(rng, int(rng.integers(4, 25))))
        rep = covering.diagnose(cfg)
        assert rep.gamma >= 0.5


def test_diagnose_examples():
    rep = covering.diagnose(catalog.sbp_inf())
    assert (rep.delta, rep.eta, rep.gamma, rep.contact_edges) == (
        pytest.approx(SQRT2),
        pytest.approx(SQRT2, abs=1e-12),
        pytest.approx(1.0, abs=1e-12),
        8,
    )
    rep = covering.diagnose(catalog.bp())
    assert rep.gamma == pytest.approx(BP_ETA / SQRT2, abs=1e-12)
    assert rep.gamma == pytest.approx(0.743496, abs=1e-6)
    rep = covering.diagnose(catalog.cell600_minus7())
    assert rep.method == covering.SAMPLED
    assert rep.gamma >= 1.2778 - 1e-3
    assert rep.gamma * rep.delta == pytest.approx(rep.eta, rel=1e-12)


def test_diagnose_falls_back_to_sampling():
    rep = covering.diagnose(catalog.square())
    assert rep.method == covering.SAMPLED
    assert rep.eta == pytest.approx(SQRT2, abs=1e-9)


def test_gamma_reference_bounds():
    hexagonal = covering.gamma_lower_bound_s2("hexagonal")
    pentagonal = covering.gamma_lower_bound_s2("pentagonal")
    assert hexagonal == pytest.approx(1 / math.sqrt(3), abs=1e-15)
    assert hexagonal == pytest.approx(0.5773503, abs=1e-7)
    assert pentagonal == pytest.approx(2 / (1 + math.sqrt(5)), abs=1e-15)
    assert pentagonal == pytest.approx(0.6180340, abs=1e-7)
    assert pentagonal > hexagonal
    with pytest.raises(ValueError):
        covering.gamma_lower_bound_s2("cubic")
