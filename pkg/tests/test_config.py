import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SQRT2, random_points
from meshratio import catalog
from meshratio.config import (
    Configuration,
    ConfigurationError,
    contact_graph,
    distance_multiset,
    is_isometric_signature,
    random_rotation,
    separation,
)


def brute_min_distance(points):
    best = math.inf
    for a in range(len(points)):
        for b in range(a + 1, len(points)):
            best = min(best, math.dist(points[a], points[b]))
    return best


@pytest.mark.parametrize(
    "config, expected",
    [
        (catalog.sbp_inf(), SQRT2),
        (catalog.antipodal(), 2.0),
        (catalog.tetrahedron(), math.sqrt(8.0 / 3.0)),
    ],
)
def test_separation_examples(config, expected):
    assert separation(config) == pytest.approx(expected, abs=1e-14)
    assert separation(config) == pytest.approx(brute_min_distance(config.points.tolist()), abs=1e-15)


def test_contact_graph_examples():
    g = contact_graph(catalog.sbp_inf(), 1e-9)
    assert g.n_edges == 8
    assert g.delta == pytest.approx(SQRT2)
    assert contact_graph(catalog.antipodal(), 1e-9).edges == ((0, 1),)
    bp = contact_graph(catalog.bp(), 1e-9)
    assert bp.n_edges == 6
    # every bipyramid contact joins a pole (index 0 or 1) to the equator
    assert all(i in (0, 1) and j >= 2 for i, j in bp.edges)


def test_contact_graph_rejects_bad_tolerance():
    with pytest.raises(ValueError):
        contact_graph(catalog.bp(), 0.02)
    with pytest.raises(ValueError):
        contact_graph(catalog.bp(), -1e-3)


def test_contact_graph_recovers_edges_after_perturbation(rng):
    base = catalog.sbp_inf()
    expected = contact_graph(base, 0.0).edges
    noisy = base.points + 1e-6 * rng.standard_normal(base.points.shape)
    perturbed = Configuration(2, noisy / np.linalg.norm(noisy, axis=1)[:, None])
    assert contact_graph(perturbed, 1e-4).edges == expected


def test_distance_multisets():
    np.testing.assert_allclose(distance_multiset(catalog.sbp_inf()), [SQRT2] * 8 + [2.0] * 2, atol=1e-15)
    np.testing.assert_allclose(distance_multiset(catalog.antipodal()), [2.0])
    np.testing.assert_allclose(
        distance_multiset(catalog.bp()), [SQRT2] * 6 + [math.sqrt(3.0)] * 3 + [2.0], atol=1e-15
    )


def test_isometric_signature(rng):
    sbp = catalog.sbp_inf()
    assert is_isometric_signature(sbp, sbp.transformed(random_rotation(2, rng)))
    assert not is_isometric_signature(sbp, catalog.bp())
    square = catalog.square()
    mirror = square.transformed(np.diag([1.0, -1.0, 1.0]))
    assert is_isometric_signature(square, mirror)
    with pytest.raises(ConfigurationError):
        is_isometric_signature(sbp, catalog.tetrahedron())


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 20), st.integers(0, 2**32 - 1))
def test_separation_rotation_invariant(n, seed):
    rng = np.random.default_rng(seed)
    cfg = Configuration(2, random_points(rng, n))
    rotated = cfg.transformed(random_rotation(2, rng))
    assert separation(rotated) == pytest.approx(separation(cfg), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 20), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_separation_at_most_diameter(n, dim, seed):
    rng = np.random.default_rng(seed)
    pts = random_points(rng, n, dim)
    cfg = Configuration(dim, pts)
    assert separation(cfg) <= 2.0 + 1e-15
    with_antipode = Configuration(dim, np.vstack([pts[:1], -pts[:1]]))
    assert separation(with_antipode) == pytest.approx(2.0, abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 15), st.integers(0, 2**32 - 1))
def test_distance_multiset_permutation_invariant(n, seed):
    rng = np.random.default_rng(seed)
    pts = random_points(rng, n)
    a = Configuration(2, pts)
    b = Configuration(2, pts[rng.permutation(n)])
    np.testing.assert_array_equal(distance_multiset(a), distance_multiset(b))


def test_constructor_renormalizes_small_drift():
    cfg = Configuration(2, [[1.0 + 5e-7, 0.0, 0.0], [0.0, 0.0, -1.0]])
    assert np.all(np.abs(np.linalg.norm(cfg.points, axis=1) - 1.0) <= 1e-12)


@pytest.mark.parametrize(
    "dim, points, match",
    [
        (2, [[1.1, 0.0, 0.0], [0.0, 1.0, 0.0]], "norm"),
        (2, [[1.0, 0.0, 0.0]], "N >= 2"),
        (2, [[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]], "coincide"),
        (2, [[1.0, 0.0], [0.0, 1.0]], "shape"),
        (0, [[1.0], [-1.0]], "dim"),
    ],
)
def test_constructor_rejects(dim, points, match):
    with pytest.raises(ConfigurationError, match=match):
        Configuration(dim, points)


def test_points_are_read_only():
    cfg = catalog.bp()
    with pytest.raises(ValueError):
        cfg.points[0, 0] = 3.0


def test_json_round_trip_is_lossless():
    cfg = catalog.icosahedron()
    back = Configuration.from_json(cfg.to_json())
    np.testing.assert_array_equal(back.points, cfg.points)
    assert back.digest() == cfg.digest()
    data = json.loads(cfg.to_json())
    assert set(data) == {"dim", "points"}


def test_json_reader_ignores_extra_keys_and_rejects_garbage():
    text = json.dumps({"dim": 2, "points": [[0, 0, 1], [0, 0, -1]], "meta": {"seed": 0}})
    assert Configuration.from_json(text).n_points == 2
    with pytest.raises(ConfigurationError):
        Configuration.from_json("{not json")
    with pytest.raises(ConfigurationError):
        Configuration.from_json('{"points": []}')
