import numpy as np
import pytest
from conftest import bundled_patch, random_points
from hypothesis import given, settings
from hypothesis import strategies as st

from hypercongruence.classify import (
    DefiniteMetricError,
    classify_point,
    cone_proportionality_fit,
    density_scan,
    sample_isotropic,
)
from hypercongruence.surface import chart_grid, point_geometry

G = np.diag([-1.0, 1.0, 1.0])


def test_samples_lie_on_cone():
    for seed in range(5):
        xs = sample_isotropic(G, 64, seed).vectors
        assert np.max(np.abs(np.einsum("ki,ij,kj->k", xs, G, xs))) <= 1e-10


def test_parametrized_cone():
    th = np.linspace(0, 2 * np.pi, 50)
    xi = np.stack([np.ones_like(th), np.cos(th), np.sin(th)], axis=1)
    assert np.max(np.abs(np.einsum("ki,ij,kj->k", xi, G, xi))) <= 1e-15


def test_definite_metric_rejected():
    with pytest.raises(DefiniteMetricError):
        sample_isotropic(np.eye(3))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(3, 5))
def test_samples_on_random_indefinite_metrics(seed, n):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, n))
    w = np.concatenate([-rng.uniform(0.2, 3, k), rng.uniform(0.2, 3, n - k)])
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    g = Q @ np.diag(w) @ Q.T
    xs = sample_isotropic(g, 32, seed).vectors
    np.testing.assert_allclose(np.linalg.norm(xs, axis=1), 1.0)
    assert np.max(np.abs(np.einsum("ki,ij,kj->k", xs, g, xs))) <= 1e-10 * np.max(np.abs(w))


def test_cone_fit_examples():
    s = sample_isotropic(G, 64, 0)
    out = cone_proportionality_fit(3 * G, G, s)
    assert out.proportional and out.c == pytest.approx(3, abs=1e-12)
    out = cone_proportionality_fit(np.zeros((3, 3)), G, s)
    assert out.proportional and out.c == 0
    L = np.diag([-1.0, 1.0, 2.0])
    out = cone_proportionality_fit(L, G, s)
    assert not out.proportional
    xi = out.witness
    assert abs(xi @ G @ xi) <= 1e-10 and abs(xi @ L @ xi) > 1e-3
    assert np.array([1, 0, 1]) @ L @ np.array([1, 0, 1]) == 1


def test_cone_fit_deterministic_for_seed():
    a = sample_isotropic(G, 64, 7).vectors
    b = sample_isotropic(G, 64, 7).vectors
    assert np.array_equal(a, b)


@pytest.mark.parametrize("scene,r", [("sphere1", 1.0), ("sphere2", 2.0)])
def test_sphere_points_umbilic(scene, r):
    p = bundled_patch(scene)
    for u in random_points(p, 5):
        pc = classify_point(point_geometry(p, u))
        assert pc.kind == "umbilic" and abs(pc.alpha) == pytest.approx(1 / r)


def test_cylinder_quasi_umbilic():
    p = bundled_patch("cylinder")
    pg = point_geometry(p, np.array([1.0, 0.3, -0.2]))
    pc = classify_point(pg)
    assert pc.kind == "quasi_umbilic"
    assert pc.alpha == pytest.approx(0, abs=1e-12)
    np.testing.assert_allclose(pc.omega, [1, 0, 0], atol=1e-12)
    assert abs(pc.beta) == pytest.approx(1.5)
    np.testing.assert_allclose(pc.reconstruct(pg.g), pg.h, atol=1e-12)


def test_quasi_umbilic_reconstruction_indefinite():
    from hypercongruence.surface import PointGeometry

    g = np.diag([-1.0, 1.0, 2.0])
    w = np.array([0.5, -1.0, 0.25])
    h = 0.7 * g - 2.0 * np.outer(w, w)
    gi = np.linalg.inv(g)
    tr = np.trace(gi @ h)
    pg = PointGeometry(None, g, gi, None, 1, h, h - tr / 3 * g, tr)
    pc = classify_point(pg)
    assert pc.kind == "quasi_umbilic" and pc.alpha == pytest.approx(0.7)
    np.testing.assert_allclose(pc.reconstruct(g), h, atol=1e-12)
    # an isotropic omega is still recovered
    w = np.array([1.0, 1.0, 0.0])
    h = 0.3 * g + 1.5 * np.outer(w, w)
    tr = np.trace(gi @ h)
    pc = classify_point(PointGeometry(None, g, gi, None, 1, h, h - tr / 3 * g, tr))
    assert pc.kind == "quasi_umbilic" and abs(pc.omega_norm2) <= 1e-12
    np.testing.assert_allclose(pc.reconstruct(g), h, atol=1e-12)


def test_ellipsoid_generic():
    p = bundled_patch("ellipsoid")
    for u in random_points(p, 5):
        pg = point_geometry(p, u)
        assert classify_point(pg).kind == "generic"
        k = np.sort(np.linalg.eigvals(pg.shape_operator).real)
        assert np.min(np.diff(k)) > 1e-3


@pytest.mark.parametrize(
    "scene,field",
    [("sphere1", "umbilic_fraction"), ("ellipsoid", "generic_fraction"), ("cylinder", "quasi_umbilic_fraction"),
     ("desitter_deformed", "generic_fraction"), ("ads", "umbilic_fraction")],
)
def test_density_scan(scene, field):
    p = bundled_patch(scene)
    assert getattr(density_scan(p, chart_grid(p.domain, 4)), field) == 1.0
