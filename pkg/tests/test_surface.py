import numpy as np
import pytest
from conftest import bundled_patch, random_points
from hypothesis import given, settings
from hypothesis import strategies as st

from hypercongruence.ambient import AmbientSpace
from hypercongruence.exprlang import parse_expr
from hypercongruence.surface import (
    DegenerateMetricError,
    ImmersionPatch,
    IsotropicArgumentError,
    IsotropicNormalError,
    bending,
    chart_grid,
    induced_metric,
    point_geometry,
    second_fundamental_form,
    unit_normal,
)

V3 = ("u1", "u2", "u3")


def make(components, dim=4, s=0, domain=((0.2, 1.0),) * 3):
    return ImmersionPatch(AmbientSpace(dim, s), V3, [parse_expr(c, V3) for c in components], domain)


def fd_jacobian(patch, u, h=1e-5):
    cols = []
    for i in range(patch.n):
        e = np.zeros(patch.n)
        e[i] = h
        cols.append((-patch(u + 2 * e) + 8 * patch(u + e) - 8 * patch(u - e) + patch(u - 2 * e)) / (12 * h))
    return np.array(cols)


def test_plane():
    p = bundled_patch("plane")
    u = np.array([0.7, 0.8, 0.9])
    np.testing.assert_allclose(induced_metric(p, u), np.eye(3))
    N, eps = unit_normal(p, u)
    assert abs(N[3]) == 1 and eps == 1
    assert np.all(second_fundamental_form(p, u) == 0)


@pytest.mark.parametrize("scene,r", [("sphere1", 1.0), ("sphere2", 2.0)])
def test_sphere_metric_normal_sff(scene, r):
    p = bundled_patch(scene)
    u = random_points(p, 20, seed=1)
    g = induced_metric(p, u)
    np.testing.assert_allclose(np.linalg.det(g), r**6 * np.sin(u[:, 0]) ** 4 * np.sin(u[:, 1]) ** 2, rtol=1e-12)
    for k in range(3):
        J = fd_jacobian(p, u[k])
        np.testing.assert_allclose(g[k], J @ J.T, atol=1e-8)
    N, eps = unit_normal(p, u)
    pos = p(u)
    assert np.all(eps == 1)
    np.testing.assert_allclose(np.abs(np.sum(N * pos, axis=1)), r, rtol=1e-12)
    h = second_fundamental_form(p, u)
    sign = np.sign(h[:, 0, 0])[:, None, None]
    np.testing.assert_allclose(sign * h, g / r, atol=1e-12)


def test_de_sitter_metric_is_lorentzian():
    p = bundled_patch("desitter")
    u = random_points(p, 10)
    g = induced_metric(p, u)
    assert all(np.sum(np.linalg.eigvalsh(x) < 0) == 1 for x in g)
    N, eps = unit_normal(p, u)
    assert np.all(eps == 1)
    pos = p(u)
    eta = np.array([-1, 1, 1, 1])
    np.testing.assert_allclose(np.abs(np.sum(N * eta * pos, axis=1)), 1.0, rtol=1e-12)


def test_ads_normal_is_timelike():
    p = bundled_patch("ads")
    _, eps = unit_normal(p, random_points(p, 5))
    assert np.all(eps == -1)


def test_cylinder_product():
    p = bundled_patch("cylinder")
    u = np.array([1.0, 0.2, -0.3])
    np.testing.assert_allclose(induced_metric(p, u), np.diag([2.25, 1, 1]), atol=1e-14)
    h = second_fundamental_form(p, u)
    np.testing.assert_allclose(np.abs(h), np.diag([1.5, 0, 0]), atol=1e-14)
    w = np.linalg.eigvals(point_geometry(p, u).shape_operator)
    np.testing.assert_allclose(sorted(np.abs(w)), [0, 0, 1 / 1.5], atol=1e-14)


def test_sff_against_oracle():
    from oracles import ellipsoid5, geometry

    p = bundled_patch("ellipsoid")
    u = np.array([1.1, 0.9, 1.3, 0.4])
    ref = geometry(ellipsoid5(), u, [1] * 5)
    pg = point_geometry(p, u)
    np.testing.assert_allclose(pg.g, ref["g"], atol=1e-12)
    s = np.sign(np.sum(pg.N * ref["N"]))
    np.testing.assert_allclose(pg.h, s * ref["h"], atol=1e-12)


def test_bending_values():
    p = bundled_patch("sphere2")
    u = np.array([1.0, 1.2, 0.3])
    rng = np.random.default_rng(3)
    vals = [bending(p, u, x) for x in rng.standard_normal((100, 3))]
    np.testing.assert_allclose(np.abs(vals), 0.5, atol=1e-12)
    assert bending(bundled_patch("plane"), np.ones(3), [1, 2, 3]) == 0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.floats(0.1, 10), st.booleans())
def test_bending_is_scale_invariant(x, c, flip):
    p = bundled_patch("desitter_deformed")
    u = np.array([0.1, 1.2, 0.4])
    x = np.asarray(x)
    pg = point_geometry(p, u)
    if abs(x @ pg.g @ x) < 1e-3 * (x @ x) or (x @ x) < 1e-6:
        return
    c = -c if flip else c
    assert bending(p, u, c * x) == pytest.approx(bending(p, u, x), rel=1e-12, abs=1e-14)


def test_bending_rejects_isotropic_argument():
    p = bundled_patch("desitter")
    u = np.array([0.0, 1.0, 0.5])
    g = induced_metric(p, u)
    x = np.array([1 / np.sqrt(-g[0, 0]), 1 / np.sqrt(g[1, 1]), 0.0])
    with pytest.raises(IsotropicArgumentError):
        bending(p, u, x)


def test_degenerate_metric_is_reported():
    p = make(["u1", "u1", "u2", "u3"], s=1)  # d/du1 is null
    with pytest.raises(DegenerateMetricError) as err:
        induced_metric(p, np.array([0.5, 0.5, 0.5]))
    assert err.value.u is not None


def test_null_hyperplane_is_rejected():
    # a hypersurface has a null normal exactly when its induced metric degenerates
    p = make(["u1", "u1", "u2", "u3"], s=1)
    with pytest.raises((IsotropicNormalError, DegenerateMetricError)):
        second_fundamental_form(p, np.array([0.5, 0.5, 0.5]))


def test_chart_grid_shrinks_domain():
    gr = chart_grid([(0, 1), (0, 2), (1, 3)], 5)
    assert gr.shape == (5, 5, 5) and len(gr) == 125
    assert gr.axes[0][0] == pytest.approx(0.1) and gr.axes[1][-1] == pytest.approx(1.8)
