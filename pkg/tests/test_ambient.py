import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypercongruence.ambient import (
    AmbientSpace,
    Motion,
    apply_motion,
    boost,
    inner,
    is_isotropic,
    pseudo_orthogonality_defect,
    random_motion,
    rotation,
    verify_motion,
)


def test_space_validation():
    with pytest.raises(ValueError):
        AmbientSpace(3)
    with pytest.raises(ValueError):
        AmbientSpace(4, 5)
    assert AmbientSpace(5, 2).eta_diag.tolist() == [-1, -1, 1, 1, 1]


def test_inner_and_null_vectors():
    sp = AmbientSpace(4, 1)
    assert inner(sp, [1, 1, 0, 0], [1, 1, 0, 0]) == 0
    assert is_isotropic(sp, [1, 0, 1, 0])
    assert not is_isotropic(sp, [1, 0, 0, 0])
    assert not is_isotropic(sp, [0, 0, 0, 0])
    assert inner(sp, [2, 0, 0, 0], [3, 0, 0, 0]) == -6
    with pytest.raises(ValueError):
        inner(sp, [1, 2, 3], [1, 2, 3])


def test_boost_and_rotation_preserve_eta():
    sp = AmbientSpace(4, 1)
    assert verify_motion(sp, Motion(boost(4, 0.8, 0, 2), np.zeros(4)))
    assert verify_motion(sp, Motion(rotation(4, 1.1, 1, 3), np.zeros(4)))
    assert not verify_motion(sp, Motion(rotation(4, 1.1, 0, 1), np.zeros(4)))
    assert not verify_motion(sp, Motion(2 * np.eye(4), np.zeros(4)))


def test_dilation_defect_formula():
    sp = AmbientSpace(5, 0)
    c = 1.5
    assert pseudo_orthogonality_defect(sp, c * np.eye(5)) == pytest.approx(c**2 - 1)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(4, 6), st.data())
def test_random_motions_are_motions(seed, dim, data):
    s = data.draw(st.integers(0, dim))
    sp = AmbientSpace(dim, s)
    m = random_motion(sp, np.random.default_rng(seed))
    assert verify_motion(sp, m, 1e-10)
    rng = np.random.default_rng(seed + 1)
    x, y = rng.standard_normal((2, dim))
    # motions preserve the squared pseudo-distance
    d0 = inner(sp, x - y, x - y)
    d1 = inner(sp, apply_motion(m, x) - apply_motion(m, y), apply_motion(m, x) - apply_motion(m, y))
    assert d1 == pytest.approx(d0, abs=1e-9 * (1 + abs(d0)))
    ident = m.compose(m.inverse())
    np.testing.assert_allclose(ident.linear, np.eye(dim), atol=1e-10)
    np.testing.assert_allclose(ident.translation, 0, atol=1e-10)
