import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypercongruence.exprlang import (
    EvalError,
    ParseError,
    SceneError,
    differentiate,
    evaluate,
    parse_expr,
    parse_scene,
    substitute,
    to_text,
)
from hypercongruence.exprlang import nodes
from hypercongruence.scenes import bundled_names, load_bundled

V2 = ("u1", "u2")
V3 = ("u1", "u2", "u3")


def central5(fun, x, h=1e-3):
    return (fun(x - 2 * h) - 8 * fun(x - h) + 8 * fun(x + h) - fun(x + 2 * h)) / (12 * h)


def test_parse_tree_shape():
    e = parse_expr("u1 + 2*u2", V2)
    assert e is nodes.add(nodes.var("u1"), nodes.mul(nodes.const(2.0), nodes.var("u2")))
    e = parse_expr("cosh(u1)*cos(u2)", V2)
    assert e.op == "mul" and [a.op for a in e.args] == ["cosh", "cos"]


def test_parse_reports_every_issue():
    with pytest.raises(ParseError) as err:
        parse_expr("u3 +", V2)
    assert set(err.value.kinds) == {"syntax", "unknown_identifier"}


def test_precedence_and_associativity():
    env = {"u1": 2.0, "u2": 3.0}
    assert evaluate(parse_expr("u1 - u2 - 1", V2), env) == -2.0
    assert evaluate(parse_expr("u1 / u2 * 3", V2), env) == pytest.approx(2.0)
    assert evaluate(parse_expr("-u1^2", V2), env) == -4.0
    assert evaluate(parse_expr("u1^-1", V2), env) == 0.5
    assert evaluate(parse_expr("2*pi", V2), env) == pytest.approx(2 * math.pi)


def test_evaluate_examples():
    assert evaluate(parse_expr("u1^2 + u2^2", V2), {"u1": 3.0, "u2": 4.0}) == 25.0
    assert evaluate(parse_expr("sin(u1)", V2), {"u1": 0.0}) == 0.0


@pytest.mark.parametrize("text,env", [("1/u1", {"u1": 0.0}), ("log(u1)", {"u1": -1.0}), ("sqrt(u1)", {"u1": -4.0})])
def test_domain_errors(text, env):
    with pytest.raises(EvalError):
        evaluate(parse_expr(text, V2), env)


def test_vectorized_evaluation():
    e = parse_expr("u1*u2 + sin(u1)", V2)
    x = np.linspace(0, 1, 7)
    np.testing.assert_allclose(evaluate(e, {"u1": x, "u2": 2 * x}), 2 * x * x + np.sin(x))


def test_derivative_examples():
    assert to_text(differentiate(parse_expr("u1^3", V2), "u1")).replace(" ", "") == "3*u1^2"
    assert to_text(differentiate(parse_expr("sin(u1)", V2), "u2")) == "0"


def test_fourth_derivative_against_stencil():
    e = parse_expr("cosh(u1)", V2)
    d4 = e
    for _ in range(4):
        d4 = differentiate(d4, "u1")
    x0 = 0.7
    # 5-point stencil applied to the symbolic third derivative, itself checked the same way
    d3 = differentiate(differentiate(differentiate(e, "u1"), "u1"), "u1")
    oracle = central5(lambda x: evaluate(d3, {"u1": x}), x0)
    assert evaluate(d4, {"u1": x0}) == pytest.approx(oracle, abs=1e-10)
    assert evaluate(d4, {"u1": x0}) == pytest.approx(1.255169005630943, abs=1e-12)


def test_substitution_composes():
    e = parse_expr("u1^2 + sin(u2)", V2)
    s = substitute(e, {"u1": parse_expr("2*u2", V2)})
    assert evaluate(s, {"u2": 0.3}) == pytest.approx(0.36 + math.sin(0.3))


def test_interning_makes_equal_trees_identical():
    assert parse_expr("u1*u2 + 1", V2) is parse_expr("u1*u2+1", V2)


# -- properties --------------------------------------------------------------

leaf = st.one_of(st.sampled_from(["u1", "u2"]), st.integers(1, 5).map(str), st.sampled_from(["0.5", "1.25"]))


def _combine(children):
    unary = st.tuples(st.sampled_from(["sin", "cos", "exp", "tanh", "-"]), children).map(
        lambda t: f"-({t[1]})" if t[0] == "-" else f"{t[0]}({t[1]})"
    )
    binary = st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(lambda t: f"({t[0]}) {t[1]} ({t[2]})")
    power = st.tuples(children, st.integers(-2, 3)).map(lambda t: f"({t[0]})^{t[1]}")
    return st.one_of(unary, binary, power)


expressions = st.recursive(leaf, _combine, max_leaves=8)
points = st.tuples(st.floats(0.3, 1.5), st.floats(0.3, 1.5))


@settings(max_examples=150, deadline=None)
@given(expressions, points)
def test_print_parse_roundtrip(text, pt):
    e = parse_expr(text, V2)
    env = {"u1": pt[0], "u2": pt[1]}
    try:
        v = evaluate(e, env)
    except EvalError:
        return
    again = parse_expr(to_text(e), V2)
    assert again is e or evaluate(again, env) == pytest.approx(v, rel=1e-12, abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(expressions, points)
def test_derivative_matches_stencil(text, pt):
    e = parse_expr(text, V2)
    d = differentiate(e, "u1")
    try:
        exact = evaluate(d, {"u1": pt[0], "u2": pt[1]})
        approx = central5(lambda x: evaluate(e, {"u1": x, "u2": pt[1]}), pt[0], 1e-4)
    except EvalError:
        return
    if not (np.isfinite(exact) and np.isfinite(approx)) or abs(exact) > 1e6:
        return
    assert exact == pytest.approx(approx, rel=1e-6, abs=1e-6)


# -- scenes ------------------------------------------------------------------

SPHERE = """
# unit 3-sphere
[space] dim=4 signature=0
[surface.s3]
  vars = u1,u2,u3
  embed = cos(u1); sin(u1)*cos(u2); sin(u1)*sin(u2)*cos(u3); sin(u1)*sin(u2)*sin(u3)
  domain = 0.3:pi-0.3, 0.3:2.8, -2:2
"""


def test_minimal_scene():
    sc = parse_scene(SPHERE)
    assert list(sc.surfaces) == ["s3"] and not sc.maps
    assert sc.surfaces["s3"].domain[0] == pytest.approx((0.3, math.pi - 0.3))


@pytest.mark.parametrize(
    "extra,kind",
    [
        ("[map.m] from=s3 to=nowhere rule=u1;u2;u3", "dangling"),
        ("[map.m] from=s3 to=s3 rule=u1;u2", "arity"),
        ("[map.m] from=s3 to=s3", "missing"),
        ("[map.m] from=s3 to=s3 rule=u1;u2;u4", "expression"),
        ("[surface.s3]\n vars=u1,u2,u3\n embed=u1;u2;u3;0\n domain=0:1,0:1,0:1", "duplicate"),
        ("[surface.t]\n vars=u1,u2,u3\n embed=u1;u2;u3;0\n domain=1:0,0:1,0:1", "domain"),
        ("[gadget.x] a=1", "syntax"),
    ],
)
def test_scene_errors(extra, kind):
    with pytest.raises(SceneError) as err:
        parse_scene(SPHERE + extra)
    assert err.value.kind == kind


def test_de_sitter_scene_lies_on_quadric():
    sc = load_bundled("desitter")
    f = sc.surfaces["base"]
    rng = np.random.default_rng(0)
    for _ in range(20):
        u = [rng.uniform(lo, hi) for lo, hi in f.domain]
        x = [evaluate(c, dict(zip(f.chart_vars, u))) for c in f.embed]
        assert -x[0] ** 2 + x[1] ** 2 + x[2] ** 2 + x[3] ** 2 == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("name", bundled_names())
def test_bundled_scenes_parse(name):
    sc = load_bundled(name)
    assert "base" in sc.surfaces and "motion" in sc.maps
