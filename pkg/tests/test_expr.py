import cmath
import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from cfsteer.errors import DegreeTooHighError, ExprSyntaxError, NotInClassError, UnknownSymbolError
from cfsteer.expr import MAX_TRIG_POWER, MixedTrigExpr, SymbolTable, euler_expand, parse

from strategies import SYMBOLS, environment, expression_text, mixed_trig_expr, python_eval


@pytest.fixture
def syms():
    s = SymbolTable({"dt": 0.1})
    for name, kind in [("x", "state"), ("y", "state"), ("u", "control"), ("w", "noise"), ("g", "parameter")]:
        s.declare(name, kind)
    return s


def test_parse_simple_dynamics(syms):
    e = parse("x + 0.1*cos(x) + 0.1*u", syms)
    assert len(e) == 3
    assert e.evaluate({"x": 0.3, "u": 2.0}) == pytest.approx(0.3 + 0.1 * math.cos(0.3) + 0.2, abs=1e-15)


def test_constants_and_unary_minus(syms):
    e = parse("-x*dt + pi", syms)
    assert e.evaluate({"x": 2.0}) == pytest.approx(-0.2 + math.pi, abs=1e-15)


def test_nonaffine_trig_argument_rejected(syms):
    with pytest.raises(NotInClassError) as ei:
        parse("cos(x*y)", syms)
    assert "column" in str(ei.value)


def test_unknown_symbol_reports_position(syms):
    with pytest.raises(UnknownSymbolError) as ei:
        parse("x + zz", syms)
    assert ei.value.pos == 4


@pytest.mark.parametrize("bad", ["x +", "(x", "x ^ y", "x $ 2", "cos x", "x^-1", ""])
def test_syntax_errors(syms, bad):
    with pytest.raises(ExprSyntaxError):
        parse(bad, syms)


def test_square_expansion_term_count(syms):
    # (x + cos x)^2 = x^2 + 2 x cos x + cos^2 x
    assert len(parse("(x + cos(x))^2", syms)) == 3


def test_trig_power_cap(syms):
    x = MixedTrigExpr.variable(syms["x"])
    MixedTrigExpr.trig("cos", x, MAX_TRIG_POWER)
    with pytest.raises(DegreeTooHighError):
        MixedTrigExpr.trig("cos", x, MAX_TRIG_POWER + 1)


def test_constant_trig_folds(syms):
    e = parse("cos(0.5)*x", syms)
    assert e.terms[0].trig == ()
    assert e.evaluate({"x": 1.0}) == pytest.approx(math.cos(0.5))


def test_substitution_affine_in_trig(syms):
    # x -> (0.05 - 0.03 g) + (1 + 0.1 g) x style replacement keeps sin arguments affine
    x, g = syms["x"], syms["g"]
    gx = MixedTrigExpr.variable(g)
    rep = (0.05 - 0.03 * gx) + (1 + 0.1 * gx) * MixedTrigExpr.variable(x)
    e = parse("sin(x + w)", syms).substitute(x, rep)
    env = {"x": 0.4, "w": -0.2, "g": 1.7}
    inner = 0.05 - 0.03 * 1.7 + (1 + 0.17) * 0.4 - 0.2
    assert e.evaluate(env) == pytest.approx(math.sin(inner), abs=1e-15)


def test_quadratic_substitution_into_trig_rejected(syms):
    x = syms["x"]
    e = parse("cos(u)", syms)
    with pytest.raises(NotInClassError):
        e.substitute(syms["u"], MixedTrigExpr.variable(x) ** 2)


def test_quadratic_substitution_in_polynomial_position_allowed(syms):
    e = parse("x + u*dt", syms).substitute(syms["u"], parse("x^2", syms))
    assert e.evaluate({"x": 2.0}) == pytest.approx(2.0 + 0.4)


def test_euler_mixed_product(syms):
    # x cos(x) sin(x) = x sin(2x)/2 = x (e^{2ix} - e^{-2ix}) / 4i
    terms = euler_expand(parse("x*cos(x)*sin(x)", syms))
    by_freq = {t.frequency(syms["x"]).constant: t.poly.constant_value() for t in terms}
    assert all(t.alpha(syms["x"]) == 1 for t in terms)
    assert by_freq == pytest.approx({2.0: -0.25j, -2.0: 0.25j})


def test_single_term_structure(syms):
    e = parse("x^3 * sin(x)^2", syms)
    assert len(e) == 1
    (t,) = e.terms
    assert t.powers == ((syms["x"], 3),)
    assert [(f.kind, f.power) for f in t.trig] == [("sin", 2)]


def test_substitute_affine_law(syms):
    # u -> g (x - 0.3) + 0.5 in x + 0.1 u
    g = MixedTrigExpr.variable(syms["g"])
    rep = g * (MixedTrigExpr.variable(syms["x"]) - 0.3) + 0.5
    e = parse("x + 0.1*u", syms).substitute(syms["u"], rep)
    assert e.random_variables() == {syms["x"]}
    assert e.parameters() == {syms["g"]}
    env = {"x": 0.7, "g": -2.0}
    assert e.evaluate(env) == pytest.approx(0.7 + 0.1 * (-2.0 * 0.4 + 0.5), abs=1e-15)


def test_euler_sin_squared(syms):
    terms = euler_expand(parse("sin(x)^2", syms))
    by_freq = {}
    for t in terms:
        f = t.frequency(syms["x"]).constant
        by_freq[f] = t.poly.constant_value()
    assert by_freq == pytest.approx({0.0: 0.5, 2.0: -0.25, -2.0: -0.25})


def test_euler_unmerged_term_count(syms):
    e = parse("cos(x)^2*sin(y)^3", syms)
    assert len(euler_expand(e, merge=False)) == 3 * 4


def test_immutability(syms):
    e = parse("x", syms)
    with pytest.raises(AttributeError):
        e.terms = ()


@settings(max_examples=300)
@given(expression_text, st.fixed_dictionaries({"x": st.floats(-1, 1), "y": st.floats(-1, 1), "w": st.floats(-1, 1)}))
def test_parse_matches_python_evaluation(pair, env):
    text, py = pair
    ref = python_eval(py, env)
    got = parse(text, SYMBOLS).evaluate(env)
    assert abs(complex(got).imag) == 0.0
    assert complex(got).real == pytest.approx(ref, rel=1e-9, abs=1e-9)


@settings(max_examples=500)
@given(mixed_trig_expr(), environment())
def test_euler_expansion_identity(e, env):
    ref = complex(e.evaluate(env))
    val = sum((t.evaluate(env) for t in euler_expand(e)), 0j)
    assert abs(val - ref) <= 1e-12 * (1 + abs(ref))


@settings(max_examples=200)
@given(mixed_trig_expr(max_terms=3), mixed_trig_expr(max_terms=2), environment())
def test_product_is_pointwise(a, b, env):
    try:
        prod = a * b
    except DegreeTooHighError:
        assume(False)
    ref = complex(a.evaluate(env)) * complex(b.evaluate(env))
    got = complex(prod.evaluate(env))
    assert cmath.isclose(got, ref, rel_tol=1e-11, abs_tol=1e-11)
