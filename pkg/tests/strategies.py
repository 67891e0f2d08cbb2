"""Hypothesis strategies shared by the property suites."""
from __future__ import annotations

import math

from hypothesis import strategies as st

from cfsteer.expr import MixedTrigExpr, SymbolTable

SYMBOLS = SymbolTable()
X = SYMBOLS.declare("x", "state")
Y = SYMBOLS.declare("y", "state")
W = SYMBOLS.declare("w", "noise")
G = SYMBOLS.declare("g", "parameter")
RANDOM_VARS = (X, Y, W)

coef = st.floats(-3, 3, allow_nan=False).map(lambda c: round(c, 6))
point = st.floats(-1.5, 1.5, allow_nan=False)


@st.composite
def trig_arg(draw):
    """Affine argument, optionally with a gain-dependent coefficient."""
    arg = MixedTrigExpr.constant(draw(coef))
    for v in RANDOM_VARS:
        c = draw(st.sampled_from([0.0, 0.0, 1.0, -1.0]) | coef)
        if c:
            arg = arg + c * MixedTrigExpr.variable(v)
    if draw(st.booleans()):
        v = draw(st.sampled_from(RANDOM_VARS))
        arg = arg + draw(coef) * MixedTrigExpr.variable(G) * MixedTrigExpr.variable(v)
    return arg


@st.composite
def mixed_trig_expr(draw, max_terms=4):
    e = MixedTrigExpr()
    for _ in range(draw(st.integers(1, max_terms))):
        t = MixedTrigExpr.constant(draw(coef))
        if draw(st.booleans()):
            t = t * MixedTrigExpr.variable(G) ** draw(st.integers(1, 2))
        for v in RANDOM_VARS:
            p = draw(st.integers(0, 2))
            if p:
                t = t * MixedTrigExpr.variable(v) ** p
        for _ in range(draw(st.integers(0, 2))):
            kind = draw(st.sampled_from(["sin", "cos"]))
            t = t * MixedTrigExpr.trig(kind, draw(trig_arg()), draw(st.integers(1, 3)))
        e = e + t
    return e


@st.composite
def environment(draw):
    return {v.name: draw(point) for v in (X, Y, W, G)}


# -- text expressions with a Python twin -----------------------------------

_num = st.floats(0.01, 4, allow_nan=False).map(lambda c: f"{round(c, 3)}")
_var = st.sampled_from(["x", "y", "w"])


@st.composite
def _affine_text(draw):
    parts = [draw(_num)]
    for v in draw(st.lists(_var, min_size=1, max_size=3, unique=True)):
        parts.append(f"{draw(_num)}*{v}")
    ops = [draw(st.sampled_from(["+", "-"])) for _ in parts[1:]]
    text = parts[0] + "".join(f" {o} {p}" for o, p in zip(ops, parts[1:]))
    return text


def _base(children):
    return st.one_of(
        _num.map(lambda s: (s, s)),
        _var.map(lambda s: (s, s)),
        st.tuples(st.sampled_from(["sin", "cos"]), _affine_text()).map(
            lambda ka: (f"{ka[0]}({ka[1]})", f"math.{ka[0]}({ka[1]})")),
        children.map(lambda e: (f"({e[0]})", f"({e[1]})")),
    )


@st.composite
def _factor(draw, children):
    text, py = draw(_base(children))
    if draw(st.booleans()):
        n = draw(st.integers(0, 2))
        return f"{text}^{n}", f"{py}**{n}"
    return text, py


def _expr(children):
    @st.composite
    def build(draw):
        terms = []
        for _ in range(draw(st.integers(1, 3))):
            fs = [draw(_factor(children)) for _ in range(draw(st.integers(1, 2)))]
            terms.append((" * ".join(f[0] for f in fs), " * ".join(f[1] for f in fs)))
        lead = draw(st.sampled_from(["", "-"]))
        text, py = lead + terms[0][0], lead + terms[0][1]
        for t in terms[1:]:
            op = draw(st.sampled_from(["+", "-"]))
            text += f" {op} {t[0]}"
            py += f" {op} {t[1]}"
        return text, py
    return build()


expression_text = st.recursive(_expr(st.nothing()), _expr, max_leaves=3)


def python_eval(py: str, env: dict) -> float:
    return eval(py, {"math": math, "__builtins__": {}}, dict(env))
