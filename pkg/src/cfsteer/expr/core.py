"""Mixed trigonometric polynomials in several random variables.

A :class:`MixedTrigExpr` is a sum of terms

    coeff(theta) * prod_j x_j^a_j * prod_f trig_f(arg_f)^p_f

where ``coeff`` is a :class:`ParamPolynomial` in the gain parameters and
every trig argument is affine in the random variables, with coefficients
that are themselves affine in the parameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Number

import numpy as np

from ..errors import DegreeTooHighError, NotInClassError
from .params import ParamAffine, ParamPolynomial
from .symbols import Variable

MAX_TRIG_POWER = 8
MAX_DEGREE = 16


@dataclass(frozen=True, slots=True)
class TrigArgument:
    coeffs: tuple  # ((Variable, ParamAffine), ...) sorted, random variables only
    offset: ParamAffine

    @classmethod
    def make(cls, coeffs: dict, offset: ParamAffine) -> TrigArgument:
        items = tuple(sorted((v, a) for v, a in coeffs.items() if not a.is_zero))
        return cls(items, offset)

    @property
    def is_deterministic(self) -> bool:
        return not self.coeffs

    def key(self) -> tuple:
        return (tuple((v.index, a.key()) for v, a in self.coeffs), self.offset.key())

    def random_variables(self) -> set:
        return {v for v, _ in self.coeffs}

    def evaluate(self, env):
        val = self.offset.evaluate(env)
        for v, a in self.coeffs:
            val = val + a.evaluate(env) * env[v.name]
        return val

    def __repr__(self):
        parts = [f"({a!r})*{v.name}" for v, a in self.coeffs]
        if not self.offset.is_zero or not parts:
            parts.append(f"({self.offset!r})")
        return " + ".join(parts)


@dataclass(frozen=True, slots=True)
class TrigFactor:
    kind: str  # "sin" | "cos"
    arg: TrigArgument
    power: int


@dataclass(frozen=True, slots=True)
class Term:
    coeff: ParamPolynomial
    powers: tuple  # ((Variable, int), ...) sorted
    trig: tuple  # (TrigFactor, ...) sorted by (arg key, kind)

    @property
    def degree(self) -> int:
        return sum(p for _, p in self.powers)

    def evaluate(self, env):
        val = self.coeff.evaluate(env)
        for v, p in self.powers:
            val = val * env[v.name] ** p
        for tf in self.trig:
            a = tf.arg.evaluate(env)
            val = val * (np.cos(a) if tf.kind == "cos" else np.sin(a)) ** tf.power
        return val


def _trig_sort_key(tf_key):
    kind, arg = tf_key
    return (arg.key(), kind)


def _merge_powers(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, p in b:
        d[v] = d.get(v, 0) + p
    out = tuple(sorted(d.items()))
    if sum(p for _, p in out) > MAX_DEGREE:
        raise DegreeTooHighError(f"polynomial degree exceeds {MAX_DEGREE}")
    return out


def _merge_trig(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    d = {(tf.kind, tf.arg): tf.power for tf in a}
    for tf in b:
        k = (tf.kind, tf.arg)
        d[k] = d.get(k, 0) + tf.power
        if d[k] > MAX_TRIG_POWER:
            raise DegreeTooHighError(f"trig power exceeds {MAX_TRIG_POWER}")
    return tuple(TrigFactor(k, arg, p) for (k, arg), p in sorted(d.items(), key=lambda kv: _trig_sort_key(kv[0])))


class MixedTrigExpr:
    """Immutable canonical sum of :class:`Term`."""

    __slots__ = ("terms",)

    def __init__(self, terms=()):
        object.__setattr__(self, "terms", tuple(terms))

    def __setattr__(self, name, value):
        raise AttributeError("MixedTrigExpr is immutable")

    # -- construction -----------------------------------------------------

    @classmethod
    def _from_dict(cls, d: dict) -> MixedTrigExpr:
        items = [(k, c) for k, c in d.items() if not c.is_zero]
        items.sort(key=lambda kc: (
            tuple((v.index, p) for v, p in kc[0][0]),
            tuple((tf.arg.key(), tf.kind, tf.power) for tf in kc[0][1]),
        ))
        return cls(Term(c, powers, trig) for (powers, trig), c in items)

    def _as_dict(self) -> dict:
        return {(t.powers, t.trig): t.coeff for t in self.terms}

    @classmethod
    def constant(cls, c) -> MixedTrigExpr:
        return cls._from_dict({((), ()): ParamPolynomial.constant(c)})

    @classmethod
    def from_poly(cls, p: ParamPolynomial) -> MixedTrigExpr:
        return cls._from_dict({((), ()): p})

    @classmethod
    def variable(cls, v: Variable) -> MixedTrigExpr:
        if not v.is_random:
            return cls.from_poly(ParamPolynomial.param(v))
        return cls._from_dict({(((v, 1),), ()): ParamPolynomial.constant(1.0)})

    @classmethod
    def trig(cls, kind: str, arg: MixedTrigExpr | TrigArgument, power: int = 1) -> MixedTrigExpr:
        """``kind(arg)**power``; ``arg`` must be affine in the random variables."""
        if kind not in ("sin", "cos"):
            raise ValueError(kind)
        if isinstance(arg, MixedTrigExpr):
            form = arg.affine_form()
            if form is None:
                raise NotInClassError(f"{kind} argument is not affine in the random variables: {arg!r}")
            arg = TrigArgument.make(*form)
        if power == 0:
            return cls.constant(1.0)
        if power > MAX_TRIG_POWER:
            raise DegreeTooHighError(f"trig power exceeds {MAX_TRIG_POWER}")
        if arg.is_deterministic and arg.offset.is_constant:
            c = arg.offset.constant
            return cls.constant((math.cos(c) if kind == "cos" else math.sin(c)) ** power)
        return cls._from_dict({((), (TrigFactor(kind, arg, power),)): ParamPolynomial.constant(1.0)})

    # -- algebra ------------------------------------------------------------

    @staticmethod
    def _coerce(other) -> MixedTrigExpr:
        if isinstance(other, MixedTrigExpr):
            return other
        if isinstance(other, Number):
            return MixedTrigExpr.constant(other)
        if isinstance(other, ParamPolynomial):
            return MixedTrigExpr.from_poly(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        d = self._as_dict()
        for t in other.terms:
            k = (t.powers, t.trig)
            d[k] = d[k] + t.coeff if k in d else t.coeff
        return MixedTrigExpr._from_dict(d)

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s) -> MixedTrigExpr:
        if s == 0:
            return MixedTrigExpr()
        return MixedTrigExpr(Term(t.coeff.scale(s), t.powers, t.trig) for t in self.terms)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return multiply(self, other)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers are supported")
        result = MixedTrigExpr.constant(1.0)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def substitute(self, var: Variable, replacement) -> MixedTrigExpr:
        return substitute(self, var, replacement)

    # -- inspection ---------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def random_variables(self) -> set:
        out = set()
        for t in self.terms:
            out.update(v for v, _ in t.powers)
            for tf in t.trig:
                out.update(tf.arg.random_variables())
        return out

    def parameters(self) -> set:
        out = set()
        for t in self.terms:
            out |= t.coeff.parameters()
            for tf in t.trig:
                out.update(v for v, _ in tf.arg.offset.coeffs)
                for _, a in tf.arg.coeffs:
                    out.update(v for v, _ in a.coeffs)
        return out

    def variables(self) -> set:
        return self.random_variables() | self.parameters()

    @property
    def degree(self) -> int:
        return max((t.degree for t in self.terms), default=0)

    def affine_form(self):
        """``(coeffs, offset)`` if the expression is affine in the random
        variables with real gain-affine coefficients, else None."""
        coeffs = {}
        offset = ParamAffine()
        for t in self.terms:
            if t.trig or t.degree > 1:
                return None
            a = t.coeff.as_affine()
            if a is None:
                return None
            if t.powers:
                coeffs[t.powers[0][0]] = a
            else:
                offset = a
        return coeffs, offset

    def evaluate(self, env):
        """Numeric value; ``env`` maps variable names to scalars or arrays."""
        total = 0.0
        for t in self.terms:
            total = total + t.evaluate(env)
        return total

    def __eq__(self, other):
        return isinstance(other, MixedTrigExpr) and self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        if not self.terms:
            return "0"
        out = []
        for t in self.terms:
            parts = [f"({t.coeff!r})"]
            parts += [f"{v.name}^{p}" if p > 1 else v.name for v, p in t.powers]
            parts += [f"{tf.kind}({tf.arg!r})" + (f"^{tf.power}" if tf.power > 1 else "") for tf in t.trig]
            out.append("*".join(parts))
        return " + ".join(out)


def multiply(a: MixedTrigExpr, b: MixedTrigExpr) -> MixedTrigExpr:
    """Termwise product with merging of powers and identical trig factors."""
    if not a.terms or not b.terms:
        return MixedTrigExpr()
    d: dict = {}
    for ta in a.terms:
        for tb in b.terms:
            k = (_merge_powers(ta.powers, tb.powers), _merge_trig(ta.trig, tb.trig))
            c = ta.coeff * tb.coeff
            d[k] = d[k] + c if k in d else c
    return MixedTrigExpr._from_dict(d)


def substitute(e: MixedTrigExpr, var: Variable, replacement) -> MixedTrigExpr:
    """Replace the random-position variable ``var`` by ``replacement``.

    Inside trig arguments the replacement must be affine in the random
    variables with gain-affine coefficients; otherwise NotInClassError.
    """
    if not var.is_random:
        raise ValueError("only random-position variables can be substituted")
    replacement = MixedTrigExpr._coerce(replacement)
    if var not in e.random_variables():
        return e
    form = None
    cache = {}

    def rpow(p):
        if p not in cache:
            cache[p] = replacement ** p
        return cache[p]

    result = MixedTrigExpr()
    for t in e.terms:
        piece = MixedTrigExpr.from_poly(t.coeff)
        rest = tuple((v, p) for v, p in t.powers if v != var)
        if rest:
            piece = MixedTrigExpr._from_dict({(rest, ()): t.coeff})
        for v, p in t.powers:
            if v == var:
                piece = piece * rpow(p)
        for tf in t.trig:
            coeffs = dict(tf.arg.coeffs)
            if var in coeffs:
                if form is None:
                    form = replacement.affine_form()
                    if form is None:
                        raise NotInClassError(
                            f"substituting {var.name} into {tf.kind}(...) needs an affine replacement, got {replacement!r}")
                a = coeffs.pop(var)
                r_coeffs, r_offset = form
                for rv, rc in r_coeffs.items():
                    coeffs[rv] = coeffs.get(rv, ParamAffine()) + a * rc
                new_arg = TrigArgument.make(coeffs, tf.arg.offset + a * r_offset)
                piece = piece * MixedTrigExpr.trig(tf.kind, new_arg, tf.power)
            else:
                piece = piece * MixedTrigExpr.trig(tf.kind, tf.arg, tf.power)
        result = result + piece
    return result
