"""Coefficient algebra over the (deterministic) feedback-gain parameters."""
from __future__ import annotations

from dataclasses import dataclass
from numbers import Number

from ..errors import NotInClassError

# merged coefficients below this magnitude are treated as exact zeros
ZERO_TOL = 1e-300


def _nonzero(c) -> bool:
    return abs(c) >= ZERO_TOL


@dataclass(frozen=True, slots=True)
class ParamAffine:
    """``constant + sum_p coeffs[p] * p`` with real coefficients."""

    constant: float = 0.0
    coeffs: tuple = ()

    @classmethod
    def make(cls, constant=0.0, coeffs=None) -> ParamAffine:
        items = ()
        if coeffs:
            items = tuple(sorted((v, float(c)) for v, c in coeffs.items() if _nonzero(c)))
        return cls(float(constant), items)

    @classmethod
    def param(cls, v) -> ParamAffine:
        return cls(0.0, ((v, 1.0),))

    @property
    def is_constant(self) -> bool:
        return not self.coeffs

    @property
    def is_zero(self) -> bool:
        return not self.coeffs and self.constant == 0.0

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    def key(self) -> tuple:
        return (self.constant, tuple((v.index, c) for v, c in self.coeffs))

    def __add__(self, other):
        if isinstance(other, Number):
            return ParamAffine(self.constant + float(other), self.coeffs)
        if not self.coeffs:
            return ParamAffine(self.constant + other.constant, other.coeffs)
        if not other.coeffs:
            return ParamAffine(self.constant + other.constant, self.coeffs)
        d = dict(self.coeffs)
        for v, c in other.coeffs:
            d[v] = d.get(v, 0.0) + c
        return ParamAffine.make(self.constant + other.constant, d)

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s: float) -> ParamAffine:
        s = float(s)
        if s == 0.0:
            return ParamAffine()
        return ParamAffine(self.constant * s, tuple((v, c * s) for v, c in self.coeffs))

    def __mul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        if other.is_constant:
            return self.scale(other.constant)
        if self.is_constant:
            return other.scale(self.constant)
        raise NotInClassError("product of two gain-dependent affine forms is not affine")

    __rmul__ = __mul__

    def evaluate(self, env) -> float:
        val = self.constant
        for v, c in self.coeffs:
            val = val + c * env[v.name]
        return val

    def to_poly(self) -> ParamPolynomial:
        d = {(): complex(self.constant)} if self.constant != 0.0 else {}
        for v, c in self.coeffs:
            d[((v, 1),)] = complex(c)
        return ParamPolynomial.from_dict(d)

    def __repr__(self):
        parts = [f"{self.constant:g}"] if self.constant or not self.coeffs else []
        parts += [f"{c:g}*{v.name}" for v, c in self.coeffs]
        return " + ".join(parts)


def _mono_mul(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, p in b:
        d[v] = d.get(v, 0) + p
    return tuple(sorted(d.items()))


@dataclass(frozen=True, slots=True)
class ParamPolynomial:
    """Sum of complex coefficient x parameter monomial.

    A monomial is a sorted tuple of ``(Variable, power)`` pairs; the empty
    tuple is the constant monomial.
    """

    terms: tuple = ()

    @classmethod
    def from_dict(cls, d: dict) -> ParamPolynomial:
        items = [(m, complex(c)) for m, c in d.items() if _nonzero(c)]
        items.sort(key=lambda mc: tuple((v.index, p) for v, p in mc[0]))
        return cls(tuple(items))

    @classmethod
    def constant(cls, c) -> ParamPolynomial:
        return cls.from_dict({(): c})

    @classmethod
    def param(cls, v) -> ParamPolynomial:
        return cls(((((v, 1),), 1.0 + 0j),))

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and self.terms[0][0] == ())

    @property
    def is_real(self) -> bool:
        return all(c.imag == 0.0 for _, c in self.terms)

    def constant_value(self) -> complex:
        for m, c in self.terms:
            if m == ():
                return c
        return 0j

    @property
    def degree(self) -> int:
        return max((sum(p for _, p in m) for m, _ in self.terms), default=0)

    def parameters(self) -> set:
        return {v for m, _ in self.terms for v, _ in m}

    def __add__(self, other):
        if isinstance(other, Number):
            other = ParamPolynomial.constant(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        d = dict(self.terms)
        for m, c in other.terms:
            d[m] = d.get(m, 0j) + c
        return ParamPolynomial.from_dict(d)

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s) -> ParamPolynomial:
        if s == 0:
            return ParamPolynomial()
        s = complex(s)
        return ParamPolynomial(tuple((m, c * s) for m, c in self.terms))

    def __mul__(self, other):
        if isinstance(other, Number):
            return self.scale(other)
        if not self.terms or not other.terms:
            return ParamPolynomial()
        if other.is_constant:
            return self.scale(other.terms[0][1])
        if self.is_constant:
            return other.scale(self.terms[0][1])
        d: dict = {}
        for ma, ca in self.terms:
            for mb, cb in other.terms:
                m = _mono_mul(ma, mb)
                d[m] = d.get(m, 0j) + ca * cb
        return ParamPolynomial.from_dict(d)

    __rmul__ = __mul__

    def evaluate(self, env):
        real = self.is_real
        total = 0.0
        for m, c in self.terms:
            val = c.real if real else c
            for v, p in m:
                val = val * env[v.name] ** p
            total = total + val
        return total

    def as_affine(self) -> ParamAffine | None:
        """The same polynomial as a ParamAffine, or None if it is not real affine."""
        if not self.is_real or self.degree > 1:
            return None
        const = 0.0
        coeffs = {}
        for m, c in self.terms:
            if m == ():
                const = c.real
            else:
                coeffs[m[0][0]] = c.real
        return ParamAffine.make(const, coeffs)

    def __repr__(self):
        if not self.terms:
            return "0"
        out = []
        for m, c in self.terms:
            cs = f"{c.real:g}" if c.imag == 0 else f"({c:g})"
            out.append("*".join([cs] + [f"{v.name}^{p}" if p > 1 else v.name for v, p in m]))
        return " + ".join(out)
