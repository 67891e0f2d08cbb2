"""Rewrite mixed trig polynomials as sums of ``poly * x^a * exp(i b.x)``."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import MixedTrigExpr, TrigFactor
from .params import ParamAffine, ParamPolynomial


@dataclass(frozen=True, slots=True)
class ExpCanonicalTerm:
    """``poly(theta) * exp(i*phase(theta)) * prod x_j^a_j * exp(i * sum_j freq_j(theta) x_j)``."""

    poly: ParamPolynomial
    phase: ParamAffine
    powers: tuple  # ((Variable, int), ...)
    freq: tuple  # ((Variable, ParamAffine), ...), zero frequencies omitted

    def alpha(self, v) -> int:
        for u, p in self.powers:
            if u == v:
                return p
        return 0

    def frequency(self, v) -> ParamAffine:
        for u, a in self.freq:
            if u == v:
                return a
        return ParamAffine()

    def evaluate(self, env):
        val = self.poly.evaluate(env) * np.exp(1j * self.phase.evaluate(env))
        for v, p in self.powers:
            val = val * env[v.name] ** p
        if self.freq:
            b = 0.0
            for v, a in self.freq:
                b = b + a.evaluate(env) * env[v.name]
            val = val * np.exp(1j * b)
        return val


def _factor_expansion(tf: TrigFactor):
    """[(coefficient, multiplier m)] with kind(a)^p = sum c * exp(i m a)."""
    p = tf.power
    out = []
    for k in range(p + 1):
        if tf.kind == "cos":
            c = math.comb(p, k) / 2.0 ** p
        else:
            c = math.comb(p, k) * (-1) ** (p - k) / (2j) ** p
        out.append((complex(c), 2 * k - p))
    return out


def euler_expand(e: MixedTrigExpr, merge: bool = True) -> list[ExpCanonicalTerm]:
    """Exact expansion via ``cos a = (e^{ia}+e^{-ia})/2``, ``sin a = (e^{ia}-e^{-ia})/2i``.

    With ``merge=False`` a term with trig powers ``p_1..p_m`` contributes
    exactly ``prod(p_i + 1)`` outputs.
    """
    raw = []
    for t in e.terms:
        if not t.trig:
            raw.append(ExpCanonicalTerm(t.coeff, ParamAffine(), t.powers, ()))
            continue
        expansions = [_factor_expansion(tf) for tf in t.trig]
        for combo in itertools.product(*expansions):
            coef = 1.0 + 0j
            freq: dict = {}
            phase = ParamAffine()
            for tf, (c, m) in zip(t.trig, combo):
                coef *= c
                if m == 0:
                    continue
                phase = phase + tf.arg.offset.scale(m)
                for v, a in tf.arg.coeffs:
                    freq[v] = freq[v] + a.scale(m) if v in freq else a.scale(m)
            freq_t = tuple(sorted((v, a) for v, a in freq.items() if not a.is_zero))
            raw.append(ExpCanonicalTerm(t.coeff.scale(coef), phase, t.powers, freq_t))
    if not merge:
        return raw
    merged: dict = {}
    for term in raw:
        k = (term.powers, term.freq, term.phase)
        merged[k] = merged[k] + term.poly if k in merged else term.poly
    out = [ExpCanonicalTerm(p, ph, pw, fr) for (pw, fr, ph), p in merged.items() if not p.is_zero]
    out.sort(key=lambda t: (
        tuple((v.index, p) for v, p in t.powers),
        tuple((v.index, a.key()) for v, a in t.freq),
        t.phase.key(),
    ))
    return out
