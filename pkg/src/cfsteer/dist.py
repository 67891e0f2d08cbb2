"""Distributions with exact oracles for ``E[x^a exp(i b x)]``.

All closed forms are vectorized over ``b`` (and over ``alpha`` when an
integer array is passed). ``moment_exp_quadrature`` is an independent
numerical oracle used to check them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ConfigError, ConvergenceFailure, DegreeTooHighError, MissingFieldError

MAX_ALPHA = 16


@dataclass(frozen=True)
class Gaussian:
    mean: float
    var: float

    def __post_init__(self):
        if not self.var > 0:
            raise ConfigError(f"Gaussian variance must be positive, got {self.var}")

    @property
    def center(self) -> float:
        return self.mean

    def centered(self) -> Gaussian:
        return Gaussian(0.0, self.var)


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ConfigError(f"Uniform needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def centered(self) -> Uniform:
        h = 0.5 * (self.hi - self.lo)
        return Uniform(-h, h)


@dataclass(frozen=True)
class PointMass:
    value: float

    @property
    def center(self) -> float:
        return self.value

    def centered(self) -> PointMass:
        return PointMass(0.0)


DistributionSpec = Gaussian | Uniform | PointMass


@dataclass(frozen=True)
class MomentQuery:
    alpha: int
    b: float = 0.0

    def __post_init__(self):
        if self.alpha < 0 or self.alpha > MAX_ALPHA:
            raise DegreeTooHighError(f"moment order {self.alpha} outside 0..{MAX_ALPHA}")


def mean(dist) -> float:
    return dist.center


def variance(dist) -> float:
    if isinstance(dist, Gaussian):
        return dist.var
    if isinstance(dist, Uniform):
        return (dist.hi - dist.lo) ** 2 / 12.0
    return 0.0


# -- characteristic function -----------------------------------------------

def cf(dist, t):
    """Characteristic function ``E[exp(i t x)]``."""
    t = np.asarray(t, dtype=float)
    if isinstance(dist, Gaussian):
        out = np.exp(1j * dist.mean * t - 0.5 * dist.var * t * t)
    elif isinstance(dist, Uniform):
        c, h = dist.center, 0.5 * (dist.hi - dist.lo)
        # np.sinc(z) = sin(pi z)/(pi z), exact 1 at z = 0
        out = np.exp(1j * c * t) * np.sinc(t * h / np.pi)
    else:
        out = np.exp(1j * dist.value * t)
    return out[()] if out.ndim == 0 else out


# -- E[s^k e^{i beta s}] for s ~ U(-1, 1) ----------------------------------

def _switch_points(kmax: int) -> np.ndarray:
    """Per order k, the |beta| above which the upward recursion is used.

    Chosen where the recursion's error amplification ``prod max(1, j/beta)``
    matches the power series' ``exp(beta)`` growth; never below 1.
    """
    out = np.ones(kmax + 1)
    for k in range(kmax + 1):
        def gap(beta):
            rec = sum(math.log(max(1.0, j / beta)) for j in range(1, k + 1))
            rec += math.log(max(1.0, 1.0 / beta))
            return rec - beta
        lo, hi = 1e-6, 50.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if gap(mid) > 0 else (lo, mid)
        out[k] = max(1.0, hi)
    return out


_SWITCH = _switch_points(MAX_ALPHA)


def _series_terms(beta_max: float) -> int:
    # smallest n with beta_max^n / n! < 1e-18, after the peak
    n, log_term = 0, 0.0
    lb = math.log(beta_max) if beta_max > 0 else -math.inf
    while True:
        n += 1
        log_term += lb - math.log(n)
        if n > beta_max and log_term < math.log(1e-18):
            return max(n + 1, 8)


def _sym_uniform_table(beta: np.ndarray, order: np.ndarray, kmax: int) -> np.ndarray:
    """Table ``K[i, k] = E[s^k exp(i beta_i s)]``, s ~ U(-1, 1), k <= kmax."""
    n = beta.shape[0]
    K = np.empty((n, kmax + 1), dtype=complex)
    use_series = np.abs(beta) < _SWITCH[order]
    if use_series.any():
        bs = beta[use_series]
        nt = _series_terms(float(np.abs(bs).max()))
        j = np.arange(nt)
        log_fact = np.concatenate([[0.0], np.cumsum(np.log(np.arange(1, nt)))])
        # (i beta)^n / n!
        coef = (1j * bs[:, None]) ** j[None, :] / np.exp(log_fact)[None, :]
        m = j[:, None] + np.arange(kmax + 1)[None, :]
        mu = np.where(m % 2 == 0, 1.0 / (m + 1.0), 0.0)
        K[use_series] = coef @ mu
    rec = ~use_series
    if rec.any():
        br = beta[rec]
        ep, em = np.exp(1j * br), np.exp(-1j * br)
        ib = 1j * br
        Kr = np.empty((br.shape[0], kmax + 1), dtype=complex)
        Kr[:, 0] = np.sin(br) / br
        for k in range(1, kmax + 1):
            Kr[:, k] = (ep - (-1) ** k * em) / (2 * ib) - (k / ib) * Kr[:, k - 1]
        K[rec] = Kr
    return K


# -- closed-form moment oracle ---------------------------------------------

def _check_alpha(alpha):
    a = np.asarray(alpha)
    if a.size and (a.min() < 0 or a.max() > MAX_ALPHA):
        raise DegreeTooHighError(f"moment order outside 0..{MAX_ALPHA}")
    return a.astype(int)


def moment_exp(dist, alpha, b=0.0):
    """Exact ``E[x^alpha exp(i b x)]``.

    ``alpha`` may be an int, a :class:`MomentQuery` (then ``b`` is taken from
    it), or an integer array broadcastable against ``b``.
    """
    if isinstance(alpha, MomentQuery):
        alpha, b = alpha.alpha, alpha.b
    alpha = _check_alpha(alpha)
    b = np.asarray(b, dtype=float)
    alpha, b = np.broadcast_arrays(alpha, b)
    shape = b.shape
    a = alpha.ravel()
    bb = b.ravel()
    if a.size == 0:
        return np.zeros(shape, dtype=complex)
    amax = int(a.max())
    if isinstance(dist, PointMass):
        c = dist.value
        out = c ** a * np.exp(1j * bb * c)
    elif isinstance(dist, Gaussian):
        mu, s2 = dist.mean, dist.var
        mt = mu + 1j * bb * s2
        m = np.empty((amax + 1, bb.size), dtype=complex)
        m[0] = 1.0
        if amax >= 1:
            m[1] = mt
        for k in range(2, amax + 1):
            m[k] = mt * m[k - 1] + (k - 1) * s2 * m[k - 2]
        out = cf(dist, bb) * m[a, np.arange(bb.size)]
    else:
        c, h = dist.center, 0.5 * (dist.hi - dist.lo)
        K = _sym_uniform_table(bb * h, a, amax)
        W = np.zeros((amax + 1, amax + 1))
        for aa in range(amax + 1):
            W[aa, : aa + 1] = [math.comb(aa, k) * c ** (aa - k) * h ** k for k in range(aa + 1)]
        out = (K * W[a]).sum(axis=1)
        if c != 0.0:
            out = out * np.exp(1j * bb * c)
    out = np.asarray(out, dtype=complex).reshape(shape)
    return out[()] if out.ndim == 0 else out


def moment_exp_quadrature(dist, alpha, b=0.0, tol=1e-10) -> complex:
    """Adaptive quadrature of ``x^alpha exp(i b x)`` against the density."""
    if isinstance(alpha, MomentQuery):
        alpha, b = alpha.alpha, alpha.b
    alpha = int(_check_alpha(alpha))
    b = float(b)
    if isinstance(dist, PointMass):
        return complex(dist.value ** alpha * np.exp(1j * b * dist.value))
    if isinstance(dist, Uniform):
        pieces = np.linspace(dist.lo, dist.hi, 9)
        dens = 1.0 / (dist.hi - dist.lo)

        def pdf(x):
            return dens
    else:
        sd = math.sqrt(dist.var)
        pieces = np.linspace(dist.mean - 12 * sd, dist.mean + 12 * sd, 49)
        norm = 1.0 / math.sqrt(2 * math.pi * dist.var)

        def pdf(x):
            return norm * math.exp(-0.5 * (x - dist.mean) ** 2 / dist.var)

    re = im = err = 0.0
    for lo, hi in zip(pieces[:-1], pieces[1:]):
        r, er = integrate.quad(lambda x: x ** alpha * math.cos(b * x) * pdf(x), lo, hi,
                               epsabs=tol / 100, epsrel=1e-12, limit=200)
        re += r
        err += er
        if b != 0.0:
            i, ei = integrate.quad(lambda x: x ** alpha * math.sin(b * x) * pdf(x), lo, hi,
                                   epsabs=tol / 100, epsrel=1e-12, limit=200)
            im += i
            err += ei
    # absolute target, relaxed to 1e-13 relative for large-magnitude moments
    target = max(tol, 1e-13 * abs(complex(re, im)))
    if err > target:
        raise ConvergenceFailure(f"quadrature error estimate {err:.3g} above target {target:g}")
    return complex(re, im)


# -- sampling ----------------------------------------------------------------

def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for sub-stream ``key`` of root ``seed``.

    Splitting rule: ``SeedSequence(seed, spawn_key=key)``, so the same
    (seed, key) always yields the same stream regardless of thread layout.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def sample(dist, rng: np.random.Generator, n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(dist, Gaussian):
        return dist.mean + math.sqrt(dist.var) * rng.standard_normal(n)
    if isinstance(dist, Uniform):
        return dist.lo + (dist.hi - dist.lo) * rng.random(n)
    return np.full(n, float(dist.value))


# -- scenario-file literals ------------------------------------------------

def from_literal(lit: dict, where: str = "distribution"):
    try:
        kind = lit["type"]
        if kind == "gaussian":
            return Gaussian(float(lit["mean"]), float(lit["var"]))
        if kind == "uniform":
            return Uniform(float(lit["lo"]), float(lit["hi"]))
        if kind == "point":
            return PointMass(float(lit["value"]))
    except KeyError as e:
        raise MissingFieldError(f"{where}: missing field {e.args[0]!r}") from None
    except TypeError:
        raise ConfigError(f"{where}: expected an object, got {lit!r}") from None
    raise ConfigError(f"{where}: unknown distribution type {kind!r}")


def to_literal(dist) -> dict:
    if isinstance(dist, Gaussian):
        return {"type": "gaussian", "mean": dist.mean, "var": dist.var}
    if isinstance(dist, Uniform):
        return {"type": "uniform", "lo": dist.lo, "hi": dist.hi}
    return {"type": "point", "value": dist.value}
