"""Closed-loop construction and exact one-step moment maps.

The moment map for step k expresses ``E[x(k+1)]`` and ``E[x(k+1) x(k+1)^T]``
as explicit functions of the feedback gains: every closed-loop product is
Euler-expanded and each term factors, by independence, into per-variable
oracles ``E[x^a exp(i b x)]`` whose frequencies ``b`` are affine in the gains.
Evaluation is compiled to dense arrays so a batch of gain vectors costs a
handful of numpy calls.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import dist as D
from .errors import UnsupportedTubeError
from .expr import MixedTrigExpr, Variable, euler_expand
from .scenario import ScenarioSpec

# parameter variables live outside any scenario symbol table
_PARAM_INDEX_BASE = 1_000_000


@dataclass(frozen=True)
class FeedbackLaw:
    """``u_i = u_i* + sum_j G_ij (x_j - x_j*) + sum_e h_e prod (x - x*)^p``.

    ``parameters`` orders the gain vector: G row-major, then extra terms.
    """

    state_names: tuple
    control_names: tuple
    gains: tuple  # n_u x n_x Variables
    extras: tuple = ()  # ((control index, ((state index, power), ...), Variable), ...)

    @classmethod
    def for_scenario(cls, scenario: ScenarioSpec, extra_terms=None) -> FeedbackLaw:
        xs = tuple(v.name for v in scenario.states)
        us = tuple(v.name for v in scenario.controls)
        idx = itertools.count(_PARAM_INDEX_BASE)
        gains = tuple(
            tuple(Variable(next(idx), f"g_{u}_{x}", "parameter") for x in xs) for u in us
        )
        extras = []
        terms = scenario.extra_terms if extra_terms is None else extra_terms
        for n, t in enumerate(terms):
            ci = us.index(t.control)
            powers = tuple((xs.index(s), p) for s, p in t.powers)
            label = "_".join(f"{s}{p}" for s, p in t.powers)
            extras.append((ci, powers, Variable(next(idx), f"h{n}_{t.control}_{label}", "parameter")))
        return cls(xs, us, gains, tuple(extras))

    @property
    def parameters(self) -> tuple:
        return tuple(v for row in self.gains for v in row) + tuple(e[2] for e in self.extras)

    @property
    def n_params(self) -> int:
        return len(self.parameters)

    def gain_matrix(self, theta) -> np.ndarray:
        n_u, n_x = len(self.control_names), len(self.state_names)
        return np.asarray(theta, float)[: n_u * n_x].reshape(n_u, n_x)

    def theta_from_gain(self, G, extras=None) -> np.ndarray:
        th = np.zeros(self.n_params)
        G = np.asarray(G, float).reshape(len(self.control_names), len(self.state_names))
        th[: G.size] = G.ravel()
        if extras is not None:
            th[G.size:] = extras
        return th

    def feedback(self, theta, dx) -> np.ndarray:
        """Numeric ``u - u*`` for deviations ``dx`` of shape (N, n_x)."""
        theta = np.asarray(theta, float)
        dx = np.asarray(dx, float)
        du = dx @ self.gain_matrix(theta).T
        base = len(self.control_names) * len(self.state_names)
        for n, (ci, powers, _) in enumerate(self.extras):
            mono = np.ones(dx.shape[:-1])
            for j, p in powers:
                mono = mono * dx[..., j] ** p
            du[..., ci] += theta[base + n] * mono
        return du

    def replacement(self, scenario: ScenarioSpec, k: int, i: int) -> MixedTrigExpr:
        x_nom = scenario.nominal_states[k]
        dev = [MixedTrigExpr.variable(v) - float(x_nom[j]) for j, v in enumerate(scenario.states)]
        r = MixedTrigExpr.constant(float(scenario.nominal_controls[k, i]))
        for j, g in enumerate(self.gains[i]):
            r = r + MixedTrigExpr.variable(g) * dev[j]
        for ci, powers, h in self.extras:
            if ci != i:
                continue
            mono = MixedTrigExpr.variable(h)
            for j, p in powers:
                mono = mono * dev[j] ** p
            r = r + mono
        return r


def close_loop(scenario: ScenarioSpec, law: FeedbackLaw, k: int) -> list:
    """Dynamics with every control replaced by the feedback law at step k."""
    reps = [(u, law.replacement(scenario, k, i)) for i, u in enumerate(scenario.controls)]
    out = []
    for f in scenario.dynamics:
        for u, r in reps:
            f = f.substitute(u, r)
        out.append(f)
    return out


def tube_surrogate(scenario: ScenarioSpec, k: int) -> list:
    """Independent uniforms over the box tube around ``x*(k)``."""
    if scenario.tube_kind != "box":
        raise UnsupportedTubeError(f"only box tubes are supported, scenario uses {scenario.tube_kind!r}")
    c = scenario.nominal_states[k]
    e = scenario.tube[k]
    return [D.Uniform(float(c[j] - e[j]), float(c[j] + e[j])) for j in range(scenario.n_x)]


@dataclass
class MomentState:
    mean: np.ndarray
    second_moments: np.ndarray
    covariance: np.ndarray
    imag_residue: float = 0.0

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "second_moments": self.second_moments.tolist(),
                "covariance": self.covariance.tolist()}


class MomentMap:
    """Compiled ``theta -> (E[x+], E[x+ x+^T])`` for one step.

    Internally moments are of ``x+ - center`` with all random inputs
    shifted to zero-centered deviations; this keeps covariances free of
    cancellation against large nominal values.
    """

    def __init__(self, targets, rvars, dists, params, center):
        self.params = tuple(params)
        self.n = len(center)
        self.center = np.asarray(center, float)
        self.rvars = tuple(rvars)
        self.dists = tuple(dists)
        self.pairs = [(i, j) for i in range(self.n) for j in range(i, self.n)]
        self.n_terms = 0
        self._compile(targets)

    def _compile(self, targets):
        pidx = {p: n for n, p in enumerate(self.params)}
        P = len(self.params)
        ridx = {v: n for n, v in enumerate(self.rvars)}
        rows = []  # (target, term)
        for t, terms in enumerate(targets):
            rows.extend((t, term) for term in terms)
        nt = len(rows)
        self.n_terms = nt

        monos: dict = {}
        for _, term in rows:
            for m, _ in term.poly.terms:
                monos.setdefault(m, len(monos))
        E = np.zeros((len(monos), P))
        for m, r in monos.items():
            for v, p in m:
                E[r, pidx[v]] = p
        cpoly = np.zeros((nt, len(monos)), dtype=complex)
        phase = np.zeros((nt, P + 1))

        def affine_row(a):
            row = np.zeros(P + 1)
            row[0] = a.constant
            for v, c in a.coeffs:
                row[1 + pidx[v]] = c
            return row

        groups = [dict() for _ in self.rvars]
        TI = np.empty((nt, len(self.rvars)), dtype=np.int64)
        group_rows = [[] for _ in self.rvars]
        for r, (_, term) in enumerate(rows):
            for m, c in term.poly.terms:
                cpoly[r, monos[m]] += c
            phase[r] = affine_row(term.phase)
            pw = dict(term.powers)
            fq = dict(term.freq)
            for v, g in zip(self.rvars, range(len(self.rvars))):
                a = pw.get(v, 0)
                f = fq.get(v)
                if a == 0 and f is None:
                    TI[r, g] = -1
                    continue
                key = (a, f.key() if f is not None else None)
                if key not in groups[g]:
                    groups[g][key] = len(groups[g])
                    group_rows[g].append((a, affine_row(f) if f is not None else np.zeros(P + 1)))
                TI[r, g] = groups[g][key]
            for v in set(pw) | set(fq):
                if v not in ridx:
                    raise ValueError(f"variable {v.name} has no distribution")
        # global factor layout, sentinel (value 1) last
        self._groups = []
        off = 0
        for g, items in enumerate(group_rows):
            alpha = np.array([a for a, _ in items], dtype=int)
            F = np.array([row for _, row in items]).reshape(len(items), P + 1)
            self._groups.append((off, alpha, F, self.dists[g]))
            TI[TI[:, g] >= 0, g] += off
            off += len(items)
        TI[TI < 0] = off
        self._n_factors = off
        self._TI = TI
        self._E = E
        self._E_int = E.astype(int)
        self._cpoly_T = cpoly.T.copy()
        self._phase_T = phase.T.copy()
        self._has_phase = bool(np.any(phase != 0))
        S = np.zeros((len(targets), nt))
        for r, (t, _) in enumerate(rows):
            S[t, r] = 1.0
        self._S_T = S.T.copy()

    def raw(self, thetas) -> tuple[np.ndarray, float]:
        """Centered raw moments for a batch, shape (B, n_targets), plus imag residue."""
        th = np.atleast_2d(np.asarray(thetas, float))
        B = th.shape[0]
        if len(self.params) != th.shape[1]:
            raise ValueError(f"expected {len(self.params)} parameters, got {th.shape[1]}")
        th1 = np.hstack([np.ones((B, 1)), th])
        if self._E.shape[0]:
            mono = np.ones((B, self._E.shape[0]))
            for p in range(th.shape[1]):
                col = self._E_int[:, p]
                if col.any():
                    mono = mono * th[:, p:p + 1] ** col[None, :]
            vals = mono @ self._cpoly_T
        else:
            vals = np.zeros((B, 0), dtype=complex)
        if self._has_phase:
            vals = vals * np.exp(1j * (th1 @ self._phase_T))
        fv = np.empty((B, self._n_factors + 1), dtype=complex)
        fv[:, -1] = 1.0
        for off, alpha, F, d in self._groups:
            if alpha.size == 0:
                continue
            b = th1 @ F.T
            fv[:, off:off + alpha.size] = D.moment_exp(d, alpha[None, :], b)
        for g in range(self._TI.shape[1]):
            vals = vals * fv[:, self._TI[:, g]]
        out = vals @ self._S_T
        scale = 1.0 + np.abs(out.real)
        residue = float(np.max(np.abs(out.imag) / scale)) if out.size else 0.0
        return out.real, residue

    def evaluate_batch(self, thetas):
        """(means (B,n), second moments (B,n,n), covariances (B,n,n), residue)."""
        raw, residue = self.raw(thetas)
        n = self.n
        m1 = raw[:, :n]
        M2 = np.empty((raw.shape[0], n, n))
        for t, (i, j) in enumerate(self.pairs):
            M2[:, i, j] = M2[:, j, i] = raw[:, n + t]
        cov = M2 - m1[:, :, None] * m1[:, None, :]
        cov = 0.5 * (cov + np.swapaxes(cov, 1, 2))
        c = self.center
        mean = c[None, :] + m1
        second = M2 + c[None, :, None] * m1[:, None, :] + m1[:, :, None] * c[None, None, :] + np.outer(c, c)[None]
        second = 0.5 * (second + np.swapaxes(second, 1, 2))
        return mean, second, cov, residue

    def covariance_batch(self, thetas) -> np.ndarray:
        return self.evaluate_batch(thetas)[2]


def build_moment_map(closed_loop, surrogate, noise_dists, params=None, states=None) -> MomentMap:
    """Moment map of the next state from per-state surrogate and noise distributions.

    ``surrogate`` and ``noise_dists`` map Variables to distributions (a list
    aligned with ``states`` is accepted for the surrogate).
    """
    if not isinstance(surrogate, dict):
        surrogate = dict(zip(states, surrogate))
    dists = {**surrogate, **noise_dists}
    exprs = list(closed_loop)
    # shift every random input to a zero-centered deviation (point masses vanish)
    rvars, rdists = [], []
    for v, d in dists.items():
        if isinstance(d, D.PointMass):
            exprs = [e.substitute(v, d.value) for e in exprs]
            continue
        c = d.center
        if c != 0.0:
            shift = MixedTrigExpr.variable(v) + c
            exprs = [e.substitute(v, shift) for e in exprs]
        rvars.append(v)
        rdists.append(d.centered())
    if params is None:
        params = sorted(set().union(*(e.parameters() for e in exprs)) if exprs else [])
    env = {v.name: 0.0 for v in rvars}
    env.update({p.name: 0.0 for p in params})
    center = [float(np.real(e.evaluate(env))) for e in exprs]
    dev = [e - c for e, c in zip(exprs, center)]
    targets = [euler_expand(g) for g in dev]
    for i in range(len(dev)):
        for j in range(i, len(dev)):
            targets.append(euler_expand(dev[i] * dev[j]))
    return MomentMap(targets, rvars, rdists, params, center)


def moment_map_for_step(scenario: ScenarioSpec, law: FeedbackLaw, k: int) -> MomentMap:
    cl = close_loop(scenario, law, k)
    return build_moment_map(cl, tube_surrogate(scenario, k), dict(scenario.noises),
                            params=law.parameters, states=scenario.states)


def eval_moments(mmap: MomentMap, theta) -> MomentState:
    mean, second, cov, residue = mmap.evaluate_batch(np.atleast_2d(theta))
    return MomentState(mean[0], second[0], cov[0], residue)
