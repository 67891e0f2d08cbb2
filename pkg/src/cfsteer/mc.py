"""Monte Carlo validation: particle simulation, empirical moments, ellipses, metric tables.

Particles are generated in fixed-size chunks. Chunk ``i`` of a closed-loop
run draws from ``substream(seed, SIM_STREAM, i)``, so an ensemble is
identical for any worker count.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import dist as D
from .errors import DegenerateEnsembleError, NotPSDError
from .propagate import FeedbackLaw, MomentState, eval_moments, moment_map_for_step, tube_surrogate
from .scenario import ScenarioSpec

CHUNK = 1 << 17
Z_LIMIT = 4.0
PARTICLE_DUMP_CAP = 10_000
LOW_POWER_N = 1000
# sub-stream namespaces under one root seed
SIM_STREAM = 0
CHECK_STREAM = 1


def _chunks(N: int):
    return [(i, s, min(CHUNK, N - s)) for i, s in enumerate(range(0, N, CHUNK))]


def _map_chunks(fn, N: int, threads: int):
    parts = _chunks(N)
    if threads > 1 and len(parts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(lambda p: fn(*p), parts))
    return [fn(*p) for p in parts]


@dataclass
class ParticleEnsemble:
    states: np.ndarray  # (T+1, N, n_x)
    seed: int
    state_names: tuple = ()

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1


def _thetas(scenario: ScenarioSpec, schedule, law: FeedbackLaw) -> list:
    out = []
    for k, g in enumerate(schedule):
        g = np.asarray(g, float)
        if g.ndim == 2:
            g = law.theta_from_gain(g)
        if g.shape != (law.n_params,):
            raise ValueError(f"step {k}: expected {law.n_params} gains, got shape {g.shape}")
        out.append(g)
    if len(out) != scenario.horizon:
        raise ValueError(f"schedule has {len(out)} steps, horizon is {scenario.horizon}")
    return out


def simulate(scenario: ScenarioSpec, schedule, N: int, seed: int = 0, threads: int = 1,
             law: FeedbackLaw | None = None) -> ParticleEnsemble:
    """Closed-loop particles from the initial distribution.

    ``schedule`` holds one entry per step: a gain matrix (n_u, n_x) or a full
    parameter vector for ``law`` (extra polynomial terms included).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    law = law or FeedbackLaw.for_scenario(scenario)
    thetas = _thetas(scenario, schedule, law)
    T, n_x = scenario.horizon, scenario.n_x
    noise = list(scenario.noises.values())
    out = np.empty((T + 1, N, n_x))

    def run(i, start, n):
        rng = D.substream(seed, SIM_STREAM, i)
        x = np.column_stack([D.sample(d, rng, n) for d in scenario.initial])
        out[0, start:start + n] = x
        for k in range(T):
            w = np.column_stack([D.sample(d, rng, n) for d in noise]) if noise else np.zeros((n, 0))
            u = scenario.nominal_controls[k] + law.feedback(thetas[k], x - scenario.nominal_states[k])
            x = scenario.step(x, u, w)
            out[k + 1, start:start + n] = x

    _map_chunks(run, N, threads)
    return ParticleEnsemble(out, seed, tuple(v.name for v in scenario.states))


@dataclass
class EmpiricalMoments:
    state: MomentState
    mean_se: np.ndarray
    cov_se: np.ndarray
    n: int

    def to_dict(self) -> dict:
        d = self.state.to_dict()
        d.update(mean_se=self.mean_se.tolist(), cov_se=self.cov_se.tolist(), n=self.n)
        return d


def sample_moments(X: np.ndarray) -> EmpiricalMoments:
    """Mean, covariance (N-1 denominator) and CLT standard errors of rows of ``X``."""
    X = np.asarray(X, float)
    N = X.shape[0]
    if N < 2:
        raise DegenerateEnsembleError(f"need at least 2 particles, got {N}")
    # shift by the first particle: constant ensembles give exact statistics
    ref = X[0]
    mean = ref + (X - ref).mean(axis=0)
    d = X - mean
    cov = d.T @ d / (N - 1)
    cov = 0.5 * (cov + cov.T)
    second = cov * ((N - 1) / N) + np.outer(mean, mean)
    mean_se = np.sqrt(np.diag(cov) / N)
    m4 = (d * d).T @ (d * d) / N
    cross = (d.T @ d / N) ** 2
    cov_se = np.sqrt(np.maximum(m4 - cross, 0.0) / N)
    return EmpiricalMoments(MomentState(mean, second, cov), mean_se, cov_se, N)


def empirical_moments(ensemble: ParticleEnsemble, k: int) -> EmpiricalMoments:
    if not 0 <= k <= ensemble.horizon:
        raise ValueError(f"step {k} outside 0..{ensemble.horizon}")
    return sample_moments(ensemble.states[k])


# -- one-step oracle check ---------------------------------------------------

@dataclass
class MomentCheck:
    name: str
    analytic: float
    empirical: float
    se: float

    @property
    def z(self) -> float:
        diff = self.empirical - self.analytic
        if self.se == 0.0:
            return 0.0 if abs(diff) <= 1e-12 * (1.0 + abs(self.analytic)) else math.inf
        return diff / self.se

    @property
    def passed(self) -> bool:
        return abs(self.z) <= Z_LIMIT

    def to_dict(self) -> dict:
        return {"name": self.name, "analytic": self.analytic, "empirical": self.empirical,
                "se": self.se, "z": self.z, "passed": self.passed}


@dataclass
class OneStepReport:
    step: int
    n: int
    checks: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def max_abs_z(self) -> float:
        return max((abs(c.z) for c in self.checks), default=0.0)

    def to_dict(self) -> dict:
        return {"step": self.step, "n": self.n, "passed": self.passed, "max_abs_z": self.max_abs_z,
                "warnings": list(self.warnings), "checks": [c.to_dict() for c in self.checks]}


def one_step_check(scenario: ScenarioSpec, law: FeedbackLaw, theta, k: int, N: int = 10**6, seed: int = 0,
                   threads: int = 1, perturb=None, moment_map=None) -> OneStepReport:
    """Compare analytic order-1/2 moments against one pushed step of tube-surrogate samples.

    ``perturb`` optionally maps the analytic MomentState before comparison
    (used to confirm the test detects errors).
    """
    theta = np.asarray(theta, float)
    mmap = moment_map or moment_map_for_step(scenario, law, k)
    analytic = eval_moments(mmap, theta)
    if perturb is not None:
        analytic = perturb(analytic)
    sur = tube_surrogate(scenario, k)
    noise = list(scenario.noises.values())
    n_x = scenario.n_x
    pairs = [(i, j) for i in range(n_x) for j in range(i, n_x)]

    def run(i, start, n):
        rng = D.substream(seed, CHECK_STREAM, k, i)
        x = np.column_stack([D.sample(d, rng, n) for d in sur])
        w = np.column_stack([D.sample(d, rng, n) for d in noise]) if noise else np.zeros((n, 0))
        u = scenario.nominal_controls[k] + law.feedback(theta, x - scenario.nominal_states[k])
        y = scenario.step(x, u, w)
        return np.column_stack([y] + [y[:, a] * y[:, b] for a, b in pairs])

    F = np.concatenate(_map_chunks(run, N, threads))
    est = F.mean(axis=0)
    se = F.std(axis=0, ddof=1) / math.sqrt(N) if N > 1 else np.full(F.shape[1], math.inf)
    names = [v.name for v in scenario.states]
    rep = OneStepReport(k, N)
    if N < LOW_POWER_N:
        rep.warnings.append(f"N={N} gives low statistical power; 4-SE tolerance is correspondingly wide")
    for i in range(n_x):
        rep.checks.append(MomentCheck(f"E[{names[i]}]", float(analytic.mean[i]), float(est[i]), float(se[i])))
    for t, (a, b) in enumerate(pairs):
        rep.checks.append(MomentCheck(f"E[{names[a]}*{names[b]}]", float(analytic.second_moments[a, b]),
                                      float(est[n_x + t]), float(se[n_x + t])))
    return rep


# -- ellipses and tables ----------------------------------------------------

@dataclass(frozen=True)
class EllipseParams:
    center: tuple
    semi_axes: tuple
    angle: float
    confidence: float

    @property
    def quantile(self) -> float:
        return chi2_2dof(self.confidence)

    def shape_matrix(self) -> np.ndarray:
        """``M`` with ``(x-c)^T M (x-c) = 1`` on the boundary (equals C^-1 / q)."""
        c, s = math.cos(self.angle), math.sin(self.angle)
        R = np.array([[c, -s], [s, c]])
        a, b = self.semi_axes
        return R @ np.diag([1.0 / a ** 2, 1.0 / b ** 2]) @ R.T

    def to_dict(self) -> dict:
        return {"center": list(self.center), "semi_axes": list(self.semi_axes), "angle": self.angle,
                "confidence": self.confidence}


def chi2_2dof(p: float) -> float:
    return -2.0 * math.log1p(-p)


def confidence_ellipse(C, center=(0.0, 0.0), p: float = 0.98) -> EllipseParams:
    C = np.asarray(C, float)
    if C.shape != (2, 2):
        raise ValueError("confidence ellipses need a 2x2 covariance")
    if not 0.0 < p < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    if abs(C[0, 1] - C[1, 0]) > 1e-12 * max(1.0, np.abs(C).max()):
        raise NotPSDError("covariance is not symmetric")
    lam, vec = np.linalg.eigh(0.5 * (C + C.T))
    if lam[0] < -1e-10 * max(1.0, abs(lam[1])):
        raise NotPSDError(f"covariance has negative eigenvalue {lam[0]:.3g}")
    lam = np.maximum(lam, 0.0)
    q = chi2_2dof(p)
    if math.isclose(lam[0], lam[1], rel_tol=1e-12, abs_tol=1e-300):
        angle = 0.0
    else:
        v = vec[:, 1]
        angle = math.atan2(v[1], v[0])
        if angle >= math.pi / 2:
            angle -= math.pi
        elif angle < -math.pi / 2:
            angle += math.pi
    axes = (math.sqrt(lam[1] * q), math.sqrt(lam[0] * q))
    return EllipseParams(tuple(float(c) for c in center), axes, angle, p)


METRIC_FIELDS = ("step", "lambda_max", "lambda_min", "trace", "det")


def metric_table(covariances) -> list:
    """Per-step eigenvalue extremes, trace and determinant."""
    if isinstance(covariances, ParticleEnsemble):
        covariances = [empirical_moments(covariances, k).state.covariance for k in range(covariances.horizon + 1)]
    rows = []
    for k, C in enumerate(covariances):
        C = C.covariance if isinstance(C, MomentState) else np.atleast_2d(np.asarray(C, float))
        lam = np.linalg.eigvalsh(0.5 * (C + C.T))
        rows.append({"step": k, "lambda_max": float(lam[-1]), "lambda_min": float(lam[0]),
                     "trace": float(np.trace(C)), "det": float(np.linalg.det(C))})
    return rows


def metric_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=METRIC_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def particle_csv(ensemble: ParticleEnsemble, cap: int = PARTICLE_DUMP_CAP) -> str:
    """First ``cap`` particles at every step (first-N subsampling)."""
    n = min(cap, ensemble.n)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "particle", *ensemble.state_names])
    for k in range(ensemble.horizon + 1):
        for i in range(n):
            w.writerow([k, i, *(repr(float(v)) for v in ensemble.states[k, i])])
    return buf.getvalue()
