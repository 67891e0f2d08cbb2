"""Box-constrained multi-start minimization of ``w1 tr(C) + w2 det(C)``."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .propagate import MomentMap

DEFAULT_STARTS = 8
MAX_ITER = 500
PG_TOL = 1e-8
ARMIJO_C = 1e-4
BACKTRACK = 0.5
MAX_HALVINGS = 60
LINE_BATCH = 8  # trial steps evaluated per objective batch


@dataclass(frozen=True)
class GainBox:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, float).ravel()
        hi = np.asarray(self.upper, float).ravel()
        if lo.shape != hi.shape:
            raise ConfigError("gain box bounds differ in size")
        if np.any(lo >= hi):
            raise ConfigError("gain box needs lower < upper elementwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def uniform(cls, n: int, lo: float, hi: float) -> GainBox:
        return cls(np.full(n, float(lo)), np.full(n, float(hi)))

    @classmethod
    def for_scenario(cls, scenario) -> GainBox:
        return cls(np.concatenate([scenario.gain_lower.ravel(), scenario.extra_lower]),
                   np.concatenate([scenario.gain_upper.ravel(), scenario.extra_upper]))

    @property
    def size(self) -> int:
        return self.lower.size

    def project(self, theta) -> np.ndarray:
        return np.minimum(np.maximum(theta, self.lower), self.upper)


def det_small(C: np.ndarray) -> np.ndarray:
    """Determinant over the trailing two axes; cofactor expansion for n <= 3."""
    n = C.shape[-1]
    if n == 0:
        return np.ones(C.shape[:-2])
    if n == 1:
        return C[..., 0, 0]
    if n == 2:
        return C[..., 0, 0] * C[..., 1, 1] - C[..., 0, 1] * C[..., 1, 0]
    if n == 3:
        return (C[..., 0, 0] * (C[..., 1, 1] * C[..., 2, 2] - C[..., 1, 2] * C[..., 2, 1])
                - C[..., 0, 1] * (C[..., 1, 0] * C[..., 2, 2] - C[..., 1, 2] * C[..., 2, 0])
                + C[..., 0, 2] * (C[..., 1, 0] * C[..., 2, 1] - C[..., 1, 1] * C[..., 2, 0]))
    return np.linalg.det(C)


def _check_weights(w1, w2):
    if w1 < 0 or w2 < 0 or (w1 == 0 and w2 == 0):
        raise ConfigError("weights must be nonnegative and not both zero")


def objective_from_cov(C, w1: float, w2: float):
    C = np.asarray(C, float)
    return w1 * np.trace(C, axis1=-2, axis2=-1) + w2 * det_small(C)


def objective(mmap: MomentMap, theta, w1: float = 1.0, w2: float = 1.0) -> float:
    _check_weights(w1, w2)
    return float(objective_from_cov(mmap.covariance_batch(np.atleast_2d(theta))[0], w1, w2))


@dataclass
class StartRecord:
    start: np.ndarray
    theta: np.ndarray
    objective: float
    start_objective: float
    status: str
    iterations: int

    def to_dict(self) -> dict:
        return {"start": self.start.tolist(), "theta": self.theta.tolist(), "objective": self.objective,
                "start_objective": self.start_objective, "status": self.status,
                "iterations": self.iterations}


@dataclass
class OptimizationResult:
    theta: np.ndarray
    objective: float
    status: str
    records: list = field(default_factory=list)
    best_index: int = 0

    def to_dict(self) -> dict:
        return {"theta": self.theta.tolist(), "objective": self.objective, "status": self.status,
                "best_index": self.best_index, "records": [r.to_dict() for r in self.records]}


class _Problem:
    def __init__(self, mmap, box, w1, w2):
        self.mmap, self.box, self.w1, self.w2 = mmap, box, w1, w2

    def values(self, thetas) -> np.ndarray:
        return objective_from_cov(self.mmap.covariance_batch(thetas), self.w1, self.w2)

    def gradient(self, theta) -> np.ndarray:
        n = theta.size
        h = 1e-6 * (1.0 + np.abs(theta))
        pts = np.repeat(theta[None, :], 2 * n, axis=0)
        idx = np.arange(n)
        pts[idx, idx] += h
        pts[n + idx, idx] -= h
        # use the realized steps so rounding in theta +- h does not bias the slope
        span = pts[idx, idx] - pts[n + idx, idx]
        v = self.values(pts)
        return (v[:n] - v[n:]) / span


def projected_gradient(theta, g, box: GainBox) -> np.ndarray:
    pg = g.copy()
    pg[(theta <= box.lower) & (g > 0)] = 0.0
    pg[(theta >= box.upper) & (g < 0)] = 0.0
    return pg


def local_descent(mmap: MomentMap, box: GainBox, theta0, w1=1.0, w2=1.0, max_iter=MAX_ITER) -> StartRecord:
    """Projected BFGS with finite-difference gradients and a backtracking line search."""
    prob = _Problem(mmap, box, w1, w2)
    start = box.project(np.asarray(theta0, float))
    theta = start.copy()
    f = float(prob.values(theta[None, :])[0])
    f_start = f
    g = prob.gradient(theta)
    n = theta.size
    H = None
    status = "iteration-cap"
    it = 0
    for it in range(max_iter + 1):
        pg = projected_gradient(theta, g, box)
        if np.max(np.abs(pg), initial=0.0) < PG_TOL:
            status = "converged"
            break
        if it == max_iter:
            break
        free = pg != 0.0
        if H is None:
            # first step: unit projected-gradient length in the inf-norm
            d = -pg / max(np.max(np.abs(pg)), 1.0)
        else:
            d = np.zeros(n)
            d[free] = -H[np.ix_(free, free)] @ g[free]
            if g @ d >= 0:
                H = None
                d = -pg / max(np.max(np.abs(pg)), 1.0)
        theta_new = f_new = None
        alpha = 1.0
        for _ in range(0, MAX_HALVINGS, LINE_BATCH):
            alphas = alpha * BACKTRACK ** np.arange(LINE_BATCH)
            trials = box.project(theta[None, :] + alphas[:, None] * d[None, :])
            vals = prob.values(trials)
            armijo = f + ARMIJO_C * (trials - theta[None, :]) @ g
            ok = np.flatnonzero((vals <= armijo) & np.any(trials != theta[None, :], axis=1))
            if ok.size:
                theta_new, f_new = trials[ok[0]], float(vals[ok[0]])
                break
            alpha = alphas[-1] * BACKTRACK
        if theta_new is None:
            # no decrease possible at working precision
            tol = 1e-6 * (1.0 + abs(f))
            status = "converged" if np.max(np.abs(pg)) <= tol else "stalled"
            break
        g_new = prob.gradient(theta_new)
        s, y = theta_new - theta, g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            if H is None:
                H = np.eye(n) * (sy / float(y @ y))
            rho = 1.0 / sy
            V = np.eye(n) - rho * np.outer(s, y)
            H = V @ H @ V.T + rho * np.outer(s, s)
        theta, f, g = theta_new, f_new, g_new
    return StartRecord(start, theta, f, f_start, status, it)


def start_points(box: GainBox, starts: int, seed: int) -> np.ndarray:
    if starts < 1:
        raise ConfigError("starts must be >= 1")
    rng = np.random.default_rng(seed)
    pts = [box.project(np.zeros(box.size))]
    if starts > 1:
        u = rng.random((starts - 1, box.size))
        pts.extend(box.lower + u * (box.upper - box.lower))
    return np.array(pts)


def _better(a: StartRecord, b: StartRecord) -> bool:
    if a.objective < b.objective - 1e-12:
        return True
    if abs(a.objective - b.objective) <= 1e-12:
        return np.linalg.norm(a.theta) < np.linalg.norm(b.theta)
    return False


def optimize_gains(mmap: MomentMap, box: GainBox, w1=1.0, w2=1.0, starts=DEFAULT_STARTS, seed=0,
                   threads: int = 1, max_iter: int = MAX_ITER) -> OptimizationResult:
    _check_weights(w1, w2)
    if box.size != len(mmap.params):
        raise ConfigError(f"gain box has {box.size} entries, map has {len(mmap.params)} parameters")
    pts = start_points(box, starts, seed)

    def run(p):
        return local_descent(mmap, box, p, w1, w2, max_iter)

    if threads > 1 and len(pts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            records = list(ex.map(run, pts))
    else:
        records = [run(p) for p in pts]
    best = 0
    for i, r in enumerate(records[1:], start=1):
        if _better(r, records[best]):
            best = i
    b = records[best]
    return OptimizationResult(b.theta.copy(), b.objective, b.status, records, best)
