"""Plain (zero feedback) and finite-horizon LQR gain schedules."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InconsistentDimensionsError, SingularInnovationError
from .scenario import ScenarioSpec

COND_LIMIT = 1e12


@dataclass(frozen=True)
class LinearizedStep:
    A: np.ndarray
    B: np.ndarray


@dataclass
class LqrSchedule:
    K: list  # n_u x n_x per step, u = -K (x - x*) + u*
    P: list  # n_x x n_x, k = 0..T

    @property
    def gains(self) -> list:
        """Gain matrices in the ``u - u* = G (x - x*)`` convention."""
        return [-K for K in self.K]


def _fd_jacobian(fun, z0: np.ndarray) -> np.ndarray:
    h = 1e-6 * (1.0 + np.abs(z0))
    n = z0.size
    pts = np.repeat(z0[None, :], 2 * n, axis=0)
    idx = np.arange(n)
    pts[idx, idx] += h
    pts[n + idx, idx] -= h
    vals = fun(pts)
    span = pts[idx, idx] - pts[n + idx, idx]
    return ((vals[:n] - vals[n:]) / span[:, None]).T


def linearize(scenario: ScenarioSpec, k: int) -> LinearizedStep:
    """Central-difference Jacobians at ``(x*(k), u*(k))`` with noises at their means."""
    n_x = scenario.n_x
    xk = scenario.nominal_states[k]
    uk = scenario.nominal_controls[k]
    wm = scenario.noise_means()
    z0 = np.concatenate([xk, uk])

    def fun(Z):
        W = np.broadcast_to(wm, (Z.shape[0], wm.size))
        return scenario.step(Z[:, :n_x], Z[:, n_x:], W)

    J = _fd_jacobian(fun, z0)
    return LinearizedStep(J[:, :n_x], J[:, n_x:])


def linearize_all(scenario: ScenarioSpec) -> list:
    return [linearize(scenario, k) for k in range(scenario.horizon)]


def lqr_schedule(steps, Q, R, Qf) -> LqrSchedule:
    """Backward Riccati recursion from ``P(T) = Qf``."""
    Q, R, Qf = (np.atleast_2d(np.asarray(m, float)) for m in (Q, R, Qf))
    T = len(steps)
    P = [None] * (T + 1)
    K = [None] * T
    P[T] = Qf.copy()
    for k in range(T - 1, -1, -1):
        A, B = np.atleast_2d(steps[k].A), np.atleast_2d(steps[k].B)
        if A.shape[0] != Q.shape[0] or B.shape[1] != R.shape[0]:
            raise InconsistentDimensionsError(f"step {k}: A{A.shape}, B{B.shape} do not match Q{Q.shape}, R{R.shape}")
        Pn = P[k + 1]
        S = R + B.T @ Pn @ B
        if np.linalg.cond(S) > COND_LIMIT:
            raise SingularInnovationError("R + B'PB is numerically singular", step=k)
        Kk = np.linalg.solve(S, B.T @ Pn @ A)
        Pk = Q + A.T @ Pn @ A - A.T @ Pn @ B @ Kk
        K[k] = Kk
        P[k] = 0.5 * (Pk + Pk.T)
    return LqrSchedule(K, P)


def riccati_residual(steps, sched: LqrSchedule, Q, R) -> float:
    """Max relative mismatch of P(k) against the Joseph-form recomputation."""
    Q, R = np.atleast_2d(Q), np.atleast_2d(R)
    worst = 0.0
    for k, st in enumerate(steps):
        A, B, Kk, Pn = st.A, st.B, sched.K[k], sched.P[k + 1]
        Acl = A - B @ Kk
        Pj = Q + Kk.T @ R @ Kk + Acl.T @ Pn @ Acl
        scale = max(1.0, float(np.max(np.abs(sched.P[k]))))
        worst = max(worst, float(np.max(np.abs(Pj - sched.P[k]))) / scale)
    return worst


def lqr_for_scenario(scenario: ScenarioSpec) -> LqrSchedule:
    return lqr_schedule(linearize_all(scenario), scenario.lqr_Q, scenario.lqr_R, scenario.lqr_Qf)


def plain_schedule(scenario: ScenarioSpec) -> list:
    return [np.zeros((scenario.n_u, scenario.n_x)) for _ in range(scenario.horizon)]
