"""Regenerate the built-in scenario files under src/cfsteer/scenarios/.

The nominal control sequences are not published, so they are computed here
once and stored explicitly:

* oned: u*(k) = -1, which holds the noise-free state at the fixed point 0.
* vehicle: constant heading and speed along the straight line to the goal.
* pendulum: minimum-energy torque sequence that reaches (0, 0) from (-pi, 0)
  in 10 steps, found by constrained shooting on the noise-free dynamics.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

DT = 0.1
T = 10
OUT = Path(__file__).resolve().parents[1] / "src" / "cfsteer" / "scenarios"


def oned() -> dict:
    return {
        "name": "oned",
        "constants": {"dt": DT, "alpha": 0.1},
        "states": ["x"],
        "controls": ["u"],
        "noises": {"w": {"type": "gaussian", "mean": 0.0, "var": 0.01}},
        "dynamics": {"x": "x + cos(x)*dt + u*dt + alpha*x^2*w"},
        "horizon": T,
        "nominal_controls": {"u": -1.0},
        "initial": {"x": {"type": "uniform", "lo": -0.5, "hi": 0.5}},
        "tube": {"x": 0.5},
        "weights": {"w1": 1.0, "w2": 1.0},
    }


def vehicle() -> dict:
    goal = (0.7624, 0.2488)
    heading = math.atan2(goal[1], goal[0])
    speed = math.hypot(*goal) / (T * DT)
    return {
        "name": "vehicle",
        "constants": {"dt": DT},
        "states": ["x", "y"],
        "controls": ["v", "th"],
        "noises": {
            "wv": {"type": "gaussian", "mean": 0.0, "var": 0.01},
            "wth": {"type": "gaussian", "mean": 0.0, "var": 0.01},
        },
        "dynamics": {
            "x": "x + dt*(v + wv)*cos(th + wth)",
            "y": "y + dt*(v + wv)*sin(th + wth)",
        },
        "horizon": T,
        "nominal_controls": {"v": [speed] * T, "th": [heading] * T},
        "initial": {
            "x": {"type": "uniform", "lo": -0.1, "hi": 0.1},
            "y": {"type": "uniform", "lo": -0.1, "hi": 0.1},
        },
        "tube": {"x": 0.1, "y": 0.1},
        "weights": {"w1": 1.0, "w2": 1.0},
    }


def _pendulum_rollout(u):
    x, y = -math.pi, 0.0
    for uk in u:
        x, y = x + y * DT, y + 4 * math.sin(x) * DT + uk * DT
    return np.array([x, y])


def pendulum_controls() -> list:
    # start from the linear (gravity-free) minimum-energy solution and refine
    res = minimize(lambda u: 0.5 * float(u @ u), np.full(T, 10.0),
                   jac=lambda u: u,
                   constraints=[{"type": "eq", "fun": _pendulum_rollout}],
                   method="SLSQP", options={"ftol": 1e-14, "maxiter": 500})
    if not res.success or np.abs(_pendulum_rollout(res.x)).max() > 1e-9:
        raise RuntimeError(f"swing-up shooting failed: {res.message}")
    return [float(v) for v in res.x]


def pendulum() -> dict:
    return {
        "name": "pendulum",
        "constants": {"dt": DT, "alpha": 0.04},
        "states": ["x", "y"],
        "controls": ["u"],
        "noises": {"w": {"type": "gaussian", "mean": 0.0, "var": 1.0}},
        "dynamics": {
            "x": "x + y*dt",
            "y": "y + 4*sin(x)*dt + u*dt + alpha*u*w",
        },
        "horizon": T,
        "nominal_controls": {"u": pendulum_controls()},
        "initial": {
            "x": {"type": "uniform", "lo": -math.pi - 0.1, "hi": -math.pi + 0.1},
            "y": {"type": "uniform", "lo": -0.1, "hi": 0.1},
        },
        "tube": {"x": 0.1, "y": 0.1},
        "weights": {"w1": 1.0, "w2": 1.0},
    }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for build in (oned, vehicle, pendulum):
        cfg = build()
        path = OUT / f"{cfg['name']}.json"
        path.write_text(json.dumps(cfg, indent=2) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
