"""Scenario model: dynamics, nominal trajectory, tube, weights and gain box."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import dist as D
from .errors import ConfigError, ExprSyntaxError, InconsistentDimensionsError, MissingFieldError, NotInClassError
from .expr import SymbolTable, parse

BUILTINS = ("oned", "vehicle", "pendulum")
DEFAULT_GAIN_BOUND = 100.0


@dataclass(frozen=True)
class ExtraTerm:
    """Polynomial feedback term ``h * prod_j (x_j - x_j*)^p_j`` on one control."""

    control: str
    powers: tuple  # ((state name, power), ...)

    @property
    def degree(self) -> int:
        return sum(p for _, p in self.powers)


@dataclass
class ScenarioSpec:
    name: str
    symbols: SymbolTable
    states: tuple
    controls: tuple
    noises: dict  # Variable -> distribution, declaration order
    dynamics: tuple  # MixedTrigExpr per state
    horizon: int
    nominal_controls: np.ndarray  # (T, n_u)
    nominal_states: np.ndarray  # (T+1, n_x)
    tube: np.ndarray  # (T+1, n_x) half-widths
    initial: tuple  # distribution per state
    weights: tuple = (1.0, 1.0)
    gain_lower: np.ndarray = None  # (n_u, n_x)
    gain_upper: np.ndarray = None
    extra_terms: tuple = ()
    extra_lower: np.ndarray = None  # (n_extra,)
    extra_upper: np.ndarray = None
    lqr_Q: np.ndarray = None
    lqr_R: np.ndarray = None
    lqr_Qf: np.ndarray = None
    tube_kind: str = "box"
    source: dict = field(default_factory=dict)

    @property
    def n_x(self) -> int:
        return len(self.states)

    @property
    def n_u(self) -> int:
        return len(self.controls)

    @property
    def noise_vars(self) -> tuple:
        return tuple(self.noises)

    def noise_means(self) -> np.ndarray:
        return np.array([D.mean(d) for d in self.noises.values()])

    def step(self, x, u, w) -> np.ndarray:
        """Apply the nonlinear dynamics to arrays ``x (N,n_x)``, ``u (N,n_u)``, ``w (N,n_w)``."""
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        w = np.asarray(w, dtype=float)
        env = {v.name: x[..., j] for j, v in enumerate(self.states)}
        env.update({v.name: u[..., j] for j, v in enumerate(self.controls)})
        env.update({v.name: w[..., j] for j, v in enumerate(self.noise_vars)})
        out = np.empty(np.broadcast_shapes(x.shape[:-1], u.shape[:-1], w.shape[:-1]) + (self.n_x,))
        for i, f in enumerate(self.dynamics):
            out[..., i] = np.real(f.evaluate(env))
        return out

    def nominal_rollout(self, x0=None) -> np.ndarray:
        """Noise-free rollout under ``u*`` with noises fixed at their means."""
        x = np.array([D.mean(d) for d in self.initial]) if x0 is None else np.asarray(x0, float)
        out = [x]
        wm = self.noise_means()
        for k in range(self.horizon):
            x = self.step(x, self.nominal_controls[k], wm)
            out.append(x)
        return np.array(out).reshape(self.horizon + 1, self.n_x)


# -- loading ---------------------------------------------------------------

def _require(cfg, key, where="scenario"):
    if key not in cfg:
        raise MissingFieldError(f"{where}: missing field {key!r}")
    return cfg[key]


def _per_step(value, steps: int, where: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(steps, float(arr))
    if arr.shape != (steps,):
        raise InconsistentDimensionsError(f"{where}: expected a number or {steps} values, got shape {arr.shape}")
    return arr


def _matrix(value, shape, where: str, default: float) -> np.ndarray:
    if value is None:
        return np.full(shape, default)
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(shape, float(arr))
    if arr.shape != shape:
        raise InconsistentDimensionsError(f"{where}: expected shape {shape}, got {arr.shape}")
    return arr


def scenario_from_dict(cfg: dict, name: str | None = None) -> ScenarioSpec:
    cfg = copy.deepcopy(cfg)
    symbols = SymbolTable(cfg.get("constants"))
    state_names = list(_require(cfg, "states"))
    control_names = list(cfg.get("controls", []))
    noise_cfg = cfg.get("noises", {})
    try:
        states = tuple(symbols.declare(s, "state") for s in state_names)
        controls = tuple(symbols.declare(s, "control") for s in control_names)
        noises = {symbols.declare(s, "noise"): D.from_literal(lit, f"noises.{s}") for s, lit in noise_cfg.items()}
    except ValueError as e:
        raise ConfigError(str(e)) from None
    if not states:
        raise ConfigError("scenario: at least one state is required")

    dyn_cfg = _require(cfg, "dynamics")
    dynamics = []
    for s in state_names:
        if s not in dyn_cfg:
            raise MissingFieldError(f"dynamics: no expression for state {s!r}")
        text = dyn_cfg[s]
        try:
            e = parse(text, symbols)
        except (ExprSyntaxError, NotInClassError) as err:
            raise type(err)(f"dynamics.{s}: {err}") from None
        dynamics.append(e)
    extra_keys = set(dyn_cfg) - set(state_names)
    if extra_keys:
        raise InconsistentDimensionsError(f"dynamics: expressions for undeclared states {sorted(extra_keys)}")

    T = int(_require(cfg, "horizon"))
    if T < 0:
        raise ConfigError("horizon: must be >= 0")
    n_x, n_u = len(states), len(controls)

    nc = cfg.get("nominal_controls", {})
    u_nom = np.zeros((T, n_u))
    for j, c in enumerate(control_names):
        if c not in nc:
            raise MissingFieldError(f"nominal_controls: missing sequence for control {c!r}")
        u_nom[:, j] = _per_step(nc[c], T, f"nominal_controls.{c}")

    init_cfg = _require(cfg, "initial")
    initial = []
    for s in state_names:
        if s not in init_cfg:
            raise MissingFieldError(f"initial: missing distribution for state {s!r}")
        initial.append(D.from_literal(init_cfg[s], f"initial.{s}"))

    tube_cfg = _require(cfg, "tube")
    tube_kind = cfg.get("tube_kind", "box")
    tube = np.zeros((T + 1, n_x))
    for j, s in enumerate(state_names):
        if s not in tube_cfg:
            raise MissingFieldError(f"tube: missing half-width for state {s!r}")
        tube[:, j] = _per_step(tube_cfg[s], T + 1, f"tube.{s}")
    if np.any(tube <= 0):
        raise ConfigError("tube: half-widths must be strictly positive")

    weights = cfg.get("weights", {})
    w = (float(weights.get("w1", 1.0)), float(weights.get("w2", 1.0)))
    if min(w) < 0 or max(w) == 0:
        raise ConfigError("weights: w1, w2 must be nonnegative and not both zero")

    box = cfg.get("gain_box", {})
    lo = _matrix(box.get("lower"), (n_u, n_x), "gain_box.lower", -DEFAULT_GAIN_BOUND)
    hi = _matrix(box.get("upper"), (n_u, n_x), "gain_box.upper", DEFAULT_GAIN_BOUND)
    if np.any(lo >= hi):
        raise ConfigError("gain_box: lower must be strictly below upper")

    extras = []
    for i, item in enumerate(cfg.get("feedback", {}).get("extra", [])):
        c = _require(item, "control", f"feedback.extra[{i}]")
        mono = _require(item, "monomial", f"feedback.extra[{i}]")
        if c not in control_names or any(s not in state_names for s in mono):
            raise ConfigError(f"feedback.extra[{i}]: unknown control or state")
        term = ExtraTerm(c, tuple((s, int(mono[s])) for s in state_names if s in mono and int(mono[s]) > 0))
        if term.degree < 2:
            raise ConfigError(f"feedback.extra[{i}]: extra feedback terms must have degree >= 2")
        extras.append(term)
    ebox = cfg.get("feedback", {}).get("box", {})
    elo = _matrix(ebox.get("lower"), (len(extras),), "feedback.box.lower", -DEFAULT_GAIN_BOUND)
    ehi = _matrix(ebox.get("upper"), (len(extras),), "feedback.box.upper", DEFAULT_GAIN_BOUND)

    lqr = cfg.get("lqr", {})
    Q = _matrix(lqr.get("Q"), (n_x, n_x), "lqr.Q", 0.0) if "Q" in lqr else np.eye(n_x)
    R = _matrix(lqr.get("R"), (n_u, n_u), "lqr.R", 0.0) if "R" in lqr else np.eye(n_u)
    Qf = _matrix(lqr.get("Qf"), (n_x, n_x), "lqr.Qf", 0.0) if "Qf" in lqr else np.eye(n_x)

    spec = ScenarioSpec(
        name=name or cfg.get("name", "scenario"),
        symbols=symbols, states=states, controls=controls, noises=noises,
        dynamics=tuple(dynamics), horizon=T, nominal_controls=u_nom,
        nominal_states=np.zeros((T + 1, n_x)), tube=tube, initial=tuple(initial),
        weights=w, gain_lower=lo, gain_upper=hi, extra_terms=tuple(extras),
        extra_lower=elo, extra_upper=ehi, lqr_Q=Q, lqr_R=R, lqr_Qf=Qf,
        tube_kind=tube_kind, source=cfg,
    )
    ns = cfg.get("nominal_states")
    if ns is None:
        spec.nominal_states = spec.nominal_rollout()
    else:
        xs = np.zeros((T + 1, n_x))
        for j, s in enumerate(state_names):
            if s not in ns:
                raise MissingFieldError(f"nominal_states: missing sequence for state {s!r}")
            xs[:, j] = _per_step(ns[s], T + 1, f"nominal_states.{s}")
        spec.nominal_states = xs
    return spec


def builtin_config(name: str) -> dict:
    if name not in BUILTINS:
        raise ConfigError(f"unknown built-in scenario {name!r}; choose from {', '.join(BUILTINS)}")
    text = resources.files("cfsteer").joinpath("scenarios", f"{name}.json").read_text()
    return json.loads(text)


def read_config(path_or_name) -> dict:
    """Raw config dict for a built-in name, a JSON file path or a dict (copied)."""
    if isinstance(path_or_name, dict):
        return copy.deepcopy(path_or_name)
    if str(path_or_name) in BUILTINS:
        return builtin_config(str(path_or_name))
    p = Path(path_or_name)
    if not p.exists():
        raise ConfigError(f"scenario file {p} not found")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{p}: invalid JSON ({e})") from None
    if isinstance(cfg, dict):
        cfg.setdefault("name", p.stem)
    return cfg


def load_scenario(path_or_name, overrides: dict | None = None) -> ScenarioSpec:
    """Load a built-in by name or a JSON scenario file, then apply top-level overrides."""
    cfg = read_config(path_or_name)
    for key, value in (overrides or {}).items():
        cfg[key] = value
    return scenario_from_dict(cfg)


def describe(scenario: ScenarioSpec) -> dict:
    """Plain-data summary of a resolved scenario (for reports)."""
    return {
        "name": scenario.name,
        "states": [v.name for v in scenario.states],
        "controls": [v.name for v in scenario.controls],
        "noises": {v.name: D.to_literal(d) for v, d in scenario.noises.items()},
        "horizon": scenario.horizon,
        "nominal_states": scenario.nominal_states.tolist(),
        "nominal_controls": scenario.nominal_controls.tolist(),
    }


__all__ = ["BUILTINS", "ExtraTerm", "ScenarioSpec", "builtin_config", "describe", "read_config",
           "load_scenario", "scenario_from_dict"]
