"""End-to-end pipelines behind the CLI: synthesis, baselines, validation, reports."""
from __future__ import annotations

import copy
import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, dist as D, mc
from .baselines import lqr_for_scenario, plain_schedule
from .errors import CfsteerError, ConfigError, NumericalError
from .expr import euler_expand
from .optimize import DEFAULT_STARTS, GainBox, optimize_gains
from .propagate import FeedbackLaw, eval_moments, moment_map_for_step
from .scenario import ScenarioSpec, load_scenario, read_config

log = logging.getLogger(__name__)

OPT_STREAM = 2
ELLIPSE_P = 0.98
# scenario fields a run may override
OVERRIDABLE = ("weights", "gain_box", "tube", "feedback", "lqr", "horizon", "nominal_controls",
               "nominal_states", "initial", "noises")


@dataclass
class RunConfig:
    """What to run. ``threads`` and ``out`` affect execution only, never results."""

    scenario: str | dict = "oned"
    seed: int = 0
    particles: int = 10**6
    starts: int = DEFAULT_STARTS
    overrides: dict = field(default_factory=dict)
    threads: int = 1
    out: str | None = None

    def __post_init__(self):
        if self.particles < 1:
            raise ConfigError("particles must be >= 1")
        if self.starts < 1:
            raise ConfigError("starts must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        bad = set(self.overrides) - set(OVERRIDABLE)
        if bad:
            raise ConfigError(f"cannot override scenario fields {sorted(bad)}")

    def resolved_scenario_config(self) -> dict:
        cfg = read_config(self.scenario)
        cfg.update(copy.deepcopy(self.overrides))
        return cfg

    def load(self) -> ScenarioSpec:
        return load_scenario(self.resolved_scenario_config())

    def echo(self) -> dict:
        """Result-determining settings, with the scenario fully inlined."""
        return {"scenario": self.resolved_scenario_config(), "seed": self.seed,
                "particles": self.particles, "starts": self.starts}

    @classmethod
    def from_echo(cls, echo: dict, **execution) -> RunConfig:
        return cls(scenario=echo["scenario"], seed=echo["seed"], particles=echo["particles"],
                   starts=echo["starts"], **execution)


@dataclass
class SynthesisReport:
    method: str
    scenario: str
    config: dict
    gains: list = field(default_factory=list)  # per step {"G": matrix, "extra": list}
    analytic: list = field(default_factory=list)  # per step MomentState dict of x(k+1)
    empirical: list = field(default_factory=list)  # per step k=0..T
    metrics: list = field(default_factory=list)
    ellipses: list = field(default_factory=list)
    solver: list = field(default_factory=list)
    complete: bool = True
    error: str | None = None
    version: str = __version__

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=True) + "\n"

    def to_csv(self) -> str:
        """Per-step Table-I layout plus empirical means."""
        buf = io.StringIO()
        names = self.config["scenario"]["states"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", *mc.METRIC_FIELDS, *(f"mean_{s}" for s in names)])
        for row, emp in zip(self.metrics, self.empirical):
            w.writerow([self.method, row["step"], *(repr(row[f]) for f in mc.METRIC_FIELDS[1:]),
                        *(repr(v) for v in emp["mean"])])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, d: dict) -> SynthesisReport:
        return cls(**d)

    def write(self, out_dir, particles: mc.ParticleEnsemble | None = None) -> list:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{self.scenario}_{self.method}"
        files = [out / f"{stem}.json", out / f"{stem}_metrics.csv"]
        files[0].write_text(self.to_json())
        files[1].write_text(self.to_csv())
        if particles is not None:
            files.append(out / f"{stem}_particles.csv")
            files[2].write_text(mc.particle_csv(particles))
        return files


def _law(scenario: ScenarioSpec) -> FeedbackLaw:
    return FeedbackLaw.for_scenario(scenario)


def _gain_entry(law: FeedbackLaw, theta) -> dict:
    n = len(law.control_names) * len(law.state_names)
    return {"G": law.gain_matrix(theta).tolist(), "extra": [float(v) for v in theta[n:]]}


def _theta(law: FeedbackLaw, entry: dict) -> np.ndarray:
    return law.theta_from_gain(entry["G"], entry.get("extra") or None)


def _finish(report: SynthesisReport, scenario: ScenarioSpec, law: FeedbackLaw, thetas, cfg: RunConfig,
            keep_particles: bool = False):
    """Monte Carlo over the full horizon and per-step statistics."""
    ens = mc.simulate(scenario, thetas, cfg.particles, cfg.seed, cfg.threads, law)
    covs = []
    for k in range(scenario.horizon + 1):
        if ens.n >= 2:
            em = mc.empirical_moments(ens, k)
            report.empirical.append(em.to_dict())
            covs.append(em.state.covariance)
        else:
            x = ens.states[k, 0]
            report.empirical.append({"mean": x.tolist(), "covariance": np.zeros((scenario.n_x,) * 2).tolist(),
                                     "n": 1})
            covs.append(np.zeros((scenario.n_x, scenario.n_x)))
    report.metrics = mc.metric_table(covs)
    if scenario.n_x == 2:
        for k, C in enumerate(covs):
            mean = report.empirical[k]["mean"]
            try:
                report.ellipses.append(mc.confidence_ellipse(C, mean, ELLIPSE_P).to_dict())
            except CfsteerError as e:
                report.ellipses.append({"error": str(e)})
    return ens if keep_particles else None


def synthesize(cfg: RunConfig, keep_particles: bool = False):
    """Per-step gain optimization followed by closed-loop Monte Carlo.

    Returns ``(report, ensemble or None)``. A numerical failure at step k
    yields a report flagged incomplete with the gains for steps < k.
    """
    scenario = cfg.load()
    law = _law(scenario)
    box = GainBox.for_scenario(scenario)
    w1, w2 = scenario.weights
    report = SynthesisReport("synthesized", scenario.name, cfg.echo())
    thetas = []
    try:
        for k in range(scenario.horizon):
            mmap = moment_map_for_step(scenario, law, k)
            res = optimize_gains(mmap, box, w1, w2, cfg.starts, np.random.SeedSequence(cfg.seed, spawn_key=(OPT_STREAM, k)),
                                 threads=cfg.threads)
            thetas.append(res.theta)
            report.gains.append(_gain_entry(law, res.theta))
            report.analytic.append(eval_moments(mmap, res.theta).to_dict())
            report.solver.append(res.to_dict())
            log.info("step %d: J=%.6g status=%s", k, res.objective, res.status)
    except NumericalError as e:
        report.complete = False
        report.error = f"step {len(thetas)}: {e}"
        return report, None
    ens = _finish(report, scenario, law, thetas, cfg, keep_particles)
    return report, ens


def run_baseline(cfg: RunConfig, which: str, keep_particles: bool = False):
    scenario = cfg.load()
    law = _law(scenario)
    if which == "plain":
        gains = plain_schedule(scenario)
    elif which == "lqr":
        gains = lqr_for_scenario(scenario).gains
    else:
        raise ConfigError(f"unknown baseline {which!r}; choose plain or lqr")
    thetas = [law.theta_from_gain(G) for G in gains]
    report = SynthesisReport(which, scenario.name, cfg.echo())
    for k, th in enumerate(thetas):
        report.gains.append(_gain_entry(law, th))
        report.analytic.append(eval_moments(moment_map_for_step(scenario, law, k), th).to_dict())
    ens = _finish(report, scenario, law, thetas, cfg, keep_particles)
    return report, ens


@dataclass
class ValidationSummary:
    passed: bool
    steps: list = field(default_factory=list)
    invariants: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _oracle_invariants(scenario: ScenarioSpec, seed: int) -> list:
    """Closed form vs quadrature for the scenario's distributions, and the Euler identity on its dynamics."""
    out = []
    dists = list(scenario.noises.values()) + [d for d in scenario.initial]
    worst = 0.0
    for d in dists:
        if isinstance(d, D.PointMass):
            continue
        for a in range(5):
            for b in (0.0, 0.1, 1.0, 10.0):
                worst = max(worst, abs(D.moment_exp(d, a, b) - D.moment_exp_quadrature(d, a, b)))
    out.append({"name": "moment_exp vs quadrature", "max_abs_error": worst, "passed": worst <= 1e-9})
    rng = D.substream(seed, 3)
    worst = 0.0
    for f in scenario.dynamics:
        terms = euler_expand(f)
        for _ in range(20):
            env = {v.name: float(rng.uniform(-2, 2)) for v in f.variables()}
            ref = complex(f.evaluate(env))
            val = sum((t.evaluate(env) for t in terms), 0j)
            worst = max(worst, abs(val - ref) / (1 + abs(ref)))
    out.append({"name": "Euler expansion identity", "max_rel_error": worst, "passed": worst <= 1e-12})
    return out


def validate(cfg: RunConfig, gains=None) -> ValidationSummary:
    """One-step oracle check at every step, at the synthesized gains unless ``gains`` is given."""
    scenario = cfg.load()
    law = _law(scenario)
    if gains is None:
        box = GainBox.for_scenario(scenario)
        thetas = []
        for k in range(scenario.horizon):
            mmap = moment_map_for_step(scenario, law, k)
            res = optimize_gains(mmap, box, *scenario.weights, cfg.starts,
                                 np.random.SeedSequence(cfg.seed, spawn_key=(OPT_STREAM, k)), threads=cfg.threads)
            thetas.append(res.theta)
    else:
        thetas = [np.asarray(g, float) if np.ndim(g) == 1 else law.theta_from_gain(g) for g in gains]
    summary = ValidationSummary(True)
    if cfg.particles < mc.LOW_POWER_N:
        summary.warnings.append(f"N={cfg.particles} gives low statistical power; tolerances (4 SE) are wide")
    for k, th in enumerate(thetas):
        rep = mc.one_step_check(scenario, law, th, k, cfg.particles, cfg.seed, cfg.threads)
        summary.steps.append(rep.to_dict())
        summary.passed &= rep.passed
    summary.invariants = _oracle_invariants(scenario, cfg.seed)
    summary.passed &= all(i["passed"] for i in summary.invariants)
    return summary
