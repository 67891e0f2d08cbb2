"""Acceptance criteria, each at its stated tolerance and sample size.

Every test prints one PASS/FAIL line; the lines are also collected in the
pytest terminal summary.
"""
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings

from cfsteer import dist as D, mc
from cfsteer.baselines import LinearizedStep, linearize_all, lqr_for_scenario, lqr_schedule, riccati_residual
from cfsteer.cli import run
from cfsteer.expr import euler_expand
from cfsteer.optimize import GainBox, optimize_gains
from cfsteer.propagate import FeedbackLaw
from cfsteer.scenario import BUILTINS, load_scenario
from cfsteer.synthesis import RunConfig, run_baseline, synthesize

from strategies import environment, mixed_trig_expr

N = 10**6


@pytest.fixture(scope="module")
def runs():
    cache = {}

    def get(name, method):
        if (name, method) not in cache:
            cfg = RunConfig(scenario=name, particles=N, seed=0)
            t0 = time.perf_counter()
            rep = synthesize(cfg)[0] if method == "synthesized" else run_baseline(cfg, method)[0]
            cache[name, method] = (rep, time.perf_counter() - t0)
        return cache[name, method]
    return get


@pytest.mark.slow
@pytest.mark.parametrize("name", BUILTINS)
def test_1_one_step_oracle(name, criterion):
    s = load_scenario(name)
    law = FeedbackLaw.for_scenario(s)
    box = GainBox.for_scenario(s)
    rng = np.random.default_rng(1000 + BUILTINS.index(name))
    t0 = time.perf_counter()
    worst, ok = 0.0, True
    for j in range(5):
        theta = box.lower + rng.random(box.size) * (box.upper - box.lower)
        rep = mc.one_step_check(s, law, theta, k=j, N=N, seed=j)
        ok &= rep.passed
        worst = max(worst, rep.max_abs_z)
    dt = time.perf_counter() - t0
    passed = ok and dt <= 120
    criterion(1, passed, f"{name}: 5 random gains, N=1e6, max |z| = {worst:.2f} (limit 4), {dt:.1f}s (limit 120s)")
    assert passed


def test_2_closed_form_vs_quadrature(criterion):
    dists = [D.Uniform(-0.5, 0.5), D.Uniform(-math.pi / 4, math.pi / 4), D.Gaussian(0, 0.01), D.Gaussian(1, 1)]
    bs = [0.0, 1e-5, -1e-5, 0.1, -0.1, 1.0, -1.0, 10.0, -10.0]
    worst = max(abs(D.moment_exp(d, a, b) - D.moment_exp_quadrature(d, a, b))
                for d in dists for a in range(9) for b in bs)
    passed = worst <= 1e-9
    criterion(2, passed, f"max |closed form - quadrature| = {worst:.2e} (limit 1e-9)")
    assert passed


def test_3_analytic_optimum(scalar_problem, criterion):
    r = optimize_gains(scalar_problem, GainBox.uniform(1, -100, 100), 1.0, 0.0)
    g, J = r.theta[0], r.objective
    passed = abs(g + 10) <= 1e-3 and abs(J - 0.01) <= 1e-6
    criterion(3, passed, f"g* = {g:.8f} (target -10 +- 1e-3), J* = {J:.3e} (target 0.01 +- 1e-6)")
    assert passed


def test_4_quadratic_gain_vanishes(criterion):
    # the symmetry argument in the decisions ledger predicts g2 ~ cos(x*)/2, so this is expected to fail
    feedback = {"extra": [{"control": "u", "monomial": {"x": 2}}]}
    cfg = RunConfig(scenario="oned", particles=1000, overrides={"feedback": feedback})
    t0 = time.perf_counter()
    rep, _ = synthesize(cfg)
    dt = time.perf_counter() - t0
    g2 = [e["extra"][0] for e in rep.gains]
    worst = max(abs(v) for v in g2)
    passed = worst <= 1e-3 and dt <= 60
    criterion(4, passed, f"max |g2(k)| = {worst:.4f} (limit 1e-3), g2(0) = {g2[0]:.4f}, {dt:.1f}s")
    assert passed


@pytest.mark.slow
def test_5_oned_ordering(runs, criterion):
    ours, t_ours = runs("oned", "synthesized")
    plain, t_plain = runs("oned", "plain")
    s = load_scenario("oned")
    std_o = [math.sqrt(e["covariance"][0][0]) for e in ours.empirical]
    std_p = [math.sqrt(e["covariance"][0][0]) for e in plain.empirical]
    below = all(std_o[k] <= std_p[k] for k in range(1, 11))
    mean_err = max(abs(e["mean"][0] - s.nominal_states[k, 0]) for k, e in enumerate(ours.empirical))
    dt = t_ours + t_plain
    passed = below and mean_err <= 0.02 and dt <= 300
    criterion(5, passed, f"oned std ours <= plain at k=1..10: {below}; max |mean - nominal| = {mean_err:.4f} "
                         f"(limit 0.02); {dt:.1f}s")
    assert passed


@pytest.mark.slow
def test_6_vehicle_ordering(runs, criterion):
    ours, t1 = runs("vehicle", "synthesized")
    plain, t2 = runs("vehicle", "plain")
    lqr, t3 = runs("vehicle", "lqr")
    steps = range(1, 11)
    vs_plain = all(ours.metrics[k]["trace"] < plain.metrics[k]["trace"]
                   and ours.metrics[k]["det"] < plain.metrics[k]["det"] for k in steps)
    vs_lqr = sum(ours.metrics[k]["trace"] < lqr.metrics[k]["trace"]
                 and ours.metrics[k]["det"] < lqr.metrics[k]["det"] for k in steps)
    dt = t1 + t2 + t3
    passed = vs_plain and vs_lqr >= 8 and dt <= 600
    criterion(6, passed, f"vehicle tr/det below plain at all k=1..10: {vs_plain}; below LQR at {vs_lqr}/10 "
                         f"(need 8); {dt:.1f}s")
    assert passed


@pytest.mark.slow
def test_7_pendulum_ordering(runs, criterion):
    ours, t1 = runs("pendulum", "synthesized")
    plain, t2 = runs("pendulum", "plain")
    ok = [ours.metrics[k]["trace"] <= plain.metrics[k]["trace"] for k in range(11)]
    dt = t1 + t2
    passed = all(ok) and dt <= 600
    ratio = max(ours.metrics[k]["trace"] / plain.metrics[k]["trace"] for k in range(1, 11))
    criterion(7, passed, f"pendulum trace ours <= plain at every step: {all(ok)} "
                         f"(max ratio {ratio:.3f} over k>=1); {dt:.1f}s")
    assert passed


def test_8_lqr(criterion):
    one = np.eye(1)
    s = lqr_schedule([LinearizedStep(one, one)], one, one, one)
    hand = abs(s.K[0][0, 0] - 0.5) <= 1e-10 and abs(s.P[0][0, 0] - 1.5) <= 1e-10
    residuals = {}
    for name in BUILTINS:
        sc = load_scenario(name)
        residuals[name] = riccati_residual(linearize_all(sc), lqr_for_scenario(sc), sc.lqr_Q, sc.lqr_R)
    worst = max(residuals.values())
    passed = hand and worst <= 1e-10
    criterion(8, passed, f"K(0)={float(s.K[0][0, 0])!r}, P(0)={float(s.P[0][0, 0])!r}; max Riccati residual {worst:.1e} (limit 1e-10)")
    assert passed


def test_9_determinism(tmp_path, criterion):
    args = ["--scenario", "vehicle", "--seed", "11"]
    codes = [run(["synthesize", *args, "--threads", str(t), "--out", str(tmp_path / f"t{t}")]) for t in (1, 8)]
    same = all((tmp_path / "t1" / f).read_bytes() == (tmp_path / "t8" / f).read_bytes()
               for f in ("vehicle_synthesized.json", "vehicle_synthesized_metrics.csv"))
    passed = codes == [0, 0] and same
    criterion(9, passed, f"synthesize at 1 and 8 threads: bitwise-identical reports = {same}")
    assert passed


def test_10_euler_identity(criterion):
    count = {"n": 0, "worst": 0.0}

    @settings(max_examples=500, database=None)
    @given(mixed_trig_expr(), environment())
    def check(e, env):
        ref = complex(e.evaluate(env))
        val = sum((t.evaluate(env) for t in euler_expand(e)), 0j)
        err = abs(val - ref) / (1 + abs(ref))  # error in units of the allowed 1e-12*(1+|ref|)
        count["n"] += 1
        count["worst"] = max(count["worst"], err)
        assert err <= 1e-12

    try:
        check()
        passed = count["n"] >= 500
    except AssertionError:
        passed = False
    criterion(10, passed, f"{count['n']} random expressions/points, worst relative error {count['worst']:.1e} "
                          f"(limit 1e-12)")
    assert passed
