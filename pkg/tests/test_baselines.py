import math

import numpy as np
import pytest

from cfsteer.baselines import (LinearizedStep, linearize, linearize_all, lqr_for_scenario, lqr_schedule,
                               plain_schedule, riccati_residual)
from cfsteer.errors import SingularInnovationError
from cfsteer.scenario import builtin_config, load_scenario


def test_scalar_hand_riccati():
    one = np.eye(1)
    s = lqr_schedule([LinearizedStep(one, one)], one, one, one)
    assert s.K[0][0, 0] == pytest.approx(0.5, abs=1e-10)
    assert s.P[0][0, 0] == pytest.approx(1.5, abs=1e-10)
    assert s.gains[0][0, 0] == -s.K[0][0, 0]


def test_uncontrollable_and_zero_cost():
    A, B = np.array([[1.1, 0.2], [0.0, 0.9]]), np.zeros((2, 1))
    s = lqr_schedule([LinearizedStep(A, B)] * 3, np.eye(2), np.eye(1), np.eye(2))
    assert all(np.all(K == 0) for K in s.K)
    s = lqr_schedule([LinearizedStep(A, np.ones((2, 1)))] * 3, np.zeros((2, 2)), np.eye(1), np.zeros((2, 2)))
    assert all(np.all(K == 0) for K in s.K) and all(np.all(P == 0) for P in s.P)


def test_singular_innovation_names_step():
    A, B = np.eye(1), np.eye(1)
    with pytest.raises(SingularInnovationError) as ei:
        lqr_schedule([LinearizedStep(A, B)] * 2, np.eye(1), np.zeros((1, 1)), np.zeros((1, 1)))
    assert ei.value.step == 1


def test_linear_system_jacobian():
    cfg = {"states": ["x"], "controls": ["u"], "dynamics": {"x": "2*x + 3*u"}, "horizon": 1,
           "nominal_controls": {"u": 0.7}, "initial": {"x": {"type": "point", "value": 1.5}}, "tube": {"x": 1}}
    st = linearize(load_scenario(cfg), 0)
    assert st.A[0, 0] == pytest.approx(2.0, abs=1e-9)
    assert st.B[0, 0] == pytest.approx(3.0, abs=1e-9)


def test_oned_jacobian():
    s = load_scenario("oned")
    for k in (0, 5):
        st = linearize(s, k)
        x = s.nominal_states[k, 0]
        assert st.A[0, 0] == pytest.approx(1 - math.sin(x) * 0.1, abs=1e-6)
        assert st.B[0, 0] == pytest.approx(0.1, abs=1e-6)


def test_pendulum_jacobian_at_random_points(rng):
    cfg = builtin_config("pendulum")
    for _ in range(10):
        x, y, u = rng.uniform(-3, 3, 3)
        cfg.update(horizon=1, nominal_controls={"u": [u]}, nominal_states={"x": [x, 0.0], "y": [y, 0.0]})
        st = linearize(load_scenario(cfg), 0)
        assert np.allclose(st.A, [[1, 0.1], [0.4 * math.cos(x), 1]], atol=1e-6)
        assert np.allclose(st.B, [[0], [0.1]], atol=1e-6)  # noise at its mean kills alpha*u*w


def test_vehicle_jacobian(rng):
    cfg = builtin_config("vehicle")
    for _ in range(10):
        v, th = rng.uniform(0.1, 2), rng.uniform(-3, 3)
        cfg.update(horizon=1, nominal_controls={"v": [v], "th": [th]}, nominal_states={"x": [0, 0], "y": [0, 0]})
        st = linearize(load_scenario(cfg), 0)
        assert np.allclose(st.A, np.eye(2), atol=1e-6)
        assert np.allclose(st.B, 0.1 * np.array([[math.cos(th), -v * math.sin(th)], [math.sin(th), v * math.cos(th)]]),
                           atol=1e-6)


@pytest.mark.parametrize("name", ["oned", "vehicle", "pendulum"])
def test_riccati_consistency_on_benchmarks(name):
    s = load_scenario(name)
    steps = linearize_all(s)
    sched = lqr_for_scenario(s)
    assert riccati_residual(steps, sched, s.lqr_Q, s.lqr_R) <= 1e-10
    for P in sched.P:
        assert np.max(np.abs(P - P.T)) <= 1e-12
        assert np.linalg.eigvalsh(P).min() >= -1e-10


def test_plain_is_zero():
    s = load_scenario("vehicle")
    sched = plain_schedule(s)
    assert len(sched) == s.horizon and all(G.shape == (2, 2) and not G.any() for G in sched)
