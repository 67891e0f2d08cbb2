import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=1000, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


@pytest.fixture
def scalar_problem():
    """x+ = (1 + g dt) x + w with x ~ U(-0.5, 0.5), w ~ N(0, 0.01), dt = 0.1."""
    from cfsteer import dist as D
    from cfsteer.expr import SymbolTable, parse
    from cfsteer.propagate import build_moment_map

    st = SymbolTable()
    x = st.declare("x", "state")
    w = st.declare("w", "noise")
    g = st.declare("g", "parameter")
    f = parse("(1 + g*0.1)*x + w", st)
    return build_moment_map([f], {x: D.Uniform(-0.5, 0.5)}, {w: D.Gaussian(0.0, 0.01)}, params=[g])


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    def record(number, passed, detail):
        line = f"[acceptance {number:>2}] {'PASS' if passed else 'FAIL'}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
