import sys

import numpy as np
import pytest

from covspec.model import EnsembleSpec, StepIntegrand, build_integrand


def identity_integrand(N, breakpoints=(0.0, 1.0)):
    m = len(breakpoints) - 1
    return StepIntegrand(tuple(breakpoints), tuple(np.eye(N) for _ in range(m)), 1.0)


@pytest.fixture
def two_interval():
    # T1 = I, T2 = diag two-point {1, 4}
    specs = [EnsembleSpec("identity"), EnsembleSpec("diagonal_from_spectrum", two_point=(1, 4, 0.5))]
    return build_integrand(specs, (0.0, 0.5, 1.0), 40, seed=3)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])
