"""Shared fixtures: compiled-kernel warmup and cached analysis pipelines."""

import numpy as np
import pytest

from zsactions.gradients import du_dA_and_frequencies
from zsactions.monodromy import warmup
from zsactions.potential import direct_H, direct_H0, direct_H1, preset
from zsactions.quasimomentum import (
    build_nodes,
    compute_actions,
    comparison_S,
    functional_V,
    functionals_Q,
    maxima_Y,
)
from zsactions.spectrum import compute_table


#: "CRITERION n: PASS/FAIL" lines collected by the acceptance battery and
#: echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session", autouse=True)
def compiled_kernels():
    """Compile the integrator once so timed tests measure runtime, not JIT."""
    warmup()


class Pipeline:
    """Everything downstream of one potential, computed once."""

    def __init__(self, q, N):
        self.q = q
        self.N = N
        self.table = compute_table(q, N)
        self.nodes = build_nodes(q, self.table)
        self.actions = compute_actions(q, self.table, nodes=self.nodes)
        self.Q = functionals_Q(q, self.table, nodes=self.nodes)
        self.U, self.V_per = functional_V(q, self.table, nodes=self.nodes)
        if self.nodes:
            self.grads = du_dA_and_frequencies(q, self.table, nodes=self.nodes)
            self.maxima, self.y_crit = maxima_Y(q, self.table, nodes=self.nodes)
        else:
            self.grads, self.maxima, self.y_crit = None, {}, {}
        self.S = comparison_S(self.table, self.actions)
        self.H0 = direct_H0(q)
        self.H1 = direct_H1(q)
        self.H_half, self.H_double = direct_H(q)

    def sum_A(self):
        return float(np.sum(self.actions.array()))

    def sum_2pin_A(self):
        ns = np.arange(-self.N, self.N + 1)
        return float(np.sum(2.0 * np.pi * ns * self.actions.array()))

    def sum_n2_A(self):
        ns = np.arange(-self.N, self.N + 1)
        return float(np.sum((2.0 * np.pi * ns) ** 2 * self.actions.array()))


@pytest.fixture(scope="session")
def constant_pipeline():
    return Pipeline(preset("constant", c=0.1), N=4)


@pytest.fixture(scope="session")
def two_mode_pipeline():
    return Pipeline(preset("two_mode"), N=8)
