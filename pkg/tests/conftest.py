import math

import pytest

from coupled_otto.protocol import TanhSweepConfig

# filled by test_acceptance.py; printed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def fig2_cfg():
    """Constant transverse field E0 with Z ramped 2 E0 -> 0 on [0, 20] t0."""
    return TanhSweepConfig(Delta=1.0, u_i=2.0, u_f=0.0, tau=2.0, t1=0.0, t2=20.0)


@pytest.fixture
def fig_omegas():
    return 2 * math.sqrt(5), 2.0
