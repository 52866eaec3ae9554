import numpy as np
import pytest

from maxsens.core import BrParams, Margins, SmithParams

# dependence and margins fitted to the wind-gust application
BR = BrParams(kappa=3.05, psi=0.86)
SMITH = SmithParams([[0.88, 0.07], [0.07, 2.43]])
ORIGIN = (0.0, 0.0)


def br_margins(beta):
    return Margins(eta=26.11, tau=2.90, xi=-0.11, beta=beta)


def smith_margins(beta):
    return Margins(eta=26.12, tau=2.92, xi=-0.10, beta=beta)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one (criterion, passed, detail) entry per acceptance criterion, reported at the end
ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
