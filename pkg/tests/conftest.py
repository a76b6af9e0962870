import math

import numpy as np
import pytest

from qrabi import ModelParams

W = np.exp(2j * np.pi / 3)

# Lines recorded by the acceptance suite, echoed in the terminal summary.
ACCEPTANCE_LINES = []


@pytest.fixture
def paper_params():
    return ModelParams(omega=1.0, b_field=0.1, phi=7 * math.pi / 6, lam=0.5)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
