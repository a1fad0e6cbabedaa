import os

import numpy as np
import pytest

from dsnn.config import from_dict


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_cfg():
    """Fast experiment config: few neurons, short presentations."""
    return from_dict({
        "network": {"phase1_neurons": 20},
        "synth": {"n_benign": 80, "n_per_class": 40},
    })


def pytest_report_header(config):
    from dsnn.kernels import BACKEND
    return f"dsnn kernel backend: {BACKEND} (DSNN_DISABLE_NUMBA={os.environ.get('DSNN_DISABLE_NUMBA', '')})"


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES):
            terminalreporter.write_line(line)
