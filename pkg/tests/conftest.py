import os
from pathlib import Path

import numpy as np
import pytest

from rabidimer.ansatz import MultiD2State, initialize
from rabidimer.params import DriveParams, ModelParams

CACHE_ENV = "RABIDIMER_TEST_CACHE"


@pytest.fixture(scope="session")
def cache_dir() -> Path:
    """Directory for long trajectories shared between test sessions."""
    d = Path(os.environ.get(CACHE_ENV, Path(__file__).parent / ".trajectory_cache"))
    d.mkdir(parents=True, exist_ok=True)
    return d


@pytest.fixture
def fig2b_params():
    return ModelParams(g=0.3, J=0.01, omega_r=10.0,
                       drive_L=DriveParams(20.0), drive_R=DriveParams(10.0))


def random_state(M, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=(4, M)) + 1j * rng.normal(size=(4, M))
    disp = scale * (rng.normal(size=(3, M)) + 1j * rng.normal(size=(3, M)))
    st = MultiD2State(amps, disp, 0.0)
    from rabidimer.ansatz import norm
    st.amplitudes /= np.sqrt(norm(st))
    return st


@pytest.fixture
def rstate():
    return random_state(3, seed=7)


@pytest.fixture
def init_state():
    return initialize(6, 20.0, seed=0)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance(capsys):
    """report(n, passed, detail): one PASS/FAIL line per acceptance criterion."""

    def report(n, passed, detail):
        line = f"ACCEPTANCE {n}: {'PASS' if passed else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line, flush=True)
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
