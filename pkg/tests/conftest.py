import numpy as np
import pytest

from z2kit import models
from z2kit.frames import EffectiveCell, run_boundary_pipeline

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    """Echo one line per acceptance criterion at the end of the run."""
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def km_qsh():
    return models.kane_mele(t=1.0, lam_so=0.06, lam_v=0.1, lam_r=0.05)


@pytest.fixture(scope="session")
def km_trivial():
    return models.kane_mele(t=1.0, lam_so=0.06, lam_v=0.4, lam_r=0.05)


@pytest.fixture(scope="session")
def constant_2d():
    return models.constant_family(dimension=2, seed=3)


@pytest.fixture(scope="session")
def cell64():
    return EffectiveCell(edge_samples=64)


@pytest.fixture(scope="session")
def qsh_pipeline(km_qsh, cell64):
    return run_boundary_pipeline(km_qsh, cell64)


@pytest.fixture(scope="session")
def trivial_pipeline(km_trivial, cell64):
    return run_boundary_pipeline(km_trivial, cell64)


def random_frame(n, m, rng):
    """Random orthonormal N x m frame."""
    a = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
    q, _ = np.linalg.qr(a)
    return q[:, :m]
