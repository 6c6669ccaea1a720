import numpy as np
import pytest

from tatrecon.forward import forward_2d
from tatrecon.model import DetectorRing, TimeGrid, gaussian_phantom

ACCEPTANCE: dict = {}

BLOB_CENTERS = [(-0.3, 0.2), (0.35, 0.3), (0.1, -0.4)]
BLOB_SIGMAS = [0.08, 0.05, 0.1]
BLOB_AMPS = [1.0, 0.8, 0.6]


@pytest.fixture(scope="session")
def blobs2d():
    return gaussian_phantom(BLOB_CENTERS, BLOB_SIGMAS, BLOB_AMPS)


@pytest.fixture(scope="session")
def ring_data(blobs2d):
    """272 detectors on R = 1.05, nt = 1000, dt = 0.005."""
    return forward_2d(blobs2d, DetectorRing(1.05, 272), TimeGrid(0.005, 1000))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def record(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
