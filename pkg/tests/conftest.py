import time

import pytest

from crossdamp.coefficients import CoarseGrainConfig
from crossdamp.hydrogen import build_level_scheme
from crossdamp.liouvillian import DriveConfig
from crossdamp.spectra import compute_blocks, default_grid

ACCEPTANCE = {}
TIMINGS = {}


@pytest.fixture(scope="session")
def scheme():
    return build_level_scheme()


@pytest.fixture(scope="session")
def cg_cfg():
    return CoarseGrainConfig()


@pytest.fixture(scope="session")
def default_blocks(scheme, cg_cfg):
    """Excited blocks over the default grid with and without cross terms."""
    start = time.perf_counter()
    grid = default_grid(scheme)
    drive = DriveConfig()
    on = compute_blocks(scheme, cg_cfg, drive, grid, True)
    off = compute_blocks(scheme, cg_cfg, drive, grid, False)
    TIMINGS["default_blocks"] = time.perf_counter() - start
    return on, off


@pytest.fixture
def record():
    """Store a one-line verdict for the acceptance summary."""

    def _record(number, passed, detail):
        ACCEPTANCE[number] = (passed, detail)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
