import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gbq.spectral import FourierGrid  # noqa: E402

#: PASS/FAIL lines from the acceptance tests, repeated in the session summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    # runs must not pick up the caller's overrides
    monkeypatch.delenv("GBQ_SEED", raising=False)
    monkeypatch.delenv("GBQ_WORKERS", raising=False)


@pytest.fixture
def grid2pi():
    return FourierGrid(2 * np.pi, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
