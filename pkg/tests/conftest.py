import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wtsel.core import RegionOfInterest, SeasonWindow, WtSeries, default_roi
from wtsel.frequencies import build_joint
from wtsel.synth import random_spec, simulate


@pytest.fixture(scope="session")
def roi() -> RegionOfInterest:
    return default_roi()


@pytest.fixture(scope="session")
def window() -> SeasonWindow:
    return SeasonWindow()


@pytest.fixture(scope="session")
def short_window() -> SeasonWindow:
    return SeasonWindow(first_year=2000, last_year=2002)


@pytest.fixture(scope="session")
def ref_spec(roi):
    return random_spec(roi, seed=3)


@pytest.fixture(scope="session")
def ref_series(ref_spec, window):
    return simulate(ref_spec, window, "ref")


@pytest.fixture(scope="session")
def ref_joint(ref_series):
    return build_joint(ref_series)


@pytest.fixture(scope="session")
def model_joint(ref_spec, window):
    return build_joint(simulate(ref_spec.with_seed(11), window, "sibling"))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = module.summary_lines() if module is not None else []
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
