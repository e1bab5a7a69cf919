from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from interp_lab.datagen import GmmSpec, orthogonal_means, sample_gmm
from interp_lab.rng import Stream

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> str:
    line = f"CRITERION {number:>2} {'PASS' if passed else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return line


@pytest.fixture
def record():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])


@pytest.fixture
def small_gmm():
    """k=3, n=12, p=60 GMM sample (seed 7) and its spec."""
    spec = GmmSpec(orthogonal_means(3, 60, 0.5 * math.sqrt(60)))
    return sample_gmm(spec, 12, Stream(7)), spec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
