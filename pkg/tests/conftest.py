import os
import sys

import numpy as np
import pytest
from scipy.stats import special_ortho_group

sys.path.insert(0, os.path.dirname(__file__))

from screwdist.geometry import RigidTransform, ScrewAxis  # noqa: E402


def random_rotation(rng):
    return special_ortho_group.rvs(3, random_state=rng)


def random_transform(rng, scale=1.0):
    return RigidTransform(random_rotation(rng), rng.normal(scale=scale, size=3))


def random_axis(rng, scale=1.0):
    u = rng.normal(size=3)
    u /= np.linalg.norm(u)
    return ScrewAxis.from_point_direction(rng.normal(scale=scale, size=3), u)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; call with ``(label, passed, detail)``."""

    def record(label, passed, detail=""):
        line = f"{'PASS' if passed else 'FAIL'} {label}" + (f": {detail}" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
