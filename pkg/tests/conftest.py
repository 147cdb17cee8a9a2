import math

import pytest
from hypothesis import settings

from qpulse import SystemParams

settings.register_profile("qpulse", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("qpulse")


@pytest.fixture
def ep():
    return SystemParams(1.0, 0.0, 0.25)


@pytest.fixture
def underdamped():
    return SystemParams(1.0, 0.0, 1.0)


@pytest.fixture
def overdamped():
    return SystemParams(1.0, 0.0, 0.1)


REGIME_PARAMS = {
    "underdamped": SystemParams(1.0, 0.3, 0.9),
    "ep": SystemParams.at_exceptional_point(1.0, 0.3),
    "overdamped": SystemParams(1.0, 0.3, 0.15),
}


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


__all__ = ["REGIME_PARAMS", "close", "math"]
