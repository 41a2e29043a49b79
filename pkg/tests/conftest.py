import math

import pytest

from itermeans.config import NumericsConfig
from itermeans.maps import MonotoneMap


@pytest.fixture(scope="session")
def cfg():
    return NumericsConfig()


@pytest.fixture(scope="session")
def quad_generator():
    """The nonlinear below-identity generator r(x) = x^2 / (2 (x + 1))."""
    return MonotoneMap.from_expr("p*x^2/(x+1)", {"p": 0.5})


def quad_r(x, p=0.5):
    """Closed form of the quadratic-over-linear generator."""
    return p * x * x / (x + 1.0)


def quad_r_inverse(y, p=0.5):
    """Quadratic-formula inverse of quad_r (positive root)."""
    return (y + math.sqrt(y * y + 4.0 * p * y)) / (2.0 * p)


def brute_forward_sum(x, p=0.5, n=200):
    """Oracle: plain loop summing forward iterates of quad_r."""
    total, t = 0.0, x
    for _ in range(n):
        total += t
        t = quad_r(t, p)
        if t < 1e-300:
            break
    return total
