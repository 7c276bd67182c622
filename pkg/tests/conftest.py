import numpy as np
import pytest

from hybrid_routh import StateTQ, billiard_cartesian, billiard_polar


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def polar():
    """Polar billiard with the first figure's parameters (m=1, c=2, e=1)."""
    return billiard_polar(1.0, 2.0, 1.0)


@pytest.fixture
def cartesian():
    return billiard_cartesian(1.0, 2.0, 1.0)


def random_polar_states(rng, count, r_range=(0.2, 1.0), vmax=3.0):
    out = []
    for _ in range(count):
        r = rng.uniform(*r_range)
        th = rng.uniform(-np.pi, np.pi)
        out.append(StateTQ([r, th], rng.uniform(-vmax, vmax, 2)))
    return out


def random_disk_states(rng, count, r_range=(0.2, 1.0), vmax=3.0):
    out = []
    for _ in range(count):
        r = rng.uniform(*r_range)
        th = rng.uniform(-np.pi, np.pi)
        out.append(StateTQ([r * np.cos(th), r * np.sin(th)], rng.uniform(-vmax, vmax, 2)))
    return out
