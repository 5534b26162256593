import functools

import pytest

from brownmap.measure import DensityPiece, Law


@pytest.fixture
def delta1():
    return Law.delta(1.0)


@pytest.fixture
def two_atoms():
    return Law.point_masses([(1.0, 0.2), (2.0, 0.8)])


@pytest.fixture
def half_zero():
    return Law.point_masses([(0.0, 0.5), (1.0, 0.5)])


@pytest.fixture
def uniform12():
    return Law.uniform(1.0, 2.0)


@pytest.fixture
def cusp():
    # normalized version of the (xi - 1)^2 density on [1, 2]
    return Law(densities=(DensityPiece(1.0, 2.0, (3.0, -6.0, 3.0)),))


# The N=1000, k=1000 eigenvalue runs are the expensive part of the suite; each
# (s, tau) setting is simulated once per session and shared between tests.
LARGE_N = 1000
LARGE_STEPS = 1000
LARGE_SEED = 0


@functools.lru_cache(maxsize=None)
def _large_run(s: float, tau: complex):
    from brownmap.rmt import SimConfig, run

    law = Law.point_masses([(1.0, 0.2), (2.0, 0.8)])
    scheme = "product" if tau == s else "euler"
    cfg = SimConfig(LARGE_N, LARGE_STEPS, s, tau, scheme, seed=LARGE_SEED, precision="single")
    return run(law, cfg, dilation=0.05)


@pytest.fixture(scope="session")
def large_run():
    return _large_run
