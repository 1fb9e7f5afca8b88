import pytest
from hypothesis import HealthCheck, settings

from railhandover.analytics import PositionGrid
from railhandover.scenario import Scenario

settings.register_profile(
    "suite",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def sc():
    return Scenario()


@pytest.fixture(scope="session")
def grid(sc):
    return PositionGrid.for_scenario(sc)


@pytest.fixture(scope="session")
def coarse_grid(sc):
    # step 50 keeps Monte Carlo sweeps cheap where bin width does not matter
    return PositionGrid.over(sc.ds, 50.0)
