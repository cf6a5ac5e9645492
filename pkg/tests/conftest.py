import random

import pytest

from cyclepatrol.fleet import FleetConfig, RobotParams


def make_fleet(vs, rs, L):
    robots = tuple(
        RobotParams(id=i + 1, v=v, r=r) for i, (v, r) in enumerate(zip(vs, rs))
    )
    return FleetConfig(robots=robots, L=L)


@pytest.fixture
def fig3_fleet():
    """Four heterogeneous robots on a 1 km cycle; t_star = 250 s."""
    return make_fleet([0.3, 0.7, 0.3, 0.3], [50.0, 50.0, 50.0, 150.0], 1000.0)


@pytest.fixture
def eight_robot_fleet():
    """The n=8 benchmark fleet; t_star = 127.78 s."""
    return make_fleet(
        [0.6, 0.1, 0.5, 0.3, 0.7, 0.2, 0.8, 0.4],
        [20.0, 20.0, 50.0, 20.0, 20.0, 20.0, 100.0, 20.0],
        1000.0,
    )


@pytest.fixture
def rng():
    return random.Random(12345)
