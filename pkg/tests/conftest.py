import json
import os

import numpy as np
import pytest

from eventshap import make_environment
from eventshap.core import ActionRecord, TrajectoryRecord
from eventshap.scenarios.social import SocialAction

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def load_fixture(name):
    with open(os.path.join(FIXTURES, name), encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def frozen_metrics():
    return load_fixture("frozen_metrics.json")


@pytest.fixture(scope="session")
def frozen_chains():
    return load_fixture("frozen_chains.json")


@pytest.fixture(scope="session")
def frozen_social():
    return load_fixture("frozen_social.json")


def hand_social_grid():
    """The 3-agent, 3-step hand-stepped scenario: grid[agent][step-1]."""
    a = SocialAction
    return [
        [a(True, ()), a(False, ((1, "like"),)), a(True, ((1, "dislike"),))],
        [a(False, ((0, "like"),)), a(True, ()), a(True, ((0, "like"),))],
        [a(False, ((0, "dislike"),)), a(False, ()),
         a(False, ((0, "like"), (1, "dislike")))],
    ]


def grid_to_trajectory(env, grid, risk_series, rho=0.03, seed=0):
    n = len(grid)
    horizon = len(grid[0])
    actions = [
        [ActionRecord(i, t + 1, grid[i][t], env.primary_class(grid[i][t]))
         for t in range(horizon)]
        for i in range(n)
    ]
    return TrajectoryRecord(
        scenario=env.name, seed=seed, n_agents=n, horizon=horizon, rho=rho,
        states=[None] * horizon, actions=actions,
        risk_series=np.asarray(risk_series, dtype=np.float64),
        event_step=horizon, params={})


@pytest.fixture()
def social_fixture(frozen_social):
    """(env, trajectory) for the hand-stepped scenario."""
    env = make_environment("social", n_agents=3,
                           init_beliefs=(0.2, -0.1, 0.4))
    traj = grid_to_trajectory(env, hand_social_grid(),
                              frozen_social["risk_series"])
    return env, traj
