"""Production-economy dynamics against the hand-computed price/volatility
chain, plus persona and classification behavior."""

import numpy as np
import pytest

from eventshap import make_environment, replay_counterfactual, \
    simulate_horizon
from eventshap.core import CoalitionMask
from eventshap.scenarios.econ import EconAction
from tests.conftest import grid_to_trajectory


def _chain_trajectory(env):
    # two agents, three steps, everyone works; rates 0.8 / 1.0 / 0.8
    rates = [0.8, 1.0, 0.8]
    grid = [[EconAction(True, rates[t]) for t in range(3)]
            for _ in range(2)]
    return grid_to_trajectory(env, grid, [0.0, 0.0, 1.0], rho=0.5)


def test_hand_chain_prices_and_risk(frozen_chains):
    env = make_environment("econ", n_agents=2)
    traj = _chain_trajectory(env)
    risk, states = env.replay_full(
        env.replay_pack(traj), np.ones((2, 3), dtype=np.uint8))
    assert risk.tolist() == frozen_chains["econ_risk"]
    assert [s["price"] for s in states] == frozen_chains["econ_prices"][1:]
    assert states[-1]["wealth"] == frozen_chains["econ_wealth_final"]


def test_baseline_is_equilibrium():
    # the default initial wealth makes (work, rate 0.8) a fixed point:
    # demand equals supply, the price never moves, risk stays zero
    env = make_environment("econ", n_agents=5)
    traj = simulate_horizon(env, seed=3, horizon=8)
    ct = replay_counterfactual(
        env, traj, CoalitionMask.empty(traj.n_agents, traj.horizon))
    assert np.all(ct.risk_series == 0.0)
    prices = [s["price"] for s in ct.states]
    assert prices == [env.params.initial_price] * traj.horizon


def test_personas_deterministic_and_split():
    from eventshap.scenarios.econ import sample_persona

    env = make_environment("econ")
    p = env.params
    n_shock = round(p.shock_fraction * p.n_agents)
    for agent in range(p.n_agents):
        a = sample_persona(p, 42, agent)
        b = sample_persona(p, 42, agent)
        assert a == b
        work_prob = a[0]
        lo, hi = (p.shock_work_prob if agent < n_shock
                  else p.normal_work_prob)
        assert lo <= work_prob <= hi


def test_policy_payloads_in_range():
    env = make_environment("econ", n_agents=6)
    state = env.reset(17)
    for step in range(1, 5):
        payloads = [env.policy(i, state, step, 17) for i in range(6)]
        for a in payloads:
            assert isinstance(a.works, bool)
            assert 0.0 <= a.rate <= 1.0
        env.step_state(state, payloads, step)


def test_behavior_classification_buckets():
    env = make_environment("econ")
    assert env.behavior_count == 8
    # idle classes 0..3 by spend-rate quartile, working classes 4..7
    assert env.classify_behavior(EconAction(False, 0.1)) == [(0, 1.0)]
    assert env.classify_behavior(EconAction(False, 0.99)) == [(3, 1.0)]
    assert env.classify_behavior(EconAction(True, 0.0)) == [(4, 1.0)]
    assert env.classify_behavior(EconAction(True, 0.5)) == [(6, 1.0)]
    assert env.classify_behavior(EconAction(True, 1.0)) == [(7, 1.0)]
    assert env.primary_class(EconAction(True, 0.5)) == 6


def test_rate_bounds_validated():
    env = make_environment("econ", n_agents=1)
    traj = grid_to_trajectory(env, [[EconAction(True, 1.5)]], [1.0],
                              rho=0.5)
    with pytest.raises(ValueError):
        env.replay_pack(traj)
