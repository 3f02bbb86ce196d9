"""Mask canonicalization, record containers, trajectory validation."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eventshap import make_environment, simulate
from eventshap.core import (ActionRecord, CoalitionMask,
                            DimensionMismatchError, TrajectoryRecord,
                            validate_trajectory)

grids = st.integers(min_value=1, max_value=6)


@given(grids, grids, st.data())
def test_mask_key_injective_on_random_pairs(n, t, data):
    bits_a = np.array(data.draw(
        st.lists(st.booleans(), min_size=n * t, max_size=n * t)),
        dtype=np.bool_).reshape(n, t)
    bits_b = np.array(data.draw(
        st.lists(st.booleans(), min_size=n * t, max_size=n * t)),
        dtype=np.bool_).reshape(n, t)
    a, b = CoalitionMask(bits_a), CoalitionMask(bits_b)
    if np.array_equal(bits_a, bits_b):
        assert a.key() == b.key()
        assert a == b and hash(a) == hash(b)
    else:
        assert a.key() != b.key()
        assert a != b


def test_mask_key_distinguishes_shape_from_content():
    # same packed bit payload, different grid shape
    a = CoalitionMask(np.ones((2, 3), dtype=np.bool_))
    b = CoalitionMask(np.ones((3, 2), dtype=np.bool_))
    assert a.key() != b.key()


def test_full_and_empty_masks():
    full = CoalitionMask.full(3, 4)
    empty = CoalitionMask.empty(3, 4)
    assert full.bits.all() and full.bits.shape == (3, 4)
    assert not empty.bits.any()
    assert full.key() != empty.key()


def test_action_record_is_frozen():
    rec = ActionRecord(agent=1, step=2, payload="x", behavior_class=0)
    with pytest.raises(AttributeError):
        rec.agent = 5


def _event_trajectory():
    env = make_environment("econ", n_agents=3)
    out = simulate(env, seed=1, rho=env.params.rho, max_steps=40)
    assert isinstance(out, TrajectoryRecord)
    return out


def test_validate_accepts_simulated_event():
    assert validate_trajectory(_event_trajectory()) == []


def test_validate_catches_final_risk_not_crossing():
    traj = _event_trajectory()
    bad = traj.risk_series.copy()
    bad[-1] = traj.rho / 2
    broken = TrajectoryRecord(
        traj.scenario, traj.seed, traj.n_agents, traj.horizon, traj.rho,
        traj.states, traj.actions, bad, traj.event_step, traj.params)
    assert any("exceed" in v or "cross" in v
               for v in validate_trajectory(broken))


def test_validate_catches_early_crossing():
    traj = _event_trajectory()
    if traj.horizon < 2:
        pytest.skip("need at least two steps")
    bad = traj.risk_series.copy()
    bad[0] = traj.rho * 2
    broken = TrajectoryRecord(
        traj.scenario, traj.seed, traj.n_agents, traj.horizon, traj.rho,
        traj.states, traj.actions, bad, traj.event_step, traj.params)
    assert validate_trajectory(broken) != []


def test_validate_catches_grid_gaps():
    traj = _event_trajectory()
    actions = [list(row) for row in traj.actions]
    actions[0] = actions[0][:-1]
    broken = TrajectoryRecord(
        traj.scenario, traj.seed, traj.n_agents, traj.horizon, traj.rho,
        traj.states, actions, traj.risk_series, traj.event_step,
        traj.params)
    assert validate_trajectory(broken) != []


def test_action_payload_lookup():
    traj = _event_trajectory()
    rec = traj.actions[2][0]
    assert traj.action_payload(2, 1) is rec.payload
    with pytest.raises(DimensionMismatchError):
        traj.action_payload(traj.n_agents, 1)
