"""Deletion-test faithfulness and the Monte Carlo accuracy sweep."""

import numpy as np
import pytest

from eventshap import (ReplayGame, SyntheticGame, faithfulness,
                       faithfulness_rows, make_environment, mc_accuracy_sweep,
                       random_attribution, simulate_horizon)
from eventshap.core import SimulationError, UndefinedMetricError
from eventshap.evaluation import rank_slots


def test_rank_orders_by_score_then_slot():
    scores = np.array([[0.5, 2.0], [2.0, -1.0]])
    # ties between slots 1 and 2 resolve in slot order
    assert rank_slots(scores).tolist() == [1, 2, 0, 3]
    assert rank_slots(scores, absolute=True).tolist() == [1, 2, 3, 0]


def test_faithfulness_on_a_closed_form_game():
    w = np.array([[4.0, 1.0], [2.0, -3.0]])
    game = SyntheticGame.additive(w)
    # deleting the two best slots removes 6 of the total 4
    drop = faithfulness(game, w, k=2)
    assert abs(drop - 6.0 / 4.0) < 1e-12
    assert faithfulness(SyntheticGame.additive(w), w, k=0) == 0.0


def test_faithfulness_k_bounds():
    game = SyntheticGame.additive(np.ones((2, 2)))
    with pytest.raises(ValueError):
        faithfulness(game, np.ones((2, 2)), k=5)
    with pytest.raises(ValueError):
        faithfulness(game, np.ones((2, 2)), k=-1)


def test_faithfulness_full_deletion_is_scorer_independent():
    env = make_environment("social", n_agents=3)
    traj = simulate_horizon(env, seed=2, horizon=4)
    game = ReplayGame(env, traj)
    drops = [faithfulness(game, random_attribution(3, 4, s), k=12)
             for s in (0, 1, 2)]
    assert drops[0] == drops[1] == drops[2]


def test_faithfulness_zero_target_is_undefined():
    def v(bits):
        flat = bits.reshape(-1).astype(np.float64)
        return float(flat[0] - flat[1])

    game = SyntheticGame(1, 2, v)  # v(full) = 0
    with pytest.raises(UndefinedMetricError):
        faithfulness(game, np.array([[1.0, 0.5]]), k=1)


def test_faithfulness_absolute_ranking_switch():
    w = np.array([[1.0, -5.0, 0.5]])
    game = SyntheticGame.additive(w)
    signed = faithfulness(SyntheticGame.additive(w), w, k=1)
    by_mag = faithfulness(game, w, k=1, absolute=True)
    # signed deletes the +1 slot; absolute deletes the -5 slot
    total = float(w.sum())
    assert abs(signed - 1.0 / total) < 1e-12
    assert abs(by_mag - (-5.0) / total) < 1e-12


def test_rows_cover_all_scorers_and_ks():
    rows = faithfulness_rows("social", seeds=[2], ks=(3, 10), n_samples=50)
    combos = {(r[1], r[2]) for r in rows}
    assert combos == {("shapley", 3), ("shapley", 10), ("loo", 3),
                      ("loo", 10), ("random", 3), ("random", 10)}
    assert all(r[0] == "social" and r[3] == 2 for r in rows)


def test_rows_are_reproducible():
    a = faithfulness_rows("social", seeds=[2], ks=(3,), n_samples=30)
    b = faithfulness_rows("social", seeds=[2], ks=(3,), n_samples=30)
    assert a == b


def test_rows_refuse_eventless_seeds():
    with pytest.raises(SimulationError, match="no event"):
        faithfulness_rows("econ", seeds=[0], ks=(3,), n_samples=10,
                          params={"shock_fraction": 0.0}, max_steps=10)


def test_rows_validate_seed_list():
    with pytest.raises(ValueError):
        faithfulness_rows("social", seeds=[], ks=(3,), n_samples=10)


def test_accuracy_sweep_shape_and_determinism():
    rows = mc_accuracy_sweep("social", seeds=[0, 1], m_grid=[10, 50],
                             n_agents=3, horizon=4)
    assert [(r[0], r[1]) for r in rows] == [("social", 10), ("social", 50)]
    assert all(-1.0 <= r[2] <= 1.0 and r[3] >= 0.0 for r in rows)
    again = mc_accuracy_sweep("social", seeds=[0, 1], m_grid=[10, 50],
                              n_agents=3, horizon=4)
    assert rows == again


def test_accuracy_sweep_converges_toward_exact():
    rows = mc_accuracy_sweep("econ", seeds=[0, 1, 2], m_grid=[10, 2000],
                             n_agents=3, horizon=4)
    assert rows[1][2] > rows[0][2]
    assert rows[1][2] > 0.99
