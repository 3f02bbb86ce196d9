"""Faithfulness (top-k deletion) harness and the Monte Carlo accuracy
sweep.

Faithfulness ranks slots by raw signed score (highest first, ties broken
by slot order), deletes the top k via counterfactual replay, and reports
the fractional drop of the raw final risk. The accuracy sweep compares
Monte Carlo estimates against the exact solver over a seed batch at each
sample count.
"""

from __future__ import annotations

import numpy as np

from .attribution import (Game, ReplayGame, cosine_similarity,
                          exact_shapley, mc_shapley)
from .baselines import (ScorerClient, external_attribution,
                        loo_attribution, random_attribution)
from .core import (AttributionMatrix, CoalitionMask, NoEventOutcome,
                   SimulationError, UndefinedMetricError)
from .envsim import simulate, simulate_horizon
from .scenarios import make_environment


def rank_slots(scores, absolute: bool = False) -> np.ndarray:
    """Slot indices in deletion order: score descending, ties by
    (agent, step) ascending, which is plain slot order."""
    flat = (scores.values if isinstance(scores, AttributionMatrix)
            else np.asarray(scores, dtype=np.float64)).reshape(-1)
    key = np.abs(flat) if absolute else flat
    return np.lexsort((np.arange(key.shape[0]), -key))


def faithfulness(game: Game, scores, k: int,
                 absolute: bool = False) -> float:
    """Fractional raw-risk drop after deleting the k highest-scored slots.

    Drop = (R(tau) − R(tau_del)) / R(tau) on raw final risk. k = 0 gives 0;
    k = N*T replays the baseline, so the drop is scorer-independent there.
    """
    ns = game.n_slots
    if not 0 <= k <= ns:
        raise ValueError(f"k must be in [0, {ns}]")
    if isinstance(game, ReplayGame):
        baseline = game.baseline_risk
        raw_target = float(game.traj.risk_series[-1])
    else:
        baseline = 0.0
        raw_target = game.full_value()
    if raw_target == 0.0:
        raise UndefinedMetricError(
            "risk drop undefined when the target raw risk is zero")
    order = rank_slots(scores, absolute=absolute)
    bits = np.ones((game.n_agents, game.horizon), dtype=np.bool_)
    bits.reshape(-1)[order[:k]] = False
    raw_del = game.value(CoalitionMask(bits)) + baseline
    return (raw_target - raw_del) / raw_target


def faithfulness_rows(scenario: str, seeds, ks, n_samples: int,
                      params: dict = None, max_steps: int = 200,
                      workers: int = 1, scorer_url: str = None,
                      absolute: bool = False) -> list:
    """Deletion-test rows (scenario, scorer, k, seed, risk_drop) for the
    Shapley, LOO, and random scorers, plus the external scorer when a URL
    is given. One simulated event and one shared replay cache per seed."""
    if not seeds:
        raise ValueError("need at least one seed")
    rows = []
    for seed in seeds:
        env = make_environment(scenario, params)
        out = simulate(env, seed, env.params.rho, max_steps)
        if isinstance(out, NoEventOutcome):
            raise SimulationError(
                f"seed {seed} produced no event within {max_steps} steps; "
                f"pick calibrated seeds", step=max_steps)
        game = ReplayGame(env, out)
        scorers = {
            "shapley": mc_shapley(game, n_samples, seed, workers=workers),
            "loo": loo_attribution(game),
            "random": random_attribution(out.n_agents, out.horizon, seed),
        }
        if scorer_url:
            client = ScorerClient(scorer_url)
            scorers["external"] = external_attribution(client, env, out)
        for name, mat in scorers.items():
            for k in ks:
                drop = faithfulness(game, mat, int(k), absolute=absolute)
                rows.append((scenario, name, int(k), seed, float(drop)))
    return rows


def mc_accuracy_sweep(scenario: str, seeds, m_grid, params: dict = None,
                      n_agents: int = 4, horizon: int = 5,
                      workers: int = 1) -> list:
    """Per-M cosine similarity of Monte Carlo vs exact Shapley over a seed
    batch: rows (scenario, M, mean_cos, std_cos).

    Trajectories run a fixed horizon (the final step is the evaluation
    boundary by construction; no threshold crossing involved).
    """
    if not seeds:
        raise ValueError("need at least one seed")
    base = dict(params or {})
    base["n_agents"] = n_agents
    cos = {int(m): [] for m in m_grid}
    for seed in seeds:
        env = make_environment(scenario, base)
        traj = simulate_horizon(env, seed, horizon)
        game = ReplayGame(env, traj)
        try:
            exact = exact_shapley(game)
            for m in m_grid:
                est = mc_shapley(game, int(m), seed, workers=workers)
                cos[int(m)].append(cosine_similarity(est, exact))
        except UndefinedMetricError as exc:
            raise UndefinedMetricError(
                f"seed {seed} gave a degenerate (all-zero) attribution; "
                f"{exc}") from exc
    rows = []
    for m in m_grid:
        arr = np.asarray(cos[int(m)], dtype=np.float64)
        rows.append((scenario, int(m), float(arr.mean()),
                     float(arr.std())))
    return rows
