"""Competing attribution scorers: random normal scores, leave-one-out
deletion, and the external scorer wire client.

Random scores are a pure function of (N, T, seed) and never look at the
trajectory. LOO shares the replay cache with the Shapley estimators and
costs exactly N*T + 1 characteristic evaluations on a fresh game. The
external client speaks a batched JSON-over-HTTP exchange and validates
completeness and score range; every failure mode is a distinct error,
never a silent fallback.
"""

from __future__ import annotations

import math

import numpy as np

from . import rng
from .attribution import Game, ReplayGame
from .core import (AttributionMatrix, CoalitionMask, MalformedResponseError,
                   ScoreRangeError, TransportError)


def random_attribution(n_agents: int, horizon: int,
                       seed: int) -> AttributionMatrix:
    """I.i.d. standard normal scores from the seeded stream; independent of
    any trajectory. total_risk is just the grid sum (no game semantics)."""
    vals = np.empty((n_agents, horizon), dtype=np.float64)
    for i in range(n_agents):
        for t in range(horizon):
            vals[i, t] = rng.normal(seed, t + 1, i,
                                    rng.PURPOSE_RANDOM_SCORES)
    return AttributionMatrix(
        values=vals, estimator="random",
        total_risk=float(vals.sum()),
        estimator_params={"seed": seed})


def loo_attribution(game: Game) -> AttributionMatrix:
    """Leave-one-out deletion scores: v(full) − v(full minus slot) per
    slot. No efficiency guarantee; the scores need not sum to v(full)."""
    n, t_total = game.n_agents, game.horizon
    if isinstance(game, ReplayGame):
        total = game.total_deviation
    else:
        total = game.full_value()
    vals = np.empty((n, t_total), dtype=np.float64)
    for i in range(n):
        for t in range(t_total):
            bits = np.ones((n, t_total), dtype=np.bool_)
            bits[i, t] = False
            vals[i, t] = total - game.value(CoalitionMask(bits))
    params = {}
    if isinstance(game, ReplayGame):
        params["baseline_risk"] = game.baseline_risk
    return AttributionMatrix(
        values=vals, estimator="loo", total_risk=float(total),
        estimator_params=params)


class ScorerClient:
    """HTTP client for an external per-action scoring service."""

    def __init__(self, url: str, timeout: float = 30.0,
                 batch_size: int = 40):
        if batch_size < 1:
            raise ValueError("batch size must be >= 1")
        self.url = url
        self.timeout = timeout
        self.batch_size = batch_size

    def score_batch(self, doc: dict) -> dict:
        import requests

        try:
            resp = requests.post(self.url, json=doc, timeout=self.timeout)
            resp.raise_for_status()
        except Exception as exc:  # noqa: BLE001 - wrapped below
            raise TransportError(
                f"scorer request failed (batch {doc['batch_index']}): "
                f"{exc}") from exc
        try:
            return resp.json()
        except ValueError as exc:
            raise MalformedResponseError(
                f"scorer returned non-JSON body (batch "
                f"{doc['batch_index']})") from exc


def _parse_score_entry(entry: dict):
    """Accept both wire spellings: {agent, step, score} and
    {agent_id, timestep, score}."""
    if "agent" in entry and "step" in entry:
        return int(entry["agent"]), int(entry["step"]), entry["score"]
    if "agent_id" in entry and "timestep" in entry:
        return int(entry["agent_id"]), int(entry["timestep"]), entry["score"]
    raise MalformedResponseError(
        f"score entry missing agent/step fields: {sorted(entry)}")


def external_attribution(client: ScorerClient, env,
                         traj) -> AttributionMatrix:
    """Collect per-slot scores in [0,1] from the external service, batch by
    batch, and assemble the full grid. Every slot must be scored exactly
    once; gaps, duplicates, and out-of-range values are errors."""
    n, t_total = traj.n_agents, traj.horizon
    slots = [(i, t) for i in range(n) for t in range(1, t_total + 1)]
    batch_count = math.ceil(len(slots) / client.batch_size)
    zeros = np.zeros((n, t_total), dtype=np.uint8)
    pack = env.replay_pack(traj)
    baseline_risk = float(env.replay_risk(pack, zeros)[-1])
    target_risk = float(traj.risk_series[-1])

    vals = np.full((n, t_total), np.nan)
    for b in range(batch_count):
        chunk = slots[b * client.batch_size:(b + 1) * client.batch_size]
        doc = {
            "scenario": traj.scenario,
            "batch_index": b,
            "batch_count": batch_count,
            "slots": [
                {
                    "agent": i,
                    "step": t,
                    "action_summary": env.summarize_action(
                        traj.action_payload(i, t)),
                }
                for i, t in chunk
            ],
            "context": {
                "target_risk": target_risk,
                "baseline_risk": baseline_risk,
            },
        }
        body = client.score_batch(doc)
        entries = body.get("scores")
        if not isinstance(entries, list):
            raise MalformedResponseError(
                f"scorer response missing 'scores' list (batch {b})")
        expected = set(chunk)
        for entry in entries:
            agent, step, score = _parse_score_entry(entry)
            if (agent, step) not in expected:
                raise MalformedResponseError(
                    f"unexpected or duplicate slot (agent={agent}, "
                    f"step={step}) in batch {b}")
            if not isinstance(score, (int, float)) or \
                    not 0.0 <= float(score) <= 1.0:
                raise ScoreRangeError(
                    f"score {score!r} for (agent={agent}, step={step}) "
                    f"outside [0, 1]")
            vals[agent, step - 1] = float(score)
            expected.discard((agent, step))
        if expected:
            missing = sorted(expected)[0]
            raise MalformedResponseError(
                f"scorer response missing slot (agent={missing[0]}, "
                f"step={missing[1]}) in batch {b}")
    return AttributionMatrix(
        values=vals, estimator="external",
        total_risk=float(vals.sum()),
        estimator_params={"baseline_risk": baseline_risk})
