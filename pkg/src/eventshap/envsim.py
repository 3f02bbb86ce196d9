"""Simulation driver and counterfactual replay engine.

Every scenario implements the same duck-typed environment contract
(reset / policy / step_state / baseline_action / classify_behavior plus the
array replay bridge). :func:`simulate` drives policies forward until the
risk series first exceeds the threshold; :func:`replay_counterfactual`
re-evolves a recorded trajectory under a coalition mask, pinning preserved
actions to their recorded payloads and substituting the scenario baseline
for removed ones.

Determinism: all scenario stochasticity is drawn from counter-based streams
keyed on (seed, step, agent, purpose), and replays never invoke policies,
so a replay is a pure function of (trajectory, mask) and two replays of the
same mask are identical. The forward simulation and the replay engine share
the same per-step transition kernels, so a full-preservation replay
reproduces the original states and risk series exactly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (ActionRecord, CoalitionMask, DimensionMismatchError,
                   NoEventOutcome, SimulationError, TrajectoryRecord)
from .scenarios import params_dict


@dataclass
class ExternalDecisionClient:
    """JSON/HTTP decision service: POST {scenario, agent_id, step,
    observation} -> {action payload}. Failures raise SimulationError; there
    is never a silent fallback to baseline actions."""

    url: str
    timeout: float = 10.0
    retries: int = 2
    retry_wait: float = 0.2

    def decide(self, scenario: str, agent: int, step: int, observation: dict):
        import requests

        payload = {
            "scenario": scenario,
            "agent_id": agent,
            "step": step,
            "observation": observation,
        }
        last_err: Optional[Exception] = None
        for _ in range(self.retries + 1):
            try:
                resp = requests.post(self.url, json=payload,
                                     timeout=self.timeout)
                resp.raise_for_status()
                return resp.json()
            except Exception as exc:  # noqa: BLE001 - surfaced below
                last_err = exc
                time.sleep(self.retry_wait)
        raise SimulationError(
            f"external decision service unreachable: {last_err}", step=step)


@dataclass
class DecisionSource:
    """scripted (deterministic persona policies) or external (remote HTTP
    decision service)."""

    kind: str = "scripted"
    client: Optional[ExternalDecisionClient] = None

    @classmethod
    def scripted(cls) -> "DecisionSource":
        return cls(kind="scripted")

    @classmethod
    def external(cls, url: str, timeout: float = 10.0,
                 retries: int = 2) -> "DecisionSource":
        return cls(kind="external",
                   client=ExternalDecisionClient(url, timeout, retries))


@dataclass
class CounterfactualTrajectory:
    """Replay result: fixed horizon T, recomputed states and risk series.
    The event boundary is not re-detected."""

    scenario: str
    horizon: int
    risk_series: np.ndarray
    states: list
    mask: CoalitionMask


def _decide(env, agent, state, step, seed, source: DecisionSource):
    if source.kind == "scripted":
        return env.policy(agent, state, step, seed)
    obs = env.observe(agent, state, step)
    raw = source.client.decide(env.name, agent, step, obs)
    try:
        return env.payload_from_wire(raw)
    except (ValueError, KeyError, TypeError, IndexError) as exc:
        raise SimulationError(
            f"bad action payload from decision service: {exc}",
            step=step) from exc


def simulate(env, seed: int, rho: float, max_steps: int,
             source: Optional[DecisionSource] = None):
    """Run until the risk series first exceeds ``rho``.

    Returns a TrajectoryRecord truncated at the crossing step, or a
    NoEventOutcome carrying the full risk series when ``max_steps`` passes
    without a crossing.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    if rho <= 0:
        raise ValueError("rho must be > 0")
    source = source or DecisionSource.scripted()
    n = env.n_agents
    state = env.reset(seed)
    states, risks = [], []
    action_rows = [[] for _ in range(n)]
    for step in range(1, max_steps + 1):
        payloads = [_decide(env, i, state, step, seed, source)
                    for i in range(n)]
        risk_t = env.step_state(state, payloads, step)
        states.append(env.snapshot(state))
        risks.append(risk_t)
        for i in range(n):
            action_rows[i].append(ActionRecord(
                agent=i, step=step, payload=payloads[i],
                behavior_class=env.primary_class(payloads[i])))
        if risk_t > rho:
            return TrajectoryRecord(
                scenario=env.name,
                seed=seed,
                n_agents=n,
                horizon=step,
                rho=rho,
                states=states,
                actions=action_rows,
                risk_series=np.asarray(risks, dtype=np.float64),
                event_step=step,
                params=params_dict(env),
            )
    return NoEventOutcome(scenario=env.name, seed=seed, rho=rho,
                          risk_series=np.asarray(risks, dtype=np.float64))


def simulate_horizon(env, seed: int, horizon: int, rho: float = 1e300,
                     source: Optional[DecisionSource] = None) -> TrajectoryRecord:
    """Run exactly ``horizon`` steps and treat the final step as the event
    boundary by construction. Used by fixed-size estimation protocols where
    the threshold plays no role; such records need not satisfy the
    first-crossing invariant."""
    source = source or DecisionSource.scripted()
    n = env.n_agents
    state = env.reset(seed)
    states, risks = [], []
    action_rows = [[] for _ in range(n)]
    for step in range(1, horizon + 1):
        payloads = [_decide(env, i, state, step, seed, source)
                    for i in range(n)]
        risk_t = env.step_state(state, payloads, step)
        states.append(env.snapshot(state))
        risks.append(risk_t)
        for i in range(n):
            action_rows[i].append(ActionRecord(
                agent=i, step=step, payload=payloads[i],
                behavior_class=env.primary_class(payloads[i])))
    return TrajectoryRecord(
        scenario=env.name, seed=seed, n_agents=n, horizon=horizon,
        rho=rho, states=states, actions=action_rows,
        risk_series=np.asarray(risks, dtype=np.float64),
        event_step=horizon, params=params_dict(env))


def _as_mask_u8(traj: TrajectoryRecord, mask) -> np.ndarray:
    bits = mask.bits if isinstance(mask, CoalitionMask) else np.asarray(mask)
    if bits.shape != (traj.n_agents, traj.horizon):
        raise DimensionMismatchError(
            f"mask shape {bits.shape} does not match trajectory "
            f"({traj.n_agents}, {traj.horizon})")
    return np.ascontiguousarray(bits, dtype=np.uint8)


def replay_counterfactual(env, traj: TrajectoryRecord,
                          mask) -> CounterfactualTrajectory:
    """Re-evolve ``traj`` under a coalition mask.

    Preserved slots keep their recorded action payloads; removed slots take
    env.baseline_action. The horizon stays at the original T and the risk
    series is recomputed from the counterfactual states.
    """
    mask_u8 = _as_mask_u8(traj, mask)
    pack = env.replay_pack(traj)
    risk, states = env.replay_full(pack, mask_u8)
    bits = mask.bits if isinstance(mask, CoalitionMask) else \
        np.asarray(mask, dtype=np.bool_)
    return CounterfactualTrajectory(
        scenario=env.name, horizon=traj.horizon,
        risk_series=risk, states=states,
        mask=CoalitionMask(bits))
