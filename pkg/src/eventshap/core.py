"""Shared domain types: trajectories, actions, coalition masks, attribution
matrices, metric reports, and the common exception family.

Time steps are 1-indexed on every external surface (t = 1..T); internal
arrays are 0-indexed with index t-1 holding step t.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

EPS_NUM = 1e-9  # relative tolerance for conservation/efficiency checks


class EventShapError(Exception):
    """Base class for package errors."""


class DimensionMismatchError(EventShapError):
    pass


class UndefinedMetricError(EventShapError):
    """A metric has no defined value for this input (reported, not faked)."""


class ExactSizeError(EventShapError):
    """Exact enumeration refused: the game exceeds the slot cap."""


class SimulationError(EventShapError):
    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class ExternalScorerError(EventShapError):
    pass


class TransportError(ExternalScorerError):
    pass


class MalformedResponseError(ExternalScorerError):
    pass


class ScoreRangeError(ExternalScorerError):
    pass


@dataclass(frozen=True)
class ActionRecord:
    """One agent's recorded action at one step.

    ``behavior_class`` is assigned eagerly by the scenario taxonomy when the
    record is created: the lowest-index matched class, or -1 for actions with
    no behavior instance (e.g. an all-hold trading step). Weighted multi-class
    splits are recovered from the payload at aggregation time.
    """

    agent: int
    step: int
    payload: Any
    behavior_class: int


class CoalitionMask:
    """Subset S of the N×T action slots; true bits are preserved on replay."""

    __slots__ = ("bits",)

    def __init__(self, bits: np.ndarray):
        arr = np.ascontiguousarray(bits, dtype=np.bool_)
        if arr.ndim != 2:
            raise DimensionMismatchError("coalition mask must be 2-D (N, T)")
        self.bits = arr

    @classmethod
    def full(cls, n: int, t: int) -> "CoalitionMask":
        return cls(np.ones((n, t), dtype=np.bool_))

    @classmethod
    def empty(cls, n: int, t: int) -> "CoalitionMask":
        return cls(np.zeros((n, t), dtype=np.bool_))

    @property
    def shape(self):
        return self.bits.shape

    def key(self) -> bytes:
        """Canonical serialization: injective over (shape, bits)."""
        n, t = self.bits.shape
        return (
            n.to_bytes(4, "little")
            + t.to_bytes(4, "little")
            + np.packbits(self.bits.ravel()).tobytes()
        )

    def __eq__(self, other):
        return isinstance(other, CoalitionMask) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


@dataclass
class TrajectoryRecord:
    """Full interaction log of one simulated run ending in an event at step T.

    ``states[t-1]`` is the scenario snapshot after joint action t;
    ``risk_series[t-1]`` is the risk evaluated on the state prefix through t.
    ``params`` carries the scenario parameters needed to rebuild the
    environment for counterfactual replay.
    """

    scenario: str
    seed: int
    n_agents: int
    horizon: int  # T
    rho: float
    states: list
    actions: list  # N lists of T ActionRecord
    risk_series: np.ndarray
    event_step: int
    params: dict = field(default_factory=dict)
    schema_version: int = 1

    @property
    def total_raw_risk(self) -> float:
        return float(self.risk_series[self.horizon - 1])

    def action_payload(self, agent: int, step: int):
        if not (0 <= agent < self.n_agents and 1 <= step <= self.horizon):
            raise DimensionMismatchError(
                f"slot (agent={agent}, step={step}) outside the "
                f"{self.n_agents}x{self.horizon} grid")
        return self.actions[agent][step - 1].payload


@dataclass
class NoEventOutcome:
    """Run that reached max_steps without crossing the threshold; carries the
    risk series for threshold calibration."""

    scenario: str
    seed: int
    rho: float
    risk_series: np.ndarray


@dataclass
class AttributionMatrix:
    """N×T grid of per-action scores with estimator provenance.

    ``total_risk`` is the risk deviation of the full coalition,
    v(Ω) = R_T(τ) − R_T(τ^∅).
    """

    values: np.ndarray
    estimator: str  # exact | monte_carlo | random | loo | external
    total_risk: float
    estimator_params: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.values.shape

    def efficiency_residual(self) -> float:
        return float(self.values.sum() - self.total_risk)


@dataclass
class MetricReport:
    """The five characterization metrics plus every dimensional aggregate
    needed to re-derive them. Metrics without a defined value for the input
    are None, with the reason recorded in ``undefined``."""

    phi_time: np.ndarray
    phi_agent: np.ndarray
    sigma_agent: np.ndarray
    phi_behavior: np.ndarray
    phi_unclassified: float
    latency: Optional[float]
    t_star: Optional[int]
    agent_gini: Optional[float]
    instability_correlation: Optional[float]
    synchronization: Optional[float]
    behavior_gini: Optional[float]
    q: float
    rho: float
    total_risk: float
    undefined: dict = field(default_factory=dict)


def validate_trajectory(traj: TrajectoryRecord) -> list:
    """Check TrajectoryRecord invariants; returns a list of violation strings
    (empty means OK). Pure and idempotent."""
    violations = []
    n, t_final = traj.n_agents, traj.horizon
    if n < 1:
        violations.append("agent count must be >= 1")
    if t_final < 1:
        violations.append("horizon must be >= 1")
    if traj.rho <= 0:
        violations.append("threshold rho must be > 0")
    if len(traj.risk_series) != t_final:
        violations.append("risk series length differs from horizon")
    if len(traj.states) != t_final:
        violations.append("state sequence length differs from horizon")
    if traj.event_step != t_final:
        violations.append("event step must equal the horizon T")

    if len(traj.actions) != n:
        violations.append("incomplete action grid: wrong agent count")
    else:
        for i, row in enumerate(traj.actions):
            if len(row) != t_final:
                violations.append(f"incomplete action grid: agent {i}")
                continue
            for t, rec in enumerate(row, start=1):
                if rec is None:
                    violations.append(f"incomplete action grid: missing ({i},{t})")
                elif rec.agent != i or rec.step != t:
                    violations.append(f"misplaced action record at ({i},{t})")

    if len(traj.risk_series) == t_final and t_final >= 1:
        risks = np.asarray(traj.risk_series, dtype=float)
        if not risks[t_final - 1] > traj.rho:
            violations.append("final risk does not exceed rho")
        crossings = np.nonzero(risks > traj.rho)[0]
        if crossings.size and crossings[0] != t_final - 1:
            violations.append("event not at first crossing")
    return violations
