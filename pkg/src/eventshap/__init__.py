"""Shapley-value attribution of threshold-crossing events in multi-agent
simulations: who did what, when, and how much did it matter."""

from .core import (ActionRecord, AttributionMatrix, CoalitionMask,
                   DimensionMismatchError, EventShapError, ExactSizeError,
                   ExternalScorerError, MalformedResponseError, MetricReport,
                   NoEventOutcome, ScoreRangeError, SimulationError,
                   TrajectoryRecord, TransportError, UndefinedMetricError,
                   validate_trajectory)
from .attribution import (Game, ReplayGame, SyntheticGame,
                          cosine_similarity, exact_shapley, mc_shapley)
from .baselines import (ScorerClient, external_attribution, loo_attribution,
                        random_attribution)
from .envsim import (CounterfactualTrajectory, DecisionSource,
                     replay_counterfactual, simulate, simulate_horizon)
from .evaluation import faithfulness, faithfulness_rows, mc_accuracy_sweep
from .metrics import (aggregate_agent, aggregate_behavior, aggregate_time,
                      build_weight_map, compute_report, gini,
                      risk_instability_correlation, risk_latency,
                      synchronization)
from .scenarios import SCENARIO_NAMES, make_environment, params_dict

__version__ = "0.1.0"

__all__ = [
    "ActionRecord",
    "AttributionMatrix",
    "CoalitionMask",
    "CounterfactualTrajectory",
    "DecisionSource",
    "DimensionMismatchError",
    "EventShapError",
    "ExactSizeError",
    "ExternalScorerError",
    "Game",
    "MalformedResponseError",
    "MetricReport",
    "NoEventOutcome",
    "ReplayGame",
    "SCENARIO_NAMES",
    "ScoreRangeError",
    "ScorerClient",
    "SimulationError",
    "SyntheticGame",
    "TrajectoryRecord",
    "TransportError",
    "UndefinedMetricError",
    "aggregate_agent",
    "aggregate_behavior",
    "aggregate_time",
    "build_weight_map",
    "compute_report",
    "cosine_similarity",
    "gini",
    "risk_instability_correlation",
    "risk_latency",
    "synchronization",
    "exact_shapley",
    "external_attribution",
    "faithfulness",
    "faithfulness_rows",
    "loo_attribution",
    "make_environment",
    "mc_accuracy_sweep",
    "mc_shapley",
    "params_dict",
    "random_attribution",
    "replay_counterfactual",
    "simulate",
    "simulate_horizon",
    "validate_trajectory",
    "__version__",
]
