"""Dimensional aggregation of an attribution grid and the five
characterization metrics: formation latency, agent concentration,
instability correlation, synchronization, and behavior concentration.

All reductions are pure functions of the grid. Metrics that are undefined
for a given input (all-zero grids, zero variance) raise
UndefinedMetricError; compute_report catches those per metric and reports
None with the reason instead of a number.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .core import AttributionMatrix, MetricReport, UndefinedMetricError


def _grid(phi) -> np.ndarray:
    vals = phi.values if isinstance(phi, AttributionMatrix) else phi
    return np.asarray(vals, dtype=np.float64)


def aggregate_time(phi) -> np.ndarray:
    """Per-step totals: column sums of the N x T grid."""
    return _grid(phi).sum(axis=0)


def risk_latency(phi_tm, rho: float, q: float = 0.9,
                 horizon: Optional[int] = None):
    """Formation latency (L, t_star).

    t_star is the first step whose prefix sum of per-step totals strictly
    exceeds q * rho; prefix sums need not be monotone, the first crossing
    governs. L = (T - t_star) / T, so 0 means the risk formed at the last
    step and (T-1)/T means it was already present at step 1.
    """
    v = np.asarray(phi_tm, dtype=np.float64)
    t_total = int(horizon) if horizon is not None else v.shape[0]
    crossed = np.nonzero(np.cumsum(v) > q * rho)[0]
    if crossed.size == 0:
        raise UndefinedMetricError(
            f"prefix sums never exceed q*rho = {q * rho}")
    t_star = int(crossed[0]) + 1
    return (t_total - t_star) / t_total, t_star


def aggregate_agent(phi):
    """Per-agent totals and per-agent spread: row sums and population
    standard deviation (divisor T) of each row."""
    g = _grid(phi)
    return g.sum(axis=1), g.std(axis=1)


def gini(values) -> float:
    """Mean-absolute-difference concentration over |values|:
    sum_ij ||v_i| - |v_j|| / (2 n sum|v_i|). 0 is perfect equality,
    (n-1)/n maximal concentration."""
    v = np.abs(np.asarray(values, dtype=np.float64))
    total = v.sum()
    if total == 0.0:
        raise UndefinedMetricError(
            "concentration undefined for an all-zero vector")
    diffs = np.abs(v[:, None] - v[None, :]).sum()
    return float(diffs / (2.0 * v.shape[0] * total))


def risk_instability_correlation(phi_agent, sigma_agent) -> float:
    """Pearson correlation of (|per-agent total|, per-agent spread)."""
    x = np.abs(np.asarray(phi_agent, dtype=np.float64))
    y = np.asarray(sigma_agent, dtype=np.float64)
    sx = x.std()
    sy = y.std()
    if sx == 0.0 or sy == 0.0:
        raise UndefinedMetricError(
            "correlation undefined when either vector has zero variance")
    cov = ((x - x.mean()) * (y - y.mean())).mean()
    return float(cov / (sx * sy))


def synchronization(phi) -> float:
    """Alignment order parameter: per step, |column sum| / column absolute
    sum; averaged over steps. Steps with zero absolute sum carry no
    alignment information and are excluded from the average."""
    g = _grid(phi)
    abs_sums = np.abs(g).sum(axis=0)
    live = abs_sums > 0.0
    if not live.any():
        raise UndefinedMetricError(
            "synchronization undefined for an all-zero grid")
    ratios = np.abs(g.sum(axis=0)[live]) / abs_sums[live]
    return float(ratios.mean())


def aggregate_behavior(phi, weight_map, n_classes: int):
    """Per-class totals under a proportional weight map.

    weight_map[i][t] is a list of (class, weight) pairs for slot (i, t);
    weights must be >= 0 and sum to 1 per listed slot. Slots with an empty
    list (no behavior instance, e.g. an all-hold step) pool into the
    returned unclassified total so conservation still closes.
    """
    g = _grid(phi)
    n, t_total = g.shape
    out = np.zeros(n_classes, dtype=np.float64)
    unclassified = 0.0
    for i in range(n):
        for t in range(t_total):
            pairs = weight_map[i][t]
            if not pairs:
                unclassified += g[i, t]
                continue
            wsum = 0.0
            for k, w in pairs:
                if w < 0:
                    raise ValueError(
                        f"negative behavior weight at slot ({i},{t + 1})")
                if not 0 <= k < n_classes:
                    raise ValueError(
                        f"behavior class {k} out of range at slot "
                        f"({i},{t + 1})")
                out[k] += w * g[i, t]
                wsum += w
            if not math.isclose(wsum, 1.0, rel_tol=0.0, abs_tol=1e-9):
                raise ValueError(
                    f"behavior weights at slot ({i},{t + 1}) sum to {wsum}, "
                    f"not 1")
    return out, float(unclassified)


def build_weight_map(env, traj):
    """Behavior weight map for a recorded trajectory, one classification
    per action slot."""
    return [[env.classify_behavior(rec.payload) for rec in row]
            for row in traj.actions]


def compute_report(phi, rho: float, q: float = 0.9, weight_map=None,
                   n_classes: int = 0) -> MetricReport:
    """All aggregates and metrics for one attribution grid; metrics that
    are undefined for this input come back as None with the reason in
    ``undefined``."""
    g = _grid(phi)
    if isinstance(phi, AttributionMatrix):
        total = phi.total_risk
    else:
        total = float(g.sum())
    undefined = {}

    phi_time = aggregate_time(g)
    phi_agent, sigma_agent = aggregate_agent(g)

    latency = t_star = None
    try:
        latency, t_star = risk_latency(phi_time, rho, q)
    except UndefinedMetricError as exc:
        undefined["latency"] = str(exc)

    agent_gini = None
    try:
        agent_gini = gini(phi_agent)
    except UndefinedMetricError as exc:
        undefined["agent_gini"] = str(exc)

    corr = None
    try:
        corr = risk_instability_correlation(phi_agent, sigma_agent)
    except UndefinedMetricError as exc:
        undefined["instability_correlation"] = str(exc)

    sync = None
    try:
        sync = synchronization(g)
    except UndefinedMetricError as exc:
        undefined["synchronization"] = str(exc)

    if weight_map is not None and n_classes > 0:
        phi_behavior, unclassified = aggregate_behavior(
            g, weight_map, n_classes)
        behavior_gini = None
        try:
            behavior_gini = gini(phi_behavior)
        except UndefinedMetricError as exc:
            undefined["behavior_gini"] = str(exc)
    else:
        phi_behavior = np.zeros(0, dtype=np.float64)
        unclassified = float(g.sum())
        behavior_gini = None
        undefined["behavior_gini"] = "no behavior weight map supplied"

    return MetricReport(
        phi_time=phi_time,
        phi_agent=phi_agent,
        sigma_agent=sigma_agent,
        phi_behavior=phi_behavior,
        phi_unclassified=unclassified,
        latency=latency,
        t_star=t_star,
        agent_gini=agent_gini,
        instability_correlation=corr,
        synchronization=sync,
        behavior_gini=behavior_gini,
        q=q,
        rho=rho,
        total_risk=total,
        undefined=undefined,
    )
