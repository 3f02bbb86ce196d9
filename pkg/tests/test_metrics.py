"""Aggregations and the five characterization metrics against hand-derived
fixtures, plus codomain properties under randomized grids."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventshap import (aggregate_agent, aggregate_behavior, aggregate_time,
                       build_weight_map, compute_report, gini, risk_latency,
                       risk_instability_correlation, synchronization)
from eventshap.core import AttributionMatrix, UndefinedMetricError

GRID = np.array([[1.0, 2.0], [3.0, 4.0]])


def test_time_aggregation_fixture(frozen_metrics):
    assert aggregate_time(GRID).tolist() == frozen_metrics["time_colsums"]


def test_agent_aggregation_fixture(frozen_metrics):
    totals, sigmas = aggregate_agent(GRID)
    assert totals.tolist() == frozen_metrics["agent_rowsums"]
    assert np.max(np.abs(sigmas - frozen_metrics["agent_sigmas"])) < 1e-12


def test_latency_fixture(frozen_metrics):
    lat, t_star = risk_latency([0.5, 0.3, 0.4], rho=1.0, q=0.9)
    assert t_star == frozen_metrics["latency_T_star"]
    assert abs(lat - frozen_metrics["latency_L"]) < 1e-12


def test_latency_crossing_is_strict():
    # prefix hits exactly q*rho at step 1; strict comparison waits for step 2
    lat, t_star = risk_latency([0.9, 0.1], rho=1.0, q=0.9)
    assert t_star == 2
    assert lat == 0.0


def test_latency_first_crossing_governs_nonmonotone_prefix():
    lat, t_star = risk_latency([2.0, -5.0, 1.0], rho=1.0, q=0.9)
    assert t_star == 1
    assert abs(lat - 2.0 / 3.0) < 1e-12


def test_latency_horizon_override():
    lat, t_star = risk_latency([1.0], rho=0.5, horizon=4)
    assert (lat, t_star) == (0.75, 1)


def test_latency_undefined_when_never_crossing():
    with pytest.raises(UndefinedMetricError):
        risk_latency([0.1, 0.1], rho=1.0)


def test_gini_fixture(frozen_metrics):
    assert abs(gini([1.0, 0.0, 0.0, 0.0])
               - frozen_metrics["gini_1000"]) < 1e-12


def test_gini_edges():
    assert gini([2.0, 2.0, 2.0]) == 0.0
    assert gini([-1.0, 2.0]) == gini([1.0, 2.0])  # sign-blind
    assert gini([5.0, 5.0, 5.0, 5.0]) == gini([0.5, 0.5, 0.5, 0.5])
    with pytest.raises(UndefinedMetricError):
        gini([0.0, 0.0])


def test_instability_correlation_fixture(frozen_metrics):
    r = risk_instability_correlation([1.0, -2.0, 3.0], [2.0, 4.0, 7.0])
    assert abs(r - frozen_metrics["pearson_123_247"]) < 1e-12


def test_instability_correlation_degenerate():
    with pytest.raises(UndefinedMetricError):
        risk_instability_correlation([1.0, 1.0], [2.0, 4.0])
    with pytest.raises(UndefinedMetricError):
        risk_instability_correlation([1.0, 3.0], [2.0, 2.0])


def test_synchronization_fixture(frozen_metrics):
    grid = np.array([[1.0, 1.0], [1.0, -1.0]])
    assert abs(synchronization(grid)
               - frozen_metrics["sync_two_col"]) < 1e-12


def test_synchronization_excludes_dead_columns():
    assert synchronization(np.array([[1.0, 0.0], [1.0, 0.0]])) == 1.0
    assert synchronization(np.array([[-1.0, -2.0], [-3.0, -4.0]])) == 1.0
    with pytest.raises(UndefinedMetricError):
        synchronization(np.zeros((2, 3)))


def test_behavior_split_fixture(frozen_metrics):
    out, rest = aggregate_behavior(
        np.array([[2.0]]), [[[(0, 0.5), (1, 0.5)]]], n_classes=2)
    assert out.tolist() == frozen_metrics["behavior_split"]
    assert rest == 0.0


def test_behavior_empty_slots_pool_as_unclassified():
    out, rest = aggregate_behavior(np.array([[2.0, -0.5]]),
                                   [[[], [(1, 1.0)]]], n_classes=3)
    assert rest == 2.0
    assert out.tolist() == [0.0, -0.5, 0.0]


def test_behavior_weight_validation_names_the_slot():
    g = np.array([[1.0]])
    with pytest.raises(ValueError, match=r"\(0,1\)"):
        aggregate_behavior(g, [[[(0, -0.25), (1, 1.25)]]], n_classes=2)
    with pytest.raises(ValueError, match=r"\(0,1\)"):
        aggregate_behavior(g, [[[(7, 1.0)]]], n_classes=2)
    with pytest.raises(ValueError, match="sum"):
        aggregate_behavior(g, [[[(0, 0.4), (1, 0.4)]]], n_classes=2)


def test_behavior_conservation_closes():
    rng_ = np.random.default_rng(0)
    g = rng_.normal(size=(3, 4))
    wmap = []
    for i in range(3):
        row = []
        for t in range(4):
            if (i + t) % 3 == 0:
                row.append([])
            elif (i + t) % 3 == 1:
                row.append([(i, 1.0)])
            else:
                row.append([(0, 0.25), (2, 0.75)])
        wmap.append(row)
    out, rest = aggregate_behavior(g, wmap, n_classes=3)
    assert abs(out.sum() + rest - g.sum()) < 1e-12


# ---- codomain properties under randomized grids ----


@given(st.integers(min_value=0, max_value=2 ** 31 - 1))
@settings(max_examples=120, deadline=None)
def test_codomains_hold_for_random_grids(seed):
    rng_ = np.random.default_rng(seed)
    n = int(rng_.integers(2, 8))
    t = int(rng_.integers(2, 8))
    g = rng_.normal(scale=float(rng_.uniform(0.01, 100.0)), size=(n, t))
    totals, sigmas = aggregate_agent(g)

    val = gini(totals)
    assert 0.0 <= val <= (n - 1) / n + 1e-12

    try:
        r = risk_instability_correlation(totals, sigmas)
        assert -1.0 - 1e-12 <= r <= 1.0 + 1e-12
    except UndefinedMetricError:
        pass

    z = synchronization(g)
    assert 0.0 <= z <= 1.0 + 1e-12

    try:
        lat, t_star = risk_latency(aggregate_time(g), rho=1.0)
        assert 1 <= t_star <= t
        assert 0.0 <= lat <= (t - 1) / t + 1e-12
    except UndefinedMetricError:
        pass


def test_scale_invariance():
    v = [1.0, 4.0, 2.5]
    assert abs(gini(v) - gini([3.0 * x for x in v])) < 1e-12
    g = np.array([[1.0, -2.0], [0.5, 4.0]])
    assert abs(synchronization(g) - synchronization(5.0 * g)) < 1e-12
    r1 = risk_instability_correlation([1.0, 2.0, 4.0], [3.0, 1.0, 2.0])
    r2 = risk_instability_correlation([2.0, 4.0, 8.0], [3.0, 1.0, 2.0])
    assert abs(r1 - r2) < 1e-12


# ---- the assembled report ----


def test_report_collects_everything():
    vals = np.array([[1.0, 2.0], [3.0, 5.0]])
    mat = AttributionMatrix(values=vals, estimator="exact", total_risk=11.0)
    wmap = [[[(0, 1.0)], [(1, 1.0)]], [[(0, 1.0)], []]]
    rep = compute_report(mat, rho=8.0, q=0.9, weight_map=wmap, n_classes=2)
    assert rep.total_risk == 11.0
    assert rep.phi_time.tolist() == [4.0, 7.0]
    assert rep.phi_agent.tolist() == [3.0, 8.0]
    assert abs(rep.phi_behavior.sum() + rep.phi_unclassified - 11.0) < 1e-12
    assert rep.undefined == {}
    assert rep.t_star == 2  # cumsum (4, 11) first exceeds 7.2 at step 2


def test_report_marks_undefined_metrics_instead_of_guessing():
    rep = compute_report(np.zeros((2, 2)), rho=1.0)
    assert rep.latency is None and "latency" in rep.undefined
    assert rep.agent_gini is None and "agent_gini" in rep.undefined
    assert rep.synchronization is None
    assert rep.behavior_gini is None
    assert "behavior_gini" in rep.undefined


def test_report_zero_sigma_correlation_is_undefined():
    rep = compute_report(np.array([[1.0, 1.0], [2.0, 2.0]]), rho=0.1)
    assert rep.instability_correlation is None
    assert "instability_correlation" in rep.undefined
    assert rep.latency is not None  # the rest still computes


def test_weight_map_from_trajectory(social_fixture):
    env, traj = social_fixture
    wmap = build_weight_map(env, traj)
    assert len(wmap) == 3 and all(len(row) == 3 for row in wmap)
    # agent 2 stays silent at step 2: pure no-interaction class
    assert wmap[2][1] == [(1, 1.0)]
    out, rest = aggregate_behavior(np.ones((3, 3)), wmap,
                                   n_classes=env.behavior_count)
    assert abs(out.sum() + rest - 9.0) < 1e-12
