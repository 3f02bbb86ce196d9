"""File formats: trajectory and attribution JSON, metric report JSON, and
the plot-data CSV exports.

Layout is canonical (sorted keys, fixed indent, repr floats), so identical
runs produce byte-identical files. The one non-reproducible field is the
attribution file's wall_time_ms; comparisons that want purity should mask
it (compare_attribution_files does).
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .core import ActionRecord, AttributionMatrix, MetricReport, \
    TrajectoryRecord
from .scenarios import make_environment

SCHEMA_VERSION = 1


def _dump(doc: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _load(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_trajectory(env, traj: TrajectoryRecord, path: str) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "scenario": traj.scenario,
        "seed": traj.seed,
        "N": traj.n_agents,
        "T": traj.horizon,
        "rho": traj.rho,
        "risk_series": [float(x) for x in traj.risk_series],
        "actions": [
            [
                {
                    "agent": rec.agent,
                    "step": rec.step,
                    "behavior_class": rec.behavior_class,
                    "payload": env.payload_to_json(rec.payload),
                }
                for rec in row
            ]
            for row in traj.actions
        ],
        "states": traj.states,
        "event_step": traj.event_step,
        "params": traj.params,
    }
    _dump(doc, path)


def read_trajectory(path: str):
    """Load a trajectory file; returns (environment, trajectory). The
    environment is rebuilt from the embedded scenario parameters so the
    file is self-contained for replay."""
    doc = _load(path)
    env = make_environment(doc["scenario"], doc.get("params") or None)
    actions = []
    for row in doc["actions"]:
        recs = []
        for cell in row:
            payload = env.payload_from_json(cell["payload"])
            recs.append(ActionRecord(
                agent=cell["agent"], step=cell["step"], payload=payload,
                behavior_class=cell["behavior_class"]))
        actions.append(recs)
    traj = TrajectoryRecord(
        scenario=doc["scenario"],
        seed=doc["seed"],
        n_agents=doc["N"],
        horizon=doc["T"],
        rho=doc["rho"],
        states=doc["states"],
        actions=actions,
        risk_series=np.asarray(doc["risk_series"], dtype=np.float64),
        event_step=doc["event_step"],
        params=doc.get("params", {}),
        schema_version=doc.get("schema_version", SCHEMA_VERSION),
    )
    return env, traj


def write_attribution(mat: AttributionMatrix, path: str, *,
                      evaluations_used: int,
                      wall_time_ms: float) -> None:
    n, t_total = mat.shape
    params = mat.estimator_params
    doc = {
        "estimator": mat.estimator,
        "M": params.get("M"),
        "seed": params.get("seed"),
        "N": n,
        "T": t_total,
        "values": [[float(x) for x in row] for row in mat.values],
        "total_risk": float(mat.total_risk),
        "baseline_risk": params.get("baseline_risk"),
        "evaluations_used": int(evaluations_used),
        "wall_time_ms": int(round(wall_time_ms)),
    }
    _dump(doc, path)


def read_attribution(path: str):
    """Load an attribution file; returns (matrix, metadata dict)."""
    doc = _load(path)
    params = {}
    for key in ("M", "seed", "baseline_risk"):
        if doc.get(key) is not None:
            params[key] = doc[key]
    mat = AttributionMatrix(
        values=np.asarray(doc["values"], dtype=np.float64),
        estimator=doc["estimator"],
        total_risk=doc["total_risk"],
        estimator_params=params,
    )
    return mat, doc


def compare_attribution_files(path_a: str, path_b: str) -> bool:
    """Equality of two attribution files with the timing field masked."""
    a, b = _load(path_a), _load(path_b)
    a.pop("wall_time_ms", None)
    b.pop("wall_time_ms", None)
    return a == b


def write_metric_report(report: MetricReport, path: str) -> None:
    doc = {
        "phi_time": [float(x) for x in report.phi_time],
        "phi_agent": [float(x) for x in report.phi_agent],
        "sigma_agent": [float(x) for x in report.sigma_agent],
        "phi_behavior": [float(x) for x in report.phi_behavior],
        "phi_unclassified": report.phi_unclassified,
        "latency": report.latency,
        "t_star": report.t_star,
        "agent_gini": report.agent_gini,
        "instability_correlation": report.instability_correlation,
        "synchronization": report.synchronization,
        "behavior_gini": report.behavior_gini,
        "q": report.q,
        "rho": report.rho,
        "total_risk": report.total_risk,
        "undefined": report.undefined,
    }
    _dump(doc, path)


def write_metric_csvs(report: MetricReport, base: str) -> list:
    """Plot-data CSVs next to ``base``: per-step totals, per-agent totals
    and spread, per-class totals with percent of classified risk. Returns
    the written paths."""
    paths = []

    p = base + "_time.csv"
    with open(p, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "phi_tm"])
        for t, val in enumerate(report.phi_time, start=1):
            w.writerow([t, repr(float(val))])
    paths.append(p)

    p = base + "_agent.csv"
    with open(p, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["agent", "phi_ag", "sigma_ag"])
        for i, (a, s) in enumerate(zip(report.phi_agent,
                                       report.sigma_agent)):
            w.writerow([i, repr(float(a)), repr(float(s))])
    paths.append(p)

    p = base + "_behavior.csv"
    classified = float(report.phi_behavior.sum()) if \
        report.phi_behavior.size else 0.0
    with open(p, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["behavior_class", "phi_be", "percent_of_classified"])
        for k, val in enumerate(report.phi_behavior):
            pct = repr(100.0 * float(val) / classified) if \
                classified != 0.0 else ""
            w.writerow([k, repr(float(val)), pct])
        w.writerow(["unclassified", repr(report.phi_unclassified), ""])
    paths.append(p)
    return paths


def write_rows_csv(rows: list, header: list, path: str) -> None:
    """Generic CSV writer used by the evaluation reports; floats go out in
    repr form so files round-trip bit-stably."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x
                        for x in row])
