"""
Experiment grids and the result table.

Every grid point (policy, defrag rate, load) yields one row per class plus
an ``overall`` row, for each requested source (analytic and/or sim). The
gain column compares with the defrag-rate-0 point of the same policy and
load; that baseline is computed even if 0 is not in the grid.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable

from daas import ctmc
from daas.config import ExperimentPlan
from daas.errors import (
    ConsistencyError,
    NumericalFailure,
    ReducibleChainError,
    ScenarioError,
    StateSpaceTooLarge,
)
from daas.linkstate import Scenario
from daas.metrics import BlockingReport, blocking_report, scenario_at_load
from daas.sim import BlockingEstimate, SimConfig, default_workers, simulate
from daas.solver import solve_stationary

COLUMNS = ("policy", "mu_d", "load_erlang", "class", "source", "bp_total", "bp_frag",
           "bp_resource", "bp_daas", "gain_total", "ci_half_width", "n_states", "error")

POINT_ERRORS = (StateSpaceTooLarge, NumericalFailure, ReducibleChainError, ConsistencyError,
                ScenarioError, MemoryError)


@dataclass
class PointResult:
    scenario: Scenario
    analytic: BlockingReport | None = None
    sim: BlockingEstimate | None = None
    analytic_error: str = ""
    sim_error: str = ""


def solve_point(scenario: Scenario, method: str = "gth", weighting: str = "arrival",
                max_entries: int = ctmc.DEFAULT_MAX_ENTRIES) -> BlockingReport:
    space, q = ctmc.build(scenario, max_entries)
    pi = solve_stationary(q, method=method)
    return blocking_report(space, pi, scenario, weighting)


def _run_point(scenario: Scenario, plan: ExperimentPlan) -> PointResult:
    res = PointResult(scenario)
    if plan.mode in ("analytic", "both"):
        try:
            res.analytic = solve_point(scenario, plan.solver_method, plan.weighting, plan.max_entries)
        except POINT_ERRORS as exc:
            res.analytic_error = f"{type(exc).__name__}: {exc}"
    if plan.mode in ("sim", "both"):
        try:
            cfg = SimConfig(scenario, plan.sim.measured_arrivals, plan.sim.replications,
                            plan.sim.base_seed, plan.sim.warmup_arrivals)
            res.sim = simulate(cfg, workers=1)
        except POINT_ERRORS as exc:
            res.sim_error = f"{type(exc).__name__}: {exc}"
    return res


def grid_scenarios(plan: ExperimentPlan) -> list[Scenario]:
    """Scenarios in output order: policy, defrag rate, load."""
    out = []
    for policy in plan.policies:
        for mu_d in plan.defrag_rates:
            for load in plan.loads:
                out.append(scenario_at_load(plan.template.replace(policy=policy, defrag_rate=mu_d), load))
    return out


def _baseline_key(sc: Scenario) -> tuple:
    return (sc.policy, sc.capacity, sc.classes)


def run_points(scenarios: list[Scenario], plan: ExperimentPlan, workers: int | None = None) -> list[dict]:
    """Evaluate scenarios (plus any missing defrag-rate-0 baselines) and build rows."""
    jobs = list(scenarios)
    keys = {_baseline_key(s) for s in jobs if s.defrag_rate == 0}
    for s in scenarios:
        base = s.replace(defrag_rate=0.0)
        if _baseline_key(base) not in keys:
            keys.add(_baseline_key(base))
            jobs.append(base)
    workers = default_workers() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda s: _run_point(s, plan), jobs))
    else:
        results = [_run_point(s, plan) for s in jobs]
    baselines = {_baseline_key(r.scenario): r for r in results if r.scenario.defrag_rate == 0}
    rows: list[dict] = []
    for res in results[:len(scenarios)]:
        rows.extend(point_rows(res, baselines.get(_baseline_key(res.scenario.replace(defrag_rate=0.0)))))
    return rows


def run_sweep(plan: ExperimentPlan, workers: int | None = None) -> list[dict]:
    return run_points(grid_scenarios(plan), plan, workers)


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def _terms(source, obj, k):
    """(total, frag, resource, daas, half_width) of class k (None = overall)."""
    if source == "analytic":
        t = obj.overall if k is None else obj.per_class[k]
        return t.total, t.frag, t.resource, t.daas, None
    e = obj.overall if k is None else obj.per_class[k]
    return e.total, e.frag, e.resource, e.daas, e.half_width


def point_rows(res: PointResult, baseline: PointResult | None) -> list[dict]:
    sc = res.scenario
    rows = []
    labels = [str(k + 1) for k in range(sc.num_classes)] + ["overall"]
    for idx, label in enumerate(labels):
        k = None if label == "overall" else idx
        for source, obj, err in (("analytic", res.analytic, res.analytic_error),
                                 ("sim", res.sim, res.sim_error)):
            if obj is None and not err:
                continue
            row = dict.fromkeys(COLUMNS, "")
            row.update(policy=sc.policy.short, mu_d=_fmt(sc.defrag_rate), load_erlang=_fmt(sc.load_erlang),
                       **{"class": label, "source": source})
            if err:
                row["error"] = err
                rows.append(row)
                continue
            total, frag, resource, daas, half = _terms(source, obj, k)
            row.update(bp_total=_fmt(total), bp_frag=_fmt(frag), bp_resource=_fmt(resource),
                       bp_daas=_fmt(daas), ci_half_width=_fmt(half))
            if source == "analytic":
                row["n_states"] = str(obj.n_states)
            base_obj = None if baseline is None else getattr(baseline, source)
            if base_obj is not None:
                row["gain_total"] = _fmt(_terms(source, base_obj, k)[0] - total)
            rows.append(row)
    return rows


def rows_to_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def write_csv(rows: Iterable[dict], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))


def read_csv(path: str | os.PathLike) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def failed(rows: Iterable[dict]) -> bool:
    return any(r["error"] for r in rows)
