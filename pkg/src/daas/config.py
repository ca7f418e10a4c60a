"""
Plan files.

A plan is a YAML mapping; every section and key is optional and falls back
to the 20-slot, three-class reference scenario::

    schema_version: 1
    scenario:
      capacity: 20
      classes:                     # arrival_rate is ignored when a load is given
        - {demand: 4, service_rate: 1.0}
        - {demand: 6, service_rate: 1.0}
        - {demand: 8, service_rate: 1.0}
      defrag_rate: 10              # solve / simulate only
      policy: random_fit           # solve / simulate only
      load: 6                      # solve / simulate only; equal arrival rates
    sweep:
      loads: [2, 3, 4, 5, 6, 7, 8]
      defrag_rates: [0, 1, 10]
      policies: [random_fit, first_fit]
      mode: analytic               # analytic | sim | both
    simulation:
      measured_arrivals: 1000000
      replications: 20
      base_seed: 1
      warmup_arrivals: null        # default: 10% of measured_arrivals
    solver:
      method: gth                  # gth | direct
      weighting: arrival           # arrival | uniform
      max_entries: 5000000
    output:
      csv: results.csv
      plot_dir: null
      plot_script: null

Command-line flags override file values.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from daas.ctmc import DEFAULT_MAX_ENTRIES
from daas.errors import ScenarioError
from daas.linkstate import ClassSpec, Policy, Scenario
from daas.metrics import ARRIVAL_WEIGHTED, UNIFORM_WEIGHTED
from daas.solver import DIRECT, GTH

SCHEMA_VERSION = 1
MODES = ("analytic", "sim", "both")

REFERENCE_DEMANDS = (4, 6, 8)
REFERENCE_LOADS = (2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0)
REFERENCE_DEFRAG_RATES = (0.0, 1.0, 10.0)


@dataclass(frozen=True)
class SimSettings:
    measured_arrivals: int = 1_000_000
    replications: int = 20
    base_seed: int = 1
    warmup_arrivals: int | None = None

    def __post_init__(self):
        if self.measured_arrivals < 10_000:
            raise ScenarioError("simulation needs at least 10000 measured arrivals")
        if self.replications < 2:
            raise ScenarioError("simulation needs at least 2 replications")
        if self.warmup_arrivals is not None and self.warmup_arrivals < 0:
            raise ScenarioError("warmup_arrivals must be nonnegative")


@dataclass(frozen=True)
class ExperimentPlan:
    template: Scenario
    loads: tuple[float, ...] = REFERENCE_LOADS
    defrag_rates: tuple[float, ...] = REFERENCE_DEFRAG_RATES
    policies: tuple[Policy, ...] = (Policy.RANDOM_FIT, Policy.FIRST_FIT)
    mode: str = "analytic"
    sim: SimSettings = field(default_factory=SimSettings)
    solver_method: str = GTH
    weighting: str = ARRIVAL_WEIGHTED
    max_entries: int = DEFAULT_MAX_ENTRIES
    load: float | None = None
    csv: str | None = None
    plot_dir: str | None = None
    plot_script: str | None = None

    def __post_init__(self):
        if not self.loads or not self.defrag_rates or not self.policies:
            raise ScenarioError("load, defrag-rate and policy grids must be nonempty")
        if any(not l > 0 for l in self.loads):
            raise ScenarioError("grid loads must be positive")
        if any(not r >= 0 for r in self.defrag_rates):
            raise ScenarioError("defrag rates must be nonnegative")
        if self.mode not in MODES:
            raise ScenarioError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.solver_method not in (GTH, DIRECT):
            raise ScenarioError(f"unknown solver method {self.solver_method!r}")
        if self.weighting not in (ARRIVAL_WEIGHTED, UNIFORM_WEIGHTED):
            raise ScenarioError(f"unknown weighting {self.weighting!r}")
        if self.load is not None and not self.load > 0:
            raise ScenarioError("load must be positive")

    def with_overrides(self, **changes) -> "ExperimentPlan":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def reference_template() -> Scenario:
    return Scenario(20, tuple(ClassSpec(d, 1.0, 1.0) for d in REFERENCE_DEMANDS),
                    defrag_rate=10.0, policy=Policy.RANDOM_FIT)


def _section(doc: dict, name: str) -> dict:
    value = doc.get(name)
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ScenarioError(f"section {name!r} must be a mapping")
    return value


def _floats(values: Any, what: str) -> tuple[float, ...]:
    if isinstance(values, (int, float)):
        values = [values]
    try:
        return tuple(float(v) for v in values)
    except (TypeError, ValueError):
        raise ScenarioError(f"{what} must be a list of numbers") from None


def plan_from_dict(doc: dict) -> ExperimentPlan:
    if not isinstance(doc, dict):
        raise ScenarioError("plan file must contain a mapping")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    unknown = set(doc) - {"schema_version", "scenario", "sweep", "simulation", "solver", "output"}
    if unknown:
        raise ScenarioError(f"unknown plan sections: {sorted(unknown)}")

    ref = reference_template()
    s = _section(doc, "scenario")
    try:
        classes = tuple(
            ClassSpec(int(c["demand"]), float(c.get("arrival_rate", 1.0)), float(c.get("service_rate", 1.0)))
            for c in s.get("classes", [])
        ) or ref.classes
        template = Scenario(
            capacity=int(s.get("capacity", ref.capacity)),
            classes=classes,
            defrag_rate=float(s.get("defrag_rate", ref.defrag_rate)),
            policy=Policy.parse(s.get("policy", ref.policy)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"bad scenario section: {exc}") from None

    sw = _section(doc, "sweep")
    sim = _section(doc, "simulation")
    solver = _section(doc, "solver")
    out = _section(doc, "output")
    defaults = SimSettings()
    warm = sim.get("warmup_arrivals")
    return ExperimentPlan(
        template=template,
        loads=_floats(sw.get("loads", REFERENCE_LOADS), "sweep.loads"),
        defrag_rates=_floats(sw.get("defrag_rates", REFERENCE_DEFRAG_RATES), "sweep.defrag_rates"),
        policies=tuple(Policy.parse(p) for p in sw.get("policies", ["random_fit", "first_fit"])),
        mode=str(sw.get("mode", "analytic")),
        sim=SimSettings(
            measured_arrivals=int(sim.get("measured_arrivals", defaults.measured_arrivals)),
            replications=int(sim.get("replications", defaults.replications)),
            base_seed=int(sim.get("base_seed", defaults.base_seed)),
            warmup_arrivals=None if warm is None else int(warm),
        ),
        solver_method=str(solver.get("method", GTH)),
        weighting=str(solver.get("weighting", ARRIVAL_WEIGHTED)),
        max_entries=int(solver.get("max_entries", DEFAULT_MAX_ENTRIES)),
        load=None if s.get("load") is None else float(s["load"]),
        csv=out.get("csv"),
        plot_dir=out.get("plot_dir"),
        plot_script=out.get("plot_script"),
    )


def load_plan(path: str | Path | None) -> ExperimentPlan:
    if path is None:
        return plan_from_dict({})
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read plan file {path}: {exc}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"plan file {path} is not valid YAML: {exc}") from None
    return plan_from_dict(doc or {})
