"""Blocking analysis of Defragmentation-as-a-Service on a single elastic optical link."""

from daas.ctmc import GeneratorMatrix, StateSpace, build, build_generator, enumerate_states, gbe_residual
from daas.linkstate import ClassSpec, Policy, Scenario, SpectrumState, make_scenario
from daas.metrics import BlockingReport, arrival_rates_for_load, blocking_report, daas_gain, scenario_at_load
from daas.sim import BlockingEstimate, SimConfig, simulate
from daas.solver import StationaryDistribution, solve_stationary

__version__ = "0.1.0"

__all__ = [
    "BlockingEstimate", "BlockingReport", "ClassSpec", "GeneratorMatrix", "Policy", "Scenario",
    "SimConfig", "SpectrumState", "StateSpace", "StationaryDistribution", "arrival_rates_for_load",
    "blocking_report", "build", "build_generator", "daas_gain", "enumerate_states", "gbe_residual",
    "make_scenario", "scenario_at_load", "simulate", "solve_stationary",
]
