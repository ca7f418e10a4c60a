"""
Blocking probabilities from the stationary distribution.

Poisson arrivals see time averages, so the probability that a class-k
request is blocked equals the stationary mass of the states in which it
would be blocked. That mass splits into three disjoint parts:

* fragmentation: enough free slots overall, but no gap of ``d_k`` slots;
* resource: fewer than ``d_k`` free slots;
* DaaS: the link is being defragmented (every class is blocked).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from daas.ctmc import StateSpace
from daas.errors import ScenarioError
from daas.linkstate import ClassSpec, Policy, Scenario, fragmentation_blocked, resource_blocked

ARRIVAL_WEIGHTED = "arrival"
UNIFORM_WEIGHTED = "uniform"


@dataclass(frozen=True)
class BlockingTerms:
    frag: float
    resource: float
    daas: float

    @property
    def total(self) -> float:
        return self.frag + self.resource + self.daas


@dataclass(frozen=True)
class BlockingReport:
    per_class: tuple[BlockingTerms, ...]
    overall: BlockingTerms
    load_erlang: float
    policy: Policy
    defrag_rate: float
    capacity: int = 0
    demands: tuple[int, ...] = ()
    n_states: int = 0
    weighting: str = ARRIVAL_WEIGHTED


def class_weights(scenario: Scenario, weighting: str = ARRIVAL_WEIGHTED) -> list[float]:
    if weighting == ARRIVAL_WEIGHTED:
        total = math.fsum(c.arrival_rate for c in scenario.classes)
        return [c.arrival_rate / total for c in scenario.classes]
    if weighting == UNIFORM_WEIGHTED:
        return [1.0 / scenario.num_classes] * scenario.num_classes
    raise ValueError(f"unknown class weighting {weighting!r}")


def combine(terms: Sequence[BlockingTerms], weights: Sequence[float]) -> BlockingTerms:
    return BlockingTerms(
        frag=math.fsum(w * t.frag for w, t in zip(weights, terms)),
        resource=math.fsum(w * t.resource for w, t in zip(weights, terms)),
        daas=math.fsum(w * t.daas for w, t in zip(weights, terms)),
    )


def blocking_report(space: StateSpace, pi, scenario: Scenario,
                    weighting: str = ARRIVAL_WEIGHTED) -> BlockingReport:
    probs = np.asarray(getattr(pi, "probabilities", pi), dtype=float)
    if probs.shape != (space.dimension,):
        raise ValueError(f"pi has shape {probs.shape}, state space has {space.dimension} states")
    normal = probs[:space.n_normal].tolist()
    daas = math.fsum(probs[space.n_normal:].tolist())
    per_class = []
    for k in range(scenario.num_classes):
        frag = math.fsum(p for s, p in zip(space.normal_states, normal)
                         if fragmentation_blocked(s, k, scenario))
        resource = math.fsum(p for s, p in zip(space.normal_states, normal)
                             if resource_blocked(s, k, scenario))
        per_class.append(BlockingTerms(frag, resource, daas))
    return BlockingReport(
        per_class=tuple(per_class),
        overall=combine(per_class, class_weights(scenario, weighting)),
        load_erlang=scenario.load_erlang,
        policy=scenario.policy,
        defrag_rate=scenario.defrag_rate,
        capacity=scenario.capacity,
        demands=scenario.demands,
        n_states=space.dimension,
        weighting=weighting,
    )


def arrival_rates_for_load(load_erlang: float, demands: Sequence[int],
                           service_rates: Sequence[float] | float = 1.0) -> list[float]:
    """Equal per-class arrival rate giving the requested offered load.

    ``load = sum_k lambda * d_k / mu_k``, so ``lambda = load / sum_k d_k / mu_k``.
    """
    if not load_erlang > 0:
        raise ScenarioError(f"load must be positive, got {load_erlang!r}")
    mu = [service_rates] * len(demands) if isinstance(service_rates, (int, float)) else list(service_rates)
    lam = load_erlang / math.fsum(d / m for d, m in zip(demands, mu))
    return [lam] * len(demands)


def scenario_at_load(template: Scenario, load_erlang: float) -> Scenario:
    lam = arrival_rates_for_load(load_erlang, template.demands,
                                 [c.service_rate for c in template.classes])
    classes = tuple(ClassSpec(c.demand, l, c.service_rate) for c, l in zip(template.classes, lam))
    return template.replace(classes=classes)


@dataclass(frozen=True)
class Gain:
    per_class: tuple[float, ...]
    overall: float


def daas_gain(without: BlockingReport, with_daas: BlockingReport) -> Gain:
    """Blocking without DaaS minus blocking with it; positive means DaaS helps."""
    if without.defrag_rate != 0:
        raise ScenarioError("baseline report must have defrag rate 0")
    if (without.policy is not with_daas.policy or without.capacity != with_daas.capacity
            or without.demands != with_daas.demands or without.load_erlang != with_daas.load_erlang):
        raise ScenarioError("gain needs reports for the same capacity, classes, load and policy")
    return Gain(
        per_class=tuple(a.total - b.total for a, b in zip(without.per_class, with_daas.per_class)),
        overall=without.overall.total - with_daas.overall.total,
    )
