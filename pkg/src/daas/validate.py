"""Self-check suite: every model component against an independent oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy import stats

from daas import ctmc, oracles
from daas.linkstate import (
    Policy,
    Scenario,
    compact,
    fragmentation_blocked,
    make_scenario,
    placements,
    remove_call,
)
from daas.metrics import blocking_report, scenario_at_load
from daas.sim import SimConfig, simulate
from daas.solver import DIRECT, GTH, solve_stationary


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}" + (f"  ({self.detail})" if self.detail else "")


DEMAND_SETS = ((1,), (2,), (1, 2), (2, 3), (1, 3), (2, 2), (1, 2, 3))


def _scenario(capacity, demands, policy=Policy.RANDOM_FIT, defrag_rate=1.0) -> Scenario:
    return make_scenario(capacity, demands, [1.0 + 0.5 * i for i in range(len(demands))],
                         defrag_rate=defrag_rate, policy=policy)


def check_bitmap_equivalence(max_capacity: int = 8) -> Check:
    mismatches = 0
    examined = 0
    for capacity in range(1, max_capacity + 1):
        for demands in DEMAND_SETS:
            if max(demands) > capacity:
                continue
            sc = _scenario(capacity, demands)
            layouts = oracles.all_bitmaps(capacity, demands)
            if not ctmc.unit_demand(sc):
                if {oracles.from_bitmap(b) for b in layouts} != set(ctmc.enumerate_states(sc).normal_states):
                    mismatches += 1
            for bm in layouts:
                state = oracles.from_bitmap(bm)
                examined += 1
                if oracles.to_bitmap(state, sc) != bm:
                    mismatches += 1
                for k, d in enumerate(demands):
                    starts = oracles.bitmap_starts(bm, d)
                    if [p.start for p in placements(state, k, sc)] != starts:
                        mismatches += 1
                    if fragmentation_blocked(state, k, sc) != oracles.bitmap_fragmentation_blocked(bm, d):
                        mismatches += 1
                for pos in range(len(state.calls)):
                    if oracles.to_bitmap(remove_call(state, pos, sc), sc) != oracles.bitmap_remove(bm, pos):
                        mismatches += 1
    return Check(f"slot-bitmap equivalence (C <= {max_capacity})", mismatches == 0,
                 f"{examined} layouts, {mismatches} mismatches")


def _daas_oracle(capacity: int, demands) -> int:
    targets = set()
    for bm in oracles.all_bitmaps(capacity, demands):
        if any(oracles.bitmap_fragmentation_blocked(bm, d) for d in demands):
            targets.add(oracles.bitmap_compact(bm))
    return len(targets)


def check_enumeration_counts(max_capacity: int = 10) -> Check:
    bad = []
    for capacity in range(1, max_capacity + 1):
        for demands in DEMAND_SETS:
            if max(demands) > capacity:
                continue
            sc = _scenario(capacity, demands)
            space = ctmc.enumerate_states(sc)
            if ctmc.unit_demand(sc):
                want_n = math.comb(capacity + len(demands), len(demands))
            else:
                want_n = oracles.count_states(capacity, demands)
            want_d = _daas_oracle(capacity, demands)
            if (space.n_normal, space.n_daas) != (want_n, want_d):
                bad.append(f"C={capacity} d={demands}: got {space.n_normal}/{space.n_daas}, want {want_n}/{want_d}")
            ff = ctmc.enumerate_states(_scenario(capacity, demands, Policy.FIRST_FIT))
            if not set(ff.normal_states) <= set(space.normal_states):
                bad.append(f"C={capacity} d={demands}: first-fit space not inside random-fit space")
    return Check(f"state counts vs composition counting (C <= {max_capacity})", not bad, "; ".join(bad[:3]))


def check_fig1_structure() -> Check:
    sc = make_scenario(6, [2, 3], [1.0, 1.0], defrag_rate=1.0)
    space = ctmc.enumerate_states(sc)
    fb = [s for s in space.normal_states if fragmentation_blocked(s, 0, sc)]
    targets = {compact(s) for s in fb}
    ok = space.n_normal == 24 and space.n_daas == 3 and len(fb) == 3 and len(targets) == 1
    return Check("two-class C=6 structure (24 normal, 3 DaaS, |FB(1)|=3 -> 1 target)", ok,
                 f"N_SA={space.n_normal} N_D={space.n_daas} |FB(1)|={len(fb)} targets={len(targets)}")


def check_erlang_b(capacities=(5, 10, 20), loads=(1.0, 5.0, 15.0), tol: float = 1e-10) -> Check:
    worst = 0.0
    for c, load in product(capacities, loads):
        sc = make_scenario(c, [1], [load])
        space, q = ctmc.build(sc)
        rep = blocking_report(space, solve_stationary(q), sc)
        worst = max(worst, abs(rep.overall.total - oracles.erlang_b(c, load)))
    return Check("single-slot class matches Erlang-B", worst <= tol, f"max error {worst:.2e}, tol {tol:.0e}")


def _solver_scenarios():
    yield make_scenario(6, [2, 3], [1.0, 1.0], defrag_rate=1.0)
    yield make_scenario(10, [1], [5.0])
    template = make_scenario(20, [4, 6, 8], 1.0)
    for policy, mu_d, load in product(Policy, (0.0, 1.0, 10.0), (2.0, 8.0)):
        yield scenario_at_load(template.replace(policy=policy, defrag_rate=mu_d), load)


def check_solvers(tol_agree: float = 1e-9, tol_residual: float = 1e-10) -> Check:
    worst_gap = worst_res = worst_norm = 0.0
    negative = False
    for sc in _solver_scenarios():
        _, q = ctmc.build(sc)
        a = solve_stationary(q, GTH)
        b = solve_stationary(q, DIRECT)
        worst_gap = max(worst_gap, float(np.max(np.abs(a.probabilities - b.probabilities))))
        worst_res = max(worst_res, a.residual, b.residual)
        worst_norm = max(worst_norm, abs(math.fsum(a.probabilities) - 1.0))
        negative |= bool((a.probabilities < 0).any() or (b.probabilities < 0).any())
    ok = worst_gap <= tol_agree and worst_res <= tol_residual and worst_norm <= 1e-12 and not negative
    return Check("GTH vs direct solve, residuals, normalisation", ok,
                 f"max gap {worst_gap:.1e}, max residual {worst_res:.1e}, max |sum-1| {worst_norm:.1e}")


def check_sim_agreement(arrivals: int = 200_000, replications: int = 5, seed: int = 7,
                        level: float = 0.999) -> Check:
    """Analytic per-class totals inside a wide t-interval of a short simulation."""
    misses = []
    n = 0
    template = make_scenario(8, [2, 3], 1.0)
    tq = stats.t.ppf(0.5 + level / 2, replications - 1) / stats.t.ppf(0.975, replications - 1)
    for policy, mu_d in product(Policy, (0.0, 5.0)):
        sc = scenario_at_load(template.replace(policy=policy, defrag_rate=mu_d), 3.0)
        space, q = ctmc.build(sc)
        rep = blocking_report(space, solve_stationary(q), sc)
        est = simulate(SimConfig(sc, arrivals, replications, seed))
        for k, (a, e) in enumerate(zip(rep.per_class, est.per_class)):
            n += 1
            if abs(a.total - e.total) > tq * e.half_width:
                misses.append(f"{policy.short} mu_d={mu_d} class {k + 1}")
    return Check(f"analytic inside {level:.1%} simulation interval", not misses,
                 f"{n - len(misses)}/{n} inside" + (": " + ", ".join(misses) if misses else ""))


def run_validation(max_capacity: int = 8, sim_arrivals: int = 200_000) -> list[Check]:
    return [
        check_fig1_structure(),
        check_bitmap_equivalence(max_capacity),
        check_enumeration_counts(max_capacity + 2),
        check_erlang_b(),
        check_solvers(),
        check_sim_agreement(sim_arrivals),
    ]
