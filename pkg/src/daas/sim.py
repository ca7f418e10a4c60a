"""
Monte-Carlo discrete-event simulation of one elastic optical link.

This does not use the CTMC code. The link is a boolean slot array, active
calls live in small parallel arrays, and the event loop runs in numba.

Event rules:

* Arrivals of class ``k`` form a Poisson stream of rate ``lambda_k``.
  Admitted calls hold their slots for an Exp(``mu_k``) time.
* An arrival is resource-blocked if fewer than ``d_k`` slots are free, and
  fragmentation-blocked if enough are free but no contiguous run of
  ``d_k`` exists. The blocked call is lost.
* With ``defrag_rate > 0``, a fragmentation-blocked arrival also starts a
  defragmentation period of length Exp(``mu_d``). All calls are shifted to
  slot 0 in their current order. For the whole period every arrival is
  DaaS-blocked, and every pending departure is postponed by the period
  length, so services freeze and then resume.

Randomness: replication ``r`` draws from
``numpy.random.Generator(PCG64(SeedSequence(base_seed, spawn_key=(r,))))``.
Each arrival gets one inter-arrival time, one class draw, one holding time,
one placement draw and one defragmentation length, in chunks. Counters are
therefore a pure function of ``(scenario, config, r)``.

Intervals are 95% Student-t across replications. When every replication
gives the same blocking fraction (typically zero blocked calls) the
t-interval has zero width, and an exact Clopper-Pearson interval on the
pooled counts is reported instead.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import stats

from daas.errors import ScenarioError
from daas.linkstate import Policy, Scenario

OFFERED, ADMITTED, FRAG, RESOURCE, DAAS_BLOCKED = range(5)
CHUNK = 1 << 18


@dataclass(frozen=True)
class SimConfig:
    scenario: Scenario
    measured_arrivals: int = 1_000_000
    replications: int = 5
    base_seed: int = 1
    warmup_arrivals: int | None = None
    audit: bool = False

    def __post_init__(self):
        if self.measured_arrivals < 10_000:
            raise ScenarioError("measured_arrivals must be at least 10000")
        if self.replications < 2:
            raise ScenarioError("need at least 2 replications for a confidence interval")
        if self.warmup_arrivals is not None and self.warmup_arrivals < 0:
            raise ScenarioError("warmup_arrivals must be nonnegative")

    @property
    def warmup(self) -> int:
        if self.warmup_arrivals is None:
            return self.measured_arrivals // 10
        return self.warmup_arrivals


@dataclass(frozen=True)
class Estimate:
    """Mean blocking over replications with a 95% t half-width on the total."""

    total: float
    frag: float
    resource: float
    daas: float
    half_width: float
    unreliable: bool = False


@dataclass(frozen=True)
class ReplicationResult:
    counts: np.ndarray            # (K, 5): offered, admitted, frag, resource, daas
    holding_sum: np.ndarray       # per class, over measured admitted calls
    holding_sq: np.ndarray
    violations: np.ndarray        # [departures inside a DF period, slot-count mismatches]


@dataclass(frozen=True)
class BlockingEstimate:
    per_class: tuple[Estimate, ...]
    overall: Estimate
    replications: int
    total_arrivals: int
    runs: tuple[ReplicationResult, ...] = field(repr=False, default=())

    def counts(self) -> np.ndarray:
        """Counters summed over replications, shape (K, 5)."""
        return sum(r.counts for r in self.runs)


def replication_rng(base_seed: int, replication: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(base_seed, spawn_key=(replication,))))


@numba.njit(cache=True, nogil=True)
def _compact(occ, c_start, c_len, n):
    order = np.argsort(c_start[:n])
    pos = 0
    for idx in order:
        c_start[idx] = pos
        pos += c_len[idx]
    occ[:] = False
    occ[:pos] = True


@numba.njit(cache=True, nogil=True)
def _run_chunk(demands, service, cum_class, random_fit, daas_on,
               inter, u_class, hold, u_place, df_len, measure,
               occ, c_start, c_len, c_cls, c_dep, clock, n_active,
               counts, h_sum, h_sq, violations, audit):
    capacity = occ.shape[0]
    n_classes = demands.shape[0]
    t = clock[0]
    n = n_active[0]
    for i in range(inter.shape[0]):
        t += inter[i]

        # departures due by now
        j = 0
        while j < n:
            if c_dep[j] <= t:
                if audit and c_dep[j] >= clock[2] and c_dep[j] < clock[1]:
                    violations[0] += 1
                for s in range(c_start[j], c_start[j] + c_len[j]):
                    occ[s] = False
                n -= 1
                c_start[j] = c_start[n]
                c_len[j] = c_len[n]
                c_cls[j] = c_cls[n]
                c_dep[j] = c_dep[n]
            else:
                j += 1

        k = 0
        while k < n_classes - 1 and u_class[i] >= cum_class[k]:
            k += 1
        d = demands[k]
        counted = measure[i]
        if counted:
            counts[k, 0] += 1

        if t < clock[1]:
            if counted:
                counts[k, 4] += 1
            continue

        free = 0
        fits = 0
        first = -1
        run = 0
        for s in range(capacity + 1):
            if s < capacity and not occ[s]:
                run += 1
                free += 1
            else:
                if run >= d:
                    if first < 0:
                        first = s - run
                    fits += run - d + 1
                run = 0

        if free < d:
            if counted:
                counts[k, 3] += 1
        elif fits == 0:
            if counted:
                counts[k, 2] += 1
            if daas_on:
                _compact(occ, c_start, c_len, n)
                clock[2] = t
                clock[1] = t + df_len[i]
                for m in range(n):
                    c_dep[m] += df_len[i]
        else:
            if random_fit:
                pick = int(u_place[i] * fits)
                if pick >= fits:
                    pick = fits - 1
                start = -1
                run = 0
                for s in range(capacity + 1):
                    if s < capacity and not occ[s]:
                        run += 1
                    else:
                        if run >= d and start < 0:
                            here = run - d + 1
                            if pick < here:
                                start = s - run + pick
                            else:
                                pick -= here
                        run = 0
            else:
                start = first
            for s in range(start, start + d):
                occ[s] = True
            duration = hold[i] / service[k]
            c_start[n] = start
            c_len[n] = d
            c_cls[n] = k
            c_dep[n] = t + duration
            n += 1
            if counted:
                counts[k, 1] += 1
                h_sum[k] += duration
                h_sq[k] += duration * duration

        if audit:
            used = 0
            for m in range(n):
                used += c_len[m]
            busy = 0
            for s in range(capacity):
                if occ[s]:
                    busy += 1
            if used != busy:
                violations[1] += 1
    clock[0] = t
    n_active[0] = n


def run_replication(config: SimConfig, replication: int) -> ReplicationResult:
    sc = config.scenario
    rng = replication_rng(config.base_seed, replication)
    demands = np.array(sc.demands, dtype=np.int64)
    service = np.array([c.service_rate for c in sc.classes])
    lam = np.array([c.arrival_rate for c in sc.classes])
    total_rate = float(lam.sum())
    cum_class = np.cumsum(lam) / total_rate
    k = sc.num_classes
    cap = sc.capacity

    occ = np.zeros(cap, dtype=np.bool_)
    c_start = np.zeros(cap, dtype=np.int64)
    c_len = np.zeros(cap, dtype=np.int64)
    c_cls = np.zeros(cap, dtype=np.int64)
    c_dep = np.zeros(cap)
    clock = np.array([0.0, -1.0, -1.0])     # now, DF end, DF start
    n_active = np.zeros(1, dtype=np.int64)
    counts = np.zeros((k, 5), dtype=np.int64)
    h_sum = np.zeros(k)
    h_sq = np.zeros(k)
    violations = np.zeros(2, dtype=np.int64)

    warmup = config.warmup
    total = warmup + config.measured_arrivals
    df_scale = 1.0 / sc.defrag_rate if sc.daas_enabled else 0.0
    done = 0
    while done < total:
        m = min(CHUNK, total - done)
        inter = rng.standard_exponential(m) / total_rate
        u_class = rng.random(m)
        hold = rng.standard_exponential(m)
        u_place = rng.random(m)
        df_len = rng.standard_exponential(m) * df_scale
        measure = np.arange(done, done + m) >= warmup
        _run_chunk(demands, service, cum_class, sc.policy is Policy.RANDOM_FIT, sc.daas_enabled,
                   inter, u_class, hold, u_place, df_len, measure,
                   occ, c_start, c_len, c_cls, c_dep, clock, n_active,
                   counts, h_sum, h_sq, violations, config.audit)
        done += m

    blocked = counts[:, ADMITTED] + counts[:, FRAG] + counts[:, RESOURCE] + counts[:, DAAS_BLOCKED]
    if not np.array_equal(blocked, counts[:, OFFERED]):
        raise AssertionError("simulation counters do not add up")
    return ReplicationResult(counts, h_sum, h_sq, violations)


def _estimate(offered: np.ndarray, frag: np.ndarray, resource: np.ndarray,
              daas: np.ndarray) -> Estimate:
    """Aggregate per-replication counters of one class (or of all classes)."""
    ok = offered > 0
    if not ok.any():
        return Estimate(0.0, 0.0, 0.0, 0.0, 0.0, unreliable=True)
    off = offered[ok].astype(float)
    f, r, d = frag[ok] / off, resource[ok] / off, daas[ok] / off
    tot = f + r + d
    n = len(tot)
    fm, rm, dm = math.fsum(f) / n, math.fsum(r) / n, math.fsum(d) / n
    if n < 2:
        half = math.inf
    elif np.ptp(tot) > 0:
        half = float(stats.t.ppf(0.975, n - 1) * np.std(tot, ddof=1) / math.sqrt(n))
    else:
        # identical replications (usually no blocking at all): the t-interval
        # collapses to a point, so use an exact binomial interval on the pooled counts
        events = int((frag[ok] + resource[ok] + daas[ok]).sum())
        trials = int(offered[ok].sum())
        lo = stats.beta.ppf(0.025, events, trials - events + 1) if events > 0 else 0.0
        hi = stats.beta.ppf(0.975, events + 1, trials - events) if events < trials else 1.0
        mean = events / trials
        half = float(max(hi - mean, mean - lo))
    return Estimate(fm + rm + dm, fm, rm, dm, half, unreliable=n < len(offered))


def aggregate(runs: list[ReplicationResult]) -> tuple[tuple[Estimate, ...], Estimate]:
    c = np.stack([r.counts for r in runs])          # (R, K, 5)
    per_class = tuple(
        _estimate(c[:, k, OFFERED], c[:, k, FRAG], c[:, k, RESOURCE], c[:, k, DAAS_BLOCKED])
        for k in range(c.shape[1])
    )
    s = c.sum(axis=1)
    overall = _estimate(s[:, OFFERED], s[:, FRAG], s[:, RESOURCE], s[:, DAAS_BLOCKED])
    return per_class, overall


def default_workers() -> int:
    env = os.environ.get("DAAS_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def simulate(config: SimConfig, workers: int | None = None) -> BlockingEstimate:
    """Run all replications and combine them into 95% t-intervals."""
    workers = default_workers() if workers is None else workers
    reps = range(config.replications)
    if workers > 1 and config.replications > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(lambda r: run_replication(config, r), reps))
    else:
        runs = [run_replication(config, r) for r in reps]
    per_class, overall = aggregate(runs)
    return BlockingEstimate(
        per_class=per_class,
        overall=overall,
        replications=config.replications,
        total_arrivals=config.replications * (config.warmup + config.measured_arrivals),
        runs=tuple(runs),
    )
