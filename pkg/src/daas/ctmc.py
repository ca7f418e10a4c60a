"""
State-space enumeration and generator assembly.

Normal states are the spectrum patterns reachable from the empty link.
When defragmentation is enabled, every pattern that is the compaction of a
fragmentation-blocked state gets a companion DaaS state. Out of a normal
state ``S`` the chain has:

* arrivals: class ``k`` goes to each random-fit successor at rate
  ``lambda_k / a(S, k)``, or to the single first-fit successor at
  ``lambda_k``;
* departures: each call leaves at its class service rate (calls that lead
  to the same successor are summed);
* DaaS entry: for every class that is fragmentation-blocked in ``S``, rate
  ``lambda_k`` to the DaaS state of ``compact(S)``.

A DaaS state has a single exit, at rate ``mu_d``, to the normal state with
the same (compact) pattern. No arrival or departure leaves a DaaS state.

When every class needs a single slot, slot positions never influence any
transition, so states are lumped exactly to their sorted, compact form (one
state per vector of per-class call counts). This turns the 2**C positional
patterns of an M/M/C/C link back into its C + 1 occupancy levels.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from daas.errors import ConsistencyError, ReducibleChainError, StateSpaceTooLarge
from daas.linkstate import (
    Scenario,
    SpectrumState,
    apply_placement,
    compact,
    fragmentation_blocked,
    placements,
    remove_call,
    render,
)

DEFAULT_MAX_ENTRIES = 5_000_000

NORMAL = "normal"
DAAS = "daas"


@dataclass(frozen=True)
class StateSpace:
    normal_states: tuple[SpectrumState, ...]
    daas_states: tuple[SpectrumState, ...]
    normal_index: dict[SpectrumState, int] = field(repr=False, compare=False)
    daas_index: dict[SpectrumState, int] = field(repr=False, compare=False)

    @property
    def n_normal(self) -> int:
        return len(self.normal_states)

    @property
    def n_daas(self) -> int:
        return len(self.daas_states)

    @property
    def dimension(self) -> int:
        return self.n_normal + self.n_daas

    def index_of(self, state: SpectrumState, kind: str = NORMAL) -> int:
        """Global row/column index (normal block first, then DaaS block)."""
        if kind == NORMAL:
            return self.normal_index[state]
        return self.n_normal + self.daas_index[state]

    def state_at(self, index: int) -> tuple[str, SpectrumState]:
        if index < self.n_normal:
            return NORMAL, self.normal_states[index]
        return DAAS, self.daas_states[index - self.n_normal]


@dataclass(frozen=True)
class GeneratorMatrix:
    """Sparse CTMC generator; the diagonal is the negative off-diagonal row sum."""

    offdiag: sp.csr_matrix
    diagonal: np.ndarray

    @property
    def dimension(self) -> int:
        return self.offdiag.shape[0]

    @property
    def nnz(self) -> int:
        return self.offdiag.nnz + self.dimension

    def to_sparse(self) -> sp.csr_matrix:
        return (self.offdiag + sp.diags(self.diagonal)).tocsr()

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def rate(self, i: int, j: int) -> float:
        if i == j:
            return float(self.diagonal[i])
        return float(self.offdiag[i, j])

    def scaled(self, factor: float) -> "GeneratorMatrix":
        return GeneratorMatrix((self.offdiag * factor).tocsr(), self.diagonal * factor)


def unit_demand(scenario: Scenario) -> bool:
    return all(d == 1 for d in scenario.demands)


def _lump(state: SpectrumState) -> SpectrumState:
    return compact(SpectrumState(tuple(sorted(state.calls)), state.gaps))


def _normal_transitions(state: SpectrumState, scenario: Scenario) -> Iterator[tuple[str, SpectrumState, float]]:
    """Outgoing (kind, target, rate) triples of a normal state, unaggregated."""
    lump = _lump if unit_demand(scenario) else None
    for k, cls in enumerate(scenario.classes):
        spots = placements(state, k, scenario)
        if spots:
            if lump:
                yield NORMAL, lump(apply_placement(state, k, spots[0])), cls.arrival_rate
                continue
            rate = cls.arrival_rate / len(spots)
            for p in spots:
                yield NORMAL, apply_placement(state, k, p), rate
        elif scenario.daas_enabled and fragmentation_blocked(state, k, scenario):
            yield DAAS, compact(state), cls.arrival_rate
    for pos, k in enumerate(state.calls):
        target = remove_call(state, pos, scenario)
        yield NORMAL, lump(target) if lump else target, scenario.classes[k].service_rate


def enumerate_states(scenario: Scenario, max_entries: int = DEFAULT_MAX_ENTRIES) -> StateSpace:
    """Breadth-first closure of the reachable normal and DaaS states.

    Raises :class:`StateSpaceTooLarge` once the number of generated
    transitions exceeds ``max_entries``, and :class:`ReducibleChainError` if
    the reachable chain is not strongly connected.
    """
    start = SpectrumState.empty(scenario.capacity)
    order: list[tuple[str, SpectrumState]] = [(NORMAL, start)]
    seen = {(NORMAL, start): 0}
    edges: list[tuple[int, int]] = []
    queue = deque([(NORMAL, start)])
    while queue:
        node = queue.popleft()
        kind, state = node
        src = seen[node]
        if kind == NORMAL:
            targets = [(t_kind, t) for t_kind, t, _ in _normal_transitions(state, scenario)]
        else:
            targets = [(NORMAL, state)]
        for target in targets:
            if target not in seen:
                seen[target] = len(order)
                order.append(target)
                queue.append(target)
            edges.append((src, seen[target]))
        if len(edges) + len(order) > max_entries:
            raise StateSpaceTooLarge(max_entries, len(edges) + len(order))

    _check_strongly_connected(len(order), edges)
    normal = sorted((s for kind, s in order if kind == NORMAL), key=SpectrumState.sort_key)
    daas = sorted((s for kind, s in order if kind == DAAS), key=SpectrumState.sort_key)
    return StateSpace(
        normal_states=tuple(normal),
        daas_states=tuple(daas),
        normal_index={s: i for i, s in enumerate(normal)},
        daas_index={s: i for i, s in enumerate(daas)},
    )


def _check_strongly_connected(n: int, edges: list[tuple[int, int]]) -> None:
    if n == 1:
        return
    rows, cols = zip(*edges) if edges else ((), ())
    graph = sp.csr_matrix((np.ones(len(edges)), (rows, cols)), shape=(n, n))
    n_comp, _ = connected_components(graph, directed=True, connection="strong")
    if n_comp != 1:
        raise ReducibleChainError(f"reachable chain splits into {n_comp} communicating classes")


def build_generator(scenario: Scenario, space: StateSpace) -> GeneratorMatrix:
    rates: dict[tuple[int, int], float] = {}

    def add(i: int, kind: str, target: SpectrumState, rate: float):
        try:
            j = space.index_of(target, kind)
        except KeyError:
            raise ConsistencyError(f"successor {kind} {target} missing from the state space") from None
        if i == j:
            raise ConsistencyError(f"self-loop at state {i}")
        rates[i, j] = rates.get((i, j), 0.0) + rate

    for i, state in enumerate(space.normal_states):
        for kind, target, rate in _normal_transitions(state, scenario):
            add(i, kind, target, rate)
    for nu, state in enumerate(space.daas_states):
        add(space.n_normal + nu, NORMAL, state, scenario.defrag_rate)

    n = space.dimension
    if rates:
        (rows, cols), vals = zip(*rates.keys()), list(rates.values())
    else:
        rows, cols, vals = (), (), []
    offdiag = sp.csr_matrix((np.asarray(vals, dtype=float), (rows, cols)), shape=(n, n))
    offdiag.sort_indices()
    diagonal = -np.asarray(offdiag.sum(axis=1)).ravel()
    return GeneratorMatrix(offdiag, diagonal)


def build(scenario: Scenario, max_entries: int = DEFAULT_MAX_ENTRIES) -> tuple[StateSpace, GeneratorMatrix]:
    space = enumerate_states(scenario, max_entries)
    return space, build_generator(scenario, space)


def gbe_residual(q: GeneratorMatrix, pi: np.ndarray) -> float:
    """Largest absolute entry of ``pi Q``."""
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (q.dimension,):
        raise ValueError(f"pi has shape {pi.shape}, generator has dimension {q.dimension}")
    flow = q.offdiag.T @ pi + q.diagonal * pi
    return float(np.max(np.abs(flow))) if flow.size else 0.0


def dump_states(scenario: Scenario, space: StateSpace, q: GeneratorMatrix | None = None,
                edges: bool = False) -> str:
    """Plain-text table of states (and optionally edges) for inspection."""
    lines = ["index\tkind\tpattern\tcalls\tgaps"]
    for i in range(space.dimension):
        kind, state = space.state_at(i)
        calls = ",".join(str(k + 1) for k in state.calls)
        gaps = ",".join(map(str, state.gaps))
        lines.append(f"{i}\t{kind}\t{render(state, scenario)}\t{calls}\t{gaps}")
    if edges and q is not None:
        lines.append("")
        lines.append("from\tto\trate")
        coo = q.offdiag.tocoo()
        for i, j, r in sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())):
            lines.append(f"{i}\t{j}\t{r!r}")
    return "\n".join(lines) + "\n"

