"""
Independent reference computations used to check the main model.

Nothing here imports the CTMC builder or the solver. The slot-bitmap model
describes a link as one entry per slot (``None`` for free, else
``(call_number, class)``) and re-derives placements, departures and
fragmentation directly from that picture.
"""

from __future__ import annotations

from math import comb
from typing import Optional, Sequence

from daas.linkstate import Scenario, SpectrumState

Bitmap = tuple[Optional[tuple[int, int]], ...]


def erlang_b(servers: int, load: float) -> float:
    """Erlang-B blocking via the stable recursion B(n) = aB(n-1) / (n + aB(n-1))."""
    b = 1.0
    for n in range(1, servers + 1):
        b = load * b / (n + load * b)
    return b


def count_states(capacity: int, demands: Sequence[int]) -> int:
    """Number of (call sequence, gap vector) patterns on a link.

    Sums, over call sequences with total demand D and n calls, the number of
    ways to split the C - D free slots into n + 1 ordered gaps.
    """
    # sequences[(n, D)] = number of ordered class sequences with n calls and total demand D
    sequences = {(0, 0): 1}
    frontier = dict(sequences)
    while frontier:
        nxt: dict[tuple[int, int], int] = {}
        for (n, used), ways in frontier.items():
            for d in demands:
                if used + d <= capacity:
                    key = (n + 1, used + d)
                    nxt[key] = nxt.get(key, 0) + ways
        for key, ways in nxt.items():
            sequences[key] = sequences.get(key, 0) + ways
        frontier = nxt
    return sum(ways * comb(capacity - used + n, n) for (n, used), ways in sequences.items())


def count_compact_states(capacity: int, demands: Sequence[int]) -> int:
    """Number of distinct call sequences that fit (one compact pattern each)."""
    total = 0
    counts = {0: 1}
    for used in range(capacity + 1):
        ways = counts.get(used, 0)
        total += ways
        for d in demands:
            if used + d <= capacity:
                counts[used + d] = counts.get(used + d, 0) + ways
    return total


def to_bitmap(state: SpectrumState, scenario: Scenario) -> Bitmap:
    slots: list[Optional[tuple[int, int]]] = [None] * state.gaps[0]
    for i, k in enumerate(state.calls):
        slots.extend([(i, k)] * scenario.classes[k].demand)
        slots.extend([None] * state.gaps[i + 1])
    return tuple(slots)


def from_bitmap(bitmap: Bitmap) -> SpectrumState:
    calls, gaps = [], [0]
    prev = None
    for cell in bitmap:
        if cell is None:
            gaps[-1] += 1
        elif cell != prev:
            calls.append(cell[1])
            gaps.append(0)
        prev = cell
    return SpectrumState(tuple(calls), tuple(gaps))


def renumber(bitmap: Bitmap) -> Bitmap:
    """Relabel calls 0, 1, 2, ... from left to right."""
    mapping: dict[int, int] = {}
    out = []
    for cell in bitmap:
        if cell is None:
            out.append(None)
        else:
            mapping.setdefault(cell[0], len(mapping))
            out.append((mapping[cell[0]], cell[1]))
    return tuple(out)


def bitmap_starts(bitmap: Bitmap, demand: int) -> list[int]:
    """Every start slot whose next ``demand`` slots are all free."""
    return [s for s in range(len(bitmap) - demand + 1)
            if all(c is None for c in bitmap[s:s + demand])]


def bitmap_place(bitmap: Bitmap, start: int, k: int, demand: int) -> Bitmap:
    new_id = 1 + max((c[0] for c in bitmap if c is not None), default=-1)
    cells = list(bitmap)
    for s in range(start, start + demand):
        assert cells[s] is None
        cells[s] = (new_id, k)
    return renumber(tuple(cells))


def bitmap_remove(bitmap: Bitmap, call_number: int) -> Bitmap:
    return renumber(tuple(None if c is not None and c[0] == call_number else c for c in bitmap))


def bitmap_fragmentation_blocked(bitmap: Bitmap, demand: int) -> bool:
    free = sum(c is None for c in bitmap)
    return free >= demand and not bitmap_starts(bitmap, demand)


def all_bitmaps(capacity: int, demands: Sequence[int]) -> list[Bitmap]:
    """Every slot layout, built slot by slot (free, or start a call of some class)."""
    out: list[Bitmap] = []

    def grow(prefix: list, n_calls: int):
        if len(prefix) == capacity:
            out.append(tuple(prefix))
            return
        grow(prefix + [None], n_calls)
        for k, d in enumerate(demands):
            if len(prefix) + d <= capacity:
                grow(prefix + [(n_calls, k)] * d, n_calls + 1)

    grow([], 0)
    return out


def bitmap_compact(bitmap: Bitmap) -> Bitmap:
    """Slide every occupied slot to the left end, keeping call order."""
    used = [c for c in bitmap if c is not None]
    return tuple(used) + (None,) * (len(bitmap) - len(used))
