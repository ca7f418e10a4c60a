"""
Spectrum occupancy of a single elastic optical link.

A link has ``capacity`` contiguous frequency slots. Each admitted call of
class ``k`` holds ``demand`` adjacent slots. The canonical state records the
left-to-right sequence of call classes together with the free-slot run
lengths before, between and after the occupied blocks::

    calls = (0, 0)        gaps = (1, 0, 1)      ->  ".AAaa."  (C=6, d=2)

Two neighbouring calls of the same class are still two calls (the gap
between them may be 0), since each departs on its own.

All values here are immutable and all functions are pure.
"""

from __future__ import annotations

import enum
import string
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from daas.errors import ScenarioError


class Policy(enum.Enum):
    FIRST_FIT = "first_fit"
    RANDOM_FIT = "random_fit"

    @property
    def short(self) -> str:
        return "FF" if self is Policy.FIRST_FIT else "RF"

    @classmethod
    def parse(cls, value: "str | Policy") -> "Policy":
        if isinstance(value, Policy):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"ff": "first_fit", "firstfit": "first_fit", "rf": "random_fit", "randomfit": "random_fit"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ScenarioError(f"unknown allocation policy {value!r}") from None


@dataclass(frozen=True)
class ClassSpec:
    """One traffic class: slot demand, arrival rate and service rate."""

    demand: int
    arrival_rate: float
    service_rate: float = 1.0

    def __post_init__(self):
        if int(self.demand) != self.demand or self.demand < 1:
            raise ScenarioError(f"class demand must be a positive integer, got {self.demand!r}")
        if not self.arrival_rate > 0:
            raise ScenarioError(f"arrival rate must be positive, got {self.arrival_rate!r}")
        if not self.service_rate > 0:
            raise ScenarioError(f"service rate must be positive, got {self.service_rate!r}")


@dataclass(frozen=True)
class Scenario:
    """Complete model input for one link.

    ``defrag_rate == 0`` describes the regular system without
    defragmentation: no DaaS states exist and fragmentation-blocked calls
    are simply lost.
    """

    capacity: int
    classes: tuple[ClassSpec, ...]
    defrag_rate: float = 0.0
    policy: Policy = Policy.RANDOM_FIT

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "policy", Policy.parse(self.policy))
        if int(self.capacity) != self.capacity or self.capacity < 1:
            raise ScenarioError(f"capacity must be a positive integer, got {self.capacity!r}")
        if not self.classes:
            raise ScenarioError("scenario needs at least one traffic class")
        if max(c.demand for c in self.classes) > self.capacity:
            raise ScenarioError(
                f"capacity {self.capacity} is smaller than the largest demand "
                f"{max(c.demand for c in self.classes)}"
            )
        if not self.defrag_rate >= 0:
            raise ScenarioError(f"defrag rate must be nonnegative, got {self.defrag_rate!r}")

    @property
    def demands(self) -> tuple[int, ...]:
        return tuple(c.demand for c in self.classes)

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    @property
    def daas_enabled(self) -> bool:
        return self.defrag_rate > 0

    @property
    def load_erlang(self) -> float:
        return sum(c.arrival_rate * c.demand / c.service_rate for c in self.classes)

    def replace(self, **changes) -> "Scenario":
        fields = dict(capacity=self.capacity, classes=self.classes,
                      defrag_rate=self.defrag_rate, policy=self.policy)
        fields.update(changes)
        return Scenario(**fields)


@dataclass(frozen=True, order=True)
class SpectrumState:
    calls: tuple[int, ...]
    gaps: tuple[int, ...]

    @classmethod
    def empty(cls, capacity: int) -> "SpectrumState":
        return cls((), (capacity,))

    @property
    def free_slots(self) -> int:
        return sum(self.gaps)

    @property
    def max_gap(self) -> int:
        return max(self.gaps)

    def count(self, k: int) -> int:
        """Number of class-``k`` calls on the link."""
        return self.calls.count(k)

    def sort_key(self) -> tuple:
        return (len(self.calls), self.calls, self.gaps)

    def check(self, scenario: Scenario) -> None:
        if len(self.gaps) != len(self.calls) + 1:
            raise AssertionError(f"{self}: need len(gaps) == len(calls) + 1")
        if any(g < 0 for g in self.gaps):
            raise AssertionError(f"{self}: negative gap")
        used = sum(scenario.classes[k].demand for k in self.calls)
        if used + self.free_slots != scenario.capacity:
            raise AssertionError(f"{self}: slots do not add up to capacity {scenario.capacity}")


class Placement(NamedTuple):
    gap: int
    offset: int
    start: int
    length: int


def placements(state: SpectrumState, k: int, scenario: Scenario) -> list[Placement]:
    """Positions where a class-``k`` call can be admitted, by start slot.

    Random fit sees every contiguous position inside a single gap (the
    count is ``a(S, k)``); first fit sees only the lowest one.
    """
    d = scenario.classes[k].demand
    found = []
    pos = 0
    for i, g in enumerate(state.gaps):
        for offset in range(g - d + 1):
            found.append(Placement(i, offset, pos + offset, d))
            if scenario.policy is Policy.FIRST_FIT:
                return found
        if i < len(state.calls):
            pos += g + scenario.classes[state.calls[i]].demand
    return found


def apply_placement(state: SpectrumState, k: int, placement: Placement) -> SpectrumState:
    i, offset, _, d = placement
    if not (0 <= i < len(state.gaps)) or offset < 0 or offset + d > state.gaps[i]:
        raise AssertionError(f"placement {placement} does not fit in {state}")
    g = state.gaps[i]
    calls = state.calls[:i] + (k,) + state.calls[i:]
    gaps = state.gaps[:i] + (offset, g - offset - d) + state.gaps[i + 1:]
    return SpectrumState(calls, gaps)


def remove_call(state: SpectrumState, position: int, scenario: Scenario) -> SpectrumState:
    """Release the call at ``position``; its flanking gaps merge."""
    if not 0 <= position < len(state.calls):
        raise AssertionError(f"no call at position {position} in {state}")
    d = scenario.classes[state.calls[position]].demand
    merged = state.gaps[position] + d + state.gaps[position + 1]
    calls = state.calls[:position] + state.calls[position + 1:]
    gaps = state.gaps[:position] + (merged,) + state.gaps[position + 2:]
    return SpectrumState(calls, gaps)


def resource_blocked(state: SpectrumState, k: int, scenario: Scenario) -> bool:
    return state.free_slots < scenario.classes[k].demand


def fragmentation_blocked(state: SpectrumState, k: int, scenario: Scenario) -> bool:
    """Enough free slots in total, but no single gap large enough."""
    d = scenario.classes[k].demand
    return state.free_slots >= d and state.max_gap < d


def compact(state: SpectrumState) -> SpectrumState:
    """Shift every call toward slot 0, keeping their order."""
    n = len(state.calls)
    return SpectrumState(state.calls, (0,) * n + (state.free_slots,))


def class_letter(k: int) -> str:
    return string.ascii_uppercase[k] if k < 26 else "?"


def render(state: SpectrumState, scenario: Scenario) -> str:
    """One character per slot: ``.`` free, class letter occupied.

    Successive calls alternate upper/lower case so that two touching calls
    of one class stay distinguishable (``AAaa`` vs ``AAAA`` for d=2, d=4).
    """
    out = ["." * state.gaps[0]]
    for i, k in enumerate(state.calls):
        letter = class_letter(k)
        out.append((letter if i % 2 == 0 else letter.lower()) * scenario.classes[k].demand)
        out.append("." * state.gaps[i + 1])
    return "".join(out)


def make_scenario(capacity: int, demands: Sequence[int], arrival_rates: Sequence[float] | float = 1.0,
                  service_rates: Sequence[float] | float = 1.0, defrag_rate: float = 0.0,
                  policy: "Policy | str" = Policy.RANDOM_FIT) -> Scenario:
    """Convenience constructor taking per-class sequences (or scalars)."""
    n = len(demands)
    lam = [arrival_rates] * n if isinstance(arrival_rates, (int, float)) else list(arrival_rates)
    mu = [service_rates] * n if isinstance(service_rates, (int, float)) else list(service_rates)
    if len(lam) != n or len(mu) != n:
        raise ScenarioError("demands, arrival rates and service rates must have equal length")
    classes = tuple(ClassSpec(int(d), float(a), float(m)) for d, a, m in zip(demands, lam, mu))
    return Scenario(int(capacity), classes, float(defrag_rate), Policy.parse(policy))
