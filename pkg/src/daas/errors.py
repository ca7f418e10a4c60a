"""Exception types raised by the daas package."""


class ScenarioError(ValueError):
    """Invalid scenario, plan or configuration input."""


class StateSpaceTooLarge(RuntimeError):
    def __init__(self, cap: int, reached: int):
        super().__init__(
            f"state space too large: more than {cap} sparse entries "
            f"(reached {reached}); raise max_entries to proceed"
        )
        self.cap = cap
        self.reached = reached


class ConsistencyError(RuntimeError):
    """Enumeration and generator assembly disagree (internal bug)."""


class ReducibleChainError(RuntimeError):
    """The generator has more than one communicating class."""


class NumericalFailure(RuntimeError):
    def __init__(self, message: str, state_index: int | None = None):
        super().__init__(message)
        self.state_index = state_index
