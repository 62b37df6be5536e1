"""Exception hierarchy shared across the library."""

from __future__ import annotations


class GroupingError(Exception):
    """Base class for all errors raised by this package."""


class LengthMismatch(GroupingError):
    """Vector length differs from the configured slot count."""


class OutOfRange(GroupingError):
    """A slot value escaped the closed interval [0, 1]."""

    def __init__(self, index: int, value: float):
        super().__init__(f"slot {index} holds {value!r}, outside [0, 1]")
        self.index = index
        self.value = value


class EmptyRoster(GroupingError):
    """An operation over group members received an empty roster."""


class InvalidAlpha(GroupingError):
    """Tail order must be a positive integer."""


class InvalidParams(GroupingError):
    """Generator or simulation parameters violate their documented ranges."""


class NotAMember(GroupingError):
    """The named peer does not belong to the group's roster."""


class SizeExceeded(GroupingError):
    """A merge would push the roster past the configured maximum size."""


class StaleCandidate(GroupingError):
    """An invited group id no longer exists (it merged away)."""

    def __init__(self, group_id: int):
        super().__init__(f"group {group_id} has been retired")
        self.group_id = group_id


class NoConvergence(GroupingError):
    """The round cap was reached before a merge-free window appeared.

    The partial run results are attached so callers that tolerate
    non-convergence can still use them.
    """

    def __init__(self, metrics, max_rounds: int):
        super().__init__(f"no quiet window within {max_rounds} rounds")
        self.metrics = metrics
        self.max_rounds = max_rounds


class TopologyInfeasible(GroupingError):
    """The degree constraints cannot be satisfied for the population."""


class DegenerateSample(GroupingError):
    """Bin-width selection needs at least two values with nonzero spread."""


class EmptyInput(GroupingError):
    """A histogram cannot be built from an empty multiset."""


class ConfigMismatch(GroupingError):
    """Two runs are not comparable (different world seed or slot count)."""


class ConfigError(GroupingError):
    """A scenario or flag value is missing or malformed.

    Carries the offending key so the CLI can name it in the message.
    """

    def __init__(self, key: str, message: str):
        super().__init__(f"{message} (key: {key})")
        self.key = key
