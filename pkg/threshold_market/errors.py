"""Exception hierarchy for Threshold Market.

Every error raised on purpose by the package derives from :class:`MarketError`
and carries the process exit code the CLI reports for it.
"""

from __future__ import annotations

from typing import Optional, Sequence


class MarketError(Exception):
    """Base class for all expected failures."""

    exit_code = 1

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message
        self.stage: Optional[str] = None
        self.replica: Optional[int] = None

    def annotate(self, stage: str, replica: Optional[int] = None) -> "MarketError":
        """Record the experiment stage (and replica) where the error surfaced."""
        if self.stage is None:
            self.stage = stage
            self.replica = replica
        return self

    def __str__(self) -> str:
        if self.stage is None:
            return self.message
        where = f"stage '{self.stage}'"
        if self.replica is not None:
            where = f"replica {self.replica}, {where}"
        return f"[{where}] {self.message}"


class ConfigError(MarketError):
    """Invalid or unparsable configuration.

    Attributes:
        violations: One entry per failed constraint, each naming the dotted
            parameter and the constraint (``model.lambda: lambda > 0``).
    """

    exit_code = 2

    def __init__(self, violations: Sequence[str] | str):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class InsufficientEventsError(MarketError):
    """Too few loss events (or interoccurrence samples) for the requested step."""

    exit_code = 3

    def __init__(self, count: int, required: int, what: str = "loss events"):
        self.count = count
        self.required = required
        self.what = what
        super().__init__(f"insufficient events: {count} {what}, need at least {required}")

    def __reduce__(self):
        return (self.__class__, (self.count, self.required, self.what), self.__dict__)


class InsufficientHistoryError(MarketError):
    """Magnetization history shorter than the price-series window requires."""


class CalibrationError(MarketError):
    """No loss threshold achieves the requested mean interoccurrence time."""


class FitError(MarketError):
    """The q-exponential fit could not be carried out."""


class DomainError(MarketError, ValueError):
    """A formula was evaluated outside its domain."""
