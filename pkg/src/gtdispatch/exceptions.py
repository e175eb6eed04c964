"""Exception types raised across the package."""


class GtDispatchError(Exception):
    """Base class for all package errors."""


class DomainError(GtDispatchError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConfigurationError(GtDispatchError, ValueError):
    """A scenario, environment or experiment is configured inconsistently."""


class UsageError(GtDispatchError, RuntimeError):
    """An object was used in the wrong lifecycle state (e.g. step after done)."""


class ScenarioParseError(GtDispatchError, ValueError):
    """A scenario CSV row could not be parsed."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}, line {line}: {message}")


class AlignmentError(GtDispatchError, ValueError):
    """Scenario files do not cover the same hourly timestamps."""

    def __init__(self, timestamp, message):
        self.timestamp = timestamp
        super().__init__(f"{message} at {timestamp}")


class TrainingError(GtDispatchError, RuntimeError):
    """Training produced a non-finite loss or gradient."""
