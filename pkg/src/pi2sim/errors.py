"""Exception types raised across the simulator."""


class RejectedInputError(ValueError):
    """An operation received an argument that violates its preconditions."""


class ConfigError(ValueError):
    """A configuration file, sequence table or profile is invalid or missing."""


class GoldenMismatchError(AssertionError):
    """Golden-vector regression found a value outside tolerance."""
