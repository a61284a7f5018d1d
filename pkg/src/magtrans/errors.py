"""Exception hierarchy shared by all modules."""


class MagtransError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(MagtransError, ValueError):
    """A configuration document is malformed or names an unknown key."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class ValidationError(ConfigError):
    """A configuration value violates a physical constraint."""


class DomainError(MagtransError, ValueError):
    """An input lies outside the domain of a formula."""


class SingularError(DomainError):
    """A closed-form denominator vanished."""

    def __init__(self, message, denominator=0.0, condition=None):
        super().__init__(message)
        self.denominator = denominator
        self.condition = condition


class NoCrossingError(DomainError):
    """The bracket given to the crossing finder contains no sign change."""


class DegenerateCrossingError(NoCrossingError):
    """The two level curves coincide, so no isolated crossing exists."""


class ConvergenceError(MagtransError, RuntimeError):
    """An iterative solver failed to reach its tolerance."""


class StepSizeError(DomainError):
    """The integration step violates the stability guard."""

    def __init__(self, message, suggested_dt):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class GridMismatchError(DomainError):
    """Two trajectories were sampled on different time grids."""


class OutputError(MagtransError, OSError):
    """Writing results to a sink failed."""
