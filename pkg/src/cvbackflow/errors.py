"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class CVError(Exception):
    """Base class for numerical and modelling errors raised by cvbackflow."""


class DimensionError(CVError, ValueError):
    """Matrix or mode-count mismatch."""


class InvariantError(CVError, ValueError):
    """A value object was built from data violating its invariants."""


class DomainError(CVError, ValueError):
    """An argument lies outside the domain of the operation."""


class SingularBlockError(CVError, ArithmeticError):
    """A block that must be inverted is numerically singular."""

    def __init__(self, message: str, singular_value: float):
        super().__init__(f"{message} (min singular value {singular_value:.3e})")
        self.singular_value = singular_value


class DegeneracyError(CVError, ArithmeticError):
    """Eigenvalues of i*Omega*M could not be paired into +/- couples."""


class NonInvertibleEvolutionError(SingularBlockError):
    """The earlier dynamical map has a singular T matrix."""


class DegenerateEvolutionError(CVError, ArithmeticError):
    """tau(t) <= 0, so the lossy-form criteria are undefined."""


class UnsupportedChannelError(CVError, ValueError):
    """The requested predicate is not available for this channel."""


class UnsupportedPartitionError(CVError, ValueError):
    """PPT is only a faithful entanglement test when one party has one mode."""


class UnsupportedFormError(CVError, ValueError):
    """A lossy-form predicate was requested for a non-lossy evolution."""


class InsufficientDataError(CVError, ValueError):
    """A trace is too short to analyse."""


class AccuracyError(CVError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, estimate: float, error_bound: float):
        super().__init__(f"{message}: estimate={estimate!r}, error bound={error_bound:.3e}")
        self.estimate = estimate
        self.error_bound = error_bound


class IntegrationError(CVError, ArithmeticError):
    """The ODE integrator failed."""


class ConsistencyError(CVError, ArithmeticError):
    """Two independent routes to the same quantity disagree."""


class ConfigError(CVError, ValueError):
    """Invalid experiment configuration; carries every violation found."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(self.violations))


class ExperimentError(CVError):
    """A numerical failure inside an experiment run, tagged with where it happened."""

    def __init__(self, scenario: str, where: str, cause: Exception):
        super().__init__(f"{scenario} [{where}]: {type(cause).__name__}: {cause}")
        self.scenario = scenario
        self.where = where
        self.cause = cause
