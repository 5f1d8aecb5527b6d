"""Exception classes shared across the package.

Each class maps to one CLI exit code (see ``isingdual.cli``).
"""


class ConfigError(ValueError):
    """Bad user input: malformed files, inconsistent dimensions, bad flags."""


class InfeasibleSizeError(ValueError):
    """An exhaustive computation was requested beyond its enumeration cap."""


class NumericalFailure(RuntimeError):
    """A solver or fit did not converge, or produced non-finite output."""


class InvariantViolation(ValueError):
    """A structural invariant (orthogonality, column weights, ...) is broken."""


class CosetEnumerationError(InfeasibleSizeError):
    """Todd-Coxeter did not close within the coset bound."""
