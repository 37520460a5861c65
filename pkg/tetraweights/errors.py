"""Exception hierarchy for tetraweights.

Every error raised by the library derives from ``TetraError``. Contract
violations (bad domains, shapes, orderings) are also ``ValueError`` so callers
that only know the standard library still catch them; numerical failures are
also ``ArithmeticError``.
"""

from typing import Optional


class TetraError(Exception):
    """Base class for all tetraweights errors."""


class InputValidationError(TetraError, ValueError):
    """An argument violates a documented precondition."""


class ConfigError(InputValidationError):
    """A job file or numerical configuration is malformed."""


class PreconditionError(InputValidationError):
    """A parameter relation required by an operation does not hold."""


class OutOfStrip(InputValidationError):
    """Argument of Phi_b lies outside the strip |Im z| < (b + 1/b)/2."""


class NotInA(InputValidationError):
    """Angle triple is not in the open simplex of positive angles summing to pi."""


class NotInDomain(InputValidationError):
    """Six spectral parameters fail the inequalities of the admissible domain."""


class Incompatible(InputValidationError):
    """Angle data cannot be completed to a valid pentagon quintuple."""


class OrderingViolated(InputValidationError):
    """Four spectral parameters are not strictly ordered within the window."""


class DimMismatch(InputValidationError):
    """Transfer matrices do not act on the same state space."""


class TooLarge(InputValidationError):
    """Requested configuration space exceeds the enumeration caps."""


class AngleDomainViolated(InputValidationError):
    """A lattice cube has spectral parameters outside s < t < u < pi + s."""

    def __init__(self, message: str, cube: Optional[tuple[int, int]] = None):
        super().__init__(message)
        self.cube = cube


class MissingEdge(TetraError, KeyError):
    """A gauge field has no value on a requested lattice edge."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "missing edge"


class NonConvergent(TetraError, ArithmeticError):
    """Truncated product did not reach its tolerance within max_terms."""


class PoleHit(TetraError, ArithmeticError):
    """A denominator factor came within the pole guard of zero."""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class QuadratureFailure(TetraError, ArithmeticError):
    """An integral could not be brought within its tolerance."""


class EvaluationError(TetraError, ArithmeticError):
    """A weight evaluation failed; ``location`` names the failing factor."""

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class DegenerateInstance(TetraError):
    """Both sides of an identity underflowed; the instance must be resampled."""
