"""Exception types raised across the library.

Every failure mode that a caller is expected to branch on gets its own
class; everything derives from :class:`DeBrangesError` so batch drivers
can catch the lot.
"""

from __future__ import annotations


class DeBrangesError(Exception):
    """Base class for all library errors."""


class DomainError(DeBrangesError):
    """Input outside the operation's domain (non-finite point, a <= 0, ...)."""


class PreconditionError(DeBrangesError):
    """A stated precondition was violated (empty grid, wrong half-plane, ...)."""


class UnsupportedRepresentationError(DeBrangesError):
    """Model is outside the closed family an exact operation supports.

    Callers who genuinely need the value should fall back to
    :func:`debranges.spaces.quadrature_inner_product`.
    """


class QuadratureAccuracyError(DeBrangesError):
    """Adaptive quadrature could not reach the requested tolerance."""

    def __init__(self, message: str, best_estimate: complex, error_estimate: float):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


class NotAZeroError(DeBrangesError):
    """Asked to divide out a point that is not a zero of the function."""

    def __init__(self, message: str, value: complex):
        super().__init__(message)
        self.value = value


class CommonZeroError(DeBrangesError):
    """The subspace kernel vanishes at a point where it must not."""

    def __init__(self, message: str, points: tuple[complex, ...] = ()):
        super().__init__(message)
        self.points = tuple(points)


class EmptySubspaceError(DeBrangesError):
    """Operation requires a subspace of rank >= 1."""


class PoleIndicatorError(DeBrangesError):
    """F vanished where the quotient G*/F must be pole free."""


class NotUnimodularError(DeBrangesError):
    """Samples of U stray from the unit circle beyond tolerance."""


class AliasingError(DeBrangesError):
    """Phase jumps >= pi between adjacent samples; the grid is too coarse."""


class TypeEstimationError(DeBrangesError):
    """Growth-rate fit along the imaginary axis did not converge."""


class ExtractionInconsistentError(DeBrangesError):
    """Assembled function failed the Hermite-Biehler check."""


class InconsistentTypeError(DeBrangesError):
    """Recovered half-length exceeds the ambient scale."""


class ConfigError(DeBrangesError):
    """Configuration file is missing, malformed, or fails validation."""
