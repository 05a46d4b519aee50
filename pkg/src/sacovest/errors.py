"""Exception types raised across the package."""


class SacovestError(Exception):
    """Base class for all package errors."""


class SingularMatrix(SacovestError):
    """A linear solve hit a pivot below the singularity tolerance."""


class NonConvergence(SacovestError):
    """An iterative routine failed to stabilize within its iteration cap."""


class NotPositiveDefinite(SacovestError):
    """Cholesky factorization hit a nonpositive pivot."""


class InvalidBounds(SacovestError):
    """Box bounds with lo > hi on some coordinate."""


class InfeasibleInput(SacovestError):
    """A point violates the problem domain beyond tolerance."""


class StrictComplementarityViolated(SacovestError):
    """Problem parameters put a gradient entry on the kink boundary."""


class NumericalDivergence(SacovestError):
    """Iterates blew past the divergence threshold (bad stepsize)."""


class EmptyState(SacovestError):
    """Finalizing an estimator that has seen no data."""


class EmptySequence(SacovestError):
    """Direct estimator called on an empty sequence."""


class OutOfDomain(SacovestError):
    """Scalar function argument outside its open domain."""


class DegenerateDirection(SacovestError):
    """Quadratic form v'Sv negative beyond tolerance or nonpositive where positivity is required."""


class NotOrthonormal(SacovestError):
    """Tangent basis fails the orthonormality check."""


class InsufficientPoints(SacovestError):
    """Regression asked for with fewer than two points."""


class NonPositiveValue(SacovestError):
    """Log-log fit given a nonpositive coordinate."""


class InvalidReps(SacovestError):
    """Replication count must be at least one."""


class ParseError(SacovestError):
    """Config file is not well-formed."""


class ValidationError(SacovestError):
    """Config violates a constraint; message names it."""


class IoError(SacovestError):
    """Report emission failed; message carries the path."""
