"""Exception types shared across the package."""


class Z2KitError(Exception):
    """Base class for errors raised by z2kit."""


class NumericalFailure(Z2KitError):
    """A dense factorization failed or returned garbage."""


class RankDeficient(Z2KitError):
    """A matrix to be orthonormalized is (numerically) rank deficient.

    During transport this signals that a step was too large or that the
    spectral gap is closing.
    """


class NotSkew(Z2KitError):
    """A matrix expected to be skew-symmetric is not."""


class OddDimension(Z2KitError):
    """Pfaffian requested for an odd-dimensional matrix."""


class Aliasing(Z2KitError):
    """Adjacent phase increments too large to track a winding reliably.

    The caller must refine the sampling of the loop.
    """


class NonInteger(Z2KitError):
    """An accumulated phase failed to round to an integer winding."""


class CompatibilityViolated(Z2KitError):
    """A unitary does not commute with the skew form as required.

    Signals a discontinuous input frame or a symmetry-broken model.
    """


class TooFar(Z2KitError):
    """Two projectors at operator-norm distance >= 1; no intertwiner."""


class GapClosed(Z2KitError):
    """Spectral gap at or below threshold at some quasimomentum."""

    def __init__(self, message, k=None, gap=None):
        super().__init__(message)
        self.k = k
        self.gap = gap


class InvalidSpec(Z2KitError):
    """A model specification violates one of its invariants."""


class DegreeNonzero(Z2KitError):
    """A loop with nonzero determinant winding cannot be filled."""


class ContractionFailure(Z2KitError):
    """No pre-rotation keeping the column loop away from the bad circle."""


class LogBranch(Z2KitError):
    """A unitary has an eigenvalue too close to -1 for a principal log."""


class Obstructed(Z2KitError):
    """A symmetric frame was requested but the Z2 invariant is nonzero."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
