"""Exception types shared by the package."""


class SolitonGasError(ValueError):
    """Base class for all errors raised by solitongas."""


class PoleError(SolitonGasError):
    """A rational factor hit (or came too close to) a pole."""


class TruncationError(SolitonGasError):
    """A time index beyond the truncation order was requested."""


class SizeError(SolitonGasError):
    """Exact enumeration was requested for too many sites."""


class CoincidenceError(SolitonGasError):
    """Two points coincide where distinct points are required."""


class DomainError(SolitonGasError):
    """A point lies outside the admissible region of a geometry."""


class ModeError(SolitonGasError):
    """Times violate the reality constraints of real-potential mode."""


class RangeError(SolitonGasError):
    """An integer parameter is outside its allowed range."""


class UnsupportedError(SolitonGasError):
    """The requested method is not available for this object."""


class ContourError(SolitonGasError):
    """A contour radius crosses a pole of the integrand."""


class NonConvergence(SolitonGasError):
    """A refinement sequence failed to stabilise."""


class DegenerateError(SolitonGasError):
    """A tau value vanished inside a finite-difference stencil."""


class RankWarning(UserWarning):
    """Moment matrix is rank deficient; the determinant is exactly zero."""
