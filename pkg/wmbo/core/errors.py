"""Exception hierarchy for the threshold-dynamics toolkit."""

from typing import Optional


class WmboError(Exception):
    """Base class for all errors raised by wmbo."""


class GridError(WmboError, ValueError):
    """Invalid discretization (n not a power of two, non-positive side length)."""


class KernelEvaluationError(WmboError):
    """Quadrature or series evaluation of the kernel did not reach its tolerance."""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class ZeroScanError(WmboError):
    """The sign-change scan ran out of range before finding enough zeros."""

    def __init__(self, message: str, r_max: float):
        super().__init__(message)
        self.r_max = r_max


class NoClosedFormError(WmboError):
    """The requested moment has no tabulated closed form."""


class OracleResolutionError(WmboError):
    """Grid refinement changed the oracle value by more than the tolerance."""

    def __init__(self, message: str, coarse: float, fine: float):
        super().__init__(message)
        self.coarse = coarse
        self.fine = fine


class SymmetryViolationError(WmboError):
    """An inverse transform produced a field with a significant imaginary part."""

    def __init__(self, message: str, residue: float):
        super().__init__(message)
        self.residue = residue


class CurveTopologyError(WmboError):
    """A contour could not be closed, or a closed curve was required."""


class RequiresResamplingError(WmboError):
    """Curve vertices are not uniformly spaced along arclength."""


class RegimeError(WmboError):
    """A validation experiment ran outside the regime where its claim applies."""


class ClearanceWarning(UserWarning):
    """A shape comes too close to the periodic seam of the domain."""
