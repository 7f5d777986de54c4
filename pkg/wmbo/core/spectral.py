"""Fourier propagation on the periodic square and the thresholding step."""

import logging
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from scipy import fft

from wmbo.core.errors import SymmetryViolationError
from wmbo.models.fields import (
    GridSpec,
    IndicatorField,
    SchemeKind,
    SpectrumField,
    StepOutcome,
    StepStatus,
    ThresholdParams,
)

logger = logging.getLogger(__name__)

IMAG_DISCARD = 1e-10
IMAG_LIMIT = 1e-6


@lru_cache(maxsize=16)
def wavenumber_squared(grid: GridSpec, half: bool = False) -> np.ndarray:
    """
    |xi|^2 on the integer wavevector lattice in FFT storage order.

    Args:
        grid: The periodic grid.
        half: Return the rfft2 layout (last axis truncated to n/2 + 1).
    """
    k = fft.fftfreq(grid.n, d=1.0 / grid.n)
    kx = fft.rfftfreq(grid.n, d=1.0 / grid.n) if half else k
    k2 = k[:, None] ** 2 + kx[None, :] ** 2
    k2.setflags(write=False)
    return k2


def _multiplier(k2: np.ndarray, side_length: float, t: float, lam: float) -> np.ndarray:
    rate = 16.0 * np.pi**4 * k2**2 / side_length**4 + 4.0 * np.pi**2 * lam * k2 / side_length**2
    return np.exp(-rate * t)


def propagator_multiplier(grid: GridSpec, xi: Tuple[int, int], t: float, lam: float = 0.0) -> float:
    """exp(-(16 pi^4 |xi|^4 / L^4 + 4 pi^2 lambda |xi|^2 / L^2) t) for one integer wavevector."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    k2 = float(xi[0] ** 2 + xi[1] ** 2)
    return float(_multiplier(np.asarray(k2), grid.side_length, t, lam))


def semigroup_multiplier(grid: GridSpec, t: float, lam: float = 0.0, half: bool = False) -> np.ndarray:
    """Symbol of exp(-(Laplace^2 - lambda Laplace) t) on the whole wavevector lattice."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    return _multiplier(wavenumber_squared(grid, half), grid.side_length, t, lam)


def threshold_multiplier(grid: GridSpec, params: ThresholdParams, half: bool = False) -> np.ndarray:
    """Combined symbol of the threshold function: m(81a^4h) - 3m(16a^4h) + 3m(a^4h), or m(a^4h)."""
    k2 = wavenumber_squared(grid, half)
    base = params.a**4 * params.h
    if params.scheme is SchemeKind.SINGLE_SCALE:
        return _multiplier(k2, grid.side_length, base, params.lam)
    return (
        _multiplier(k2, grid.side_length, 81.0 * base, params.lam)
        - 3.0 * _multiplier(k2, grid.side_length, 16.0 * base, params.lam)
        + 3.0 * _multiplier(k2, grid.side_length, base, params.lam)
    )


def indicator_spectrum(ind: IndicatorField, workers: Optional[int] = None) -> SpectrumField:
    """Normalised forward transform; the xi = 0 coefficient is the area fraction."""
    n = ind.grid.n
    coeffs = fft.fft2(ind.values.astype(float), workers=workers) / n**2
    return SpectrumField(grid=ind.grid, coeffs=coeffs)


def field_from_spectrum(spec: SpectrumField, workers: Optional[int] = None) -> np.ndarray:
    """Inverse transform to a real field; raises if the imaginary residue is significant."""
    n = spec.grid.n
    values = fft.ifft2(spec.coeffs, workers=workers) * n**2
    residue = float(np.max(np.abs(values.imag))) if values.size else 0.0
    if residue > IMAG_LIMIT:
        raise SymmetryViolationError(f"inverse transform left imaginary residue {residue:.3e}", residue=residue)
    if residue > IMAG_DISCARD:
        logger.debug("discarding imaginary residue %.3e", residue)
    return np.ascontiguousarray(values.real)


def propagate(spec: SpectrumField, t: float, lam: float = 0.0, workers: Optional[int] = None) -> np.ndarray:
    """u(., t) for the semigroup exp(-(Laplace^2 - lambda Laplace) t) applied to the spectrum."""
    moved = SpectrumField(grid=spec.grid, coeffs=spec.coeffs * semigroup_multiplier(spec.grid, t, lam))
    return field_from_spectrum(moved, workers)


def threshold_field(spec0: SpectrumField, params: ThresholdParams, workers: Optional[int] = None) -> np.ndarray:
    """U(., h) assembled in a single spectral pass."""
    combined = spec0.coeffs * threshold_multiplier(spec0.grid, params)
    return field_from_spectrum(SpectrumField(grid=spec0.grid, coeffs=combined), workers)


def _real_pass(values: np.ndarray, multiplier: np.ndarray, workers: Optional[int]) -> np.ndarray:
    n = values.shape[0]
    half = fft.rfft2(values.astype(float), workers=workers)
    return fft.irfft2(half * multiplier, s=(n, n), workers=workers)


def smoothed_field(ind: IndicatorField, width_cells: float = 2.0, workers: Optional[int] = None) -> np.ndarray:
    """Indicator propagated for t = (width_cells * cell)^4; its 1/2 level set is a sub-cell interface."""
    t = (width_cells * ind.grid.cell) ** 4
    multiplier = _multiplier(wavenumber_squared(ind.grid, half=True), ind.grid.side_length, t, 0.0)
    return _real_pass(ind.values, multiplier, workers)


def step(ind: IndicatorField, params: ThresholdParams, workers: Optional[int] = None) -> StepOutcome:
    """
    One thresholding step: Omega_{k+1} = {U(., h) >= level}.

    Args:
        ind: Current indicator.
        params: Step size, lambda, scale and level.
        workers: Parallelism passed to scipy.fft.

    Returns:
        StepOutcome with the new indicator, the threshold field U and the status.
    """
    field = _real_pass(ind.values, threshold_multiplier(ind.grid, params, half=True), workers)
    new = IndicatorField(grid=ind.grid, values=(field >= params.level).astype(np.uint8))
    status = StepStatus.OK
    if new.is_empty:
        status = StepStatus.COLLAPSED
    elif new.is_full:
        status = StepStatus.FILLED
    return StepOutcome(indicator=new, field=field, status=status)


def resolution_check(grid: GridSpec, params: ThresholdParams, max_speed: float) -> List[str]:
    """Warn when the predicted displacement max_speed * h is below one cell or above n/8 cells."""
    displacement = abs(max_speed) * params.h / grid.cell
    warnings: List[str] = []
    if displacement < 1.0:
        warnings.append(f"predicted displacement {displacement:.3g} cells per step is below one cell; interface may pin")
    if displacement > grid.n / 8:
        warnings.append(f"predicted displacement {displacement:.3g} cells per step exceeds n/8; kernel under-resolved")
    for message in warnings:
        logger.warning(message)
    return warnings
