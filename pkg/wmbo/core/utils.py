"""Small numerical helpers shared across modules."""

from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import stats


def is_power_of_two(n: int) -> bool:
    """Check whether n is a positive power of two."""
    return n > 0 and (n & (n - 1)) == 0


def fit_loglog(x: Sequence[float], y: Sequence[float]) -> Tuple[Optional[float], Optional[float]]:
    """
    Fit log(y) = slope * log(x) + c by least squares.

    Args:
        x: Positive abscissae (time steps, radii, ...).
        y: Positive ordinates (errors, distances, ...).

    Returns:
        (slope, r_squared), or (None, None) when fewer than two points are given.
    """
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    if x_arr.size < 2:
        return None, None
    result = stats.linregress(np.log(x_arr), np.log(y_arr))
    return float(result.slope), float(result.rvalue**2)


def fit_powers(t: Sequence[float], values: Sequence[float], exponents: Iterable[float]) -> Tuple[np.ndarray, float]:
    """
    Least-squares fit of values against the basis t**p for each exponent p.

    Returns:
        (coefficients, rms residual).
    """
    t_arr = np.asarray(t, dtype=float)
    basis = np.column_stack([t_arr**p for p in exponents])
    coeffs, *_ = np.linalg.lstsq(basis, np.asarray(values, dtype=float), rcond=None)
    residual = np.asarray(values, dtype=float) - basis @ coeffs
    return coeffs, float(np.sqrt(np.mean(residual**2)))


def wrap_delta(delta: np.ndarray, period: float) -> np.ndarray:
    """Map coordinate differences into [-period/2, period/2)."""
    return delta - period * np.round(delta / period)


def format_float(value: Optional[float]) -> str:
    """Locale-independent, round-trippable float formatting for CSV output."""
    if value is None:
        return ""
    return repr(float(value))
