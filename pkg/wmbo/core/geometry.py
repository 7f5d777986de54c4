"""Rasterisation of shapes and discrete differential geometry of closed curves."""

import logging
import warnings
from typing import Tuple

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from wmbo.core.errors import ClearanceWarning, CurveTopologyError, RequiresResamplingError
from wmbo.models.curves import CurveGeometry, PolyCurve
from wmbo.models.fields import GridSpec, IndicatorField
from wmbo.models.shapes import Shape

logger = logging.getLogger(__name__)

RASTER_CLEARANCE_CELLS = 4
MIN_RESAMPLE = 16
SPACING_TOLERANCE = 0.01
RESAMPLE_PASSES = 20
CURVATURE_SMOOTHING = 1.5
# Gaussian width cap in vertices: m / 32 keeps the shrink of a smoothed circle near 2%.
SMOOTHING_CAP = 32


def seam_clearance(ind: IndicatorField) -> int:
    """Number of empty cells between the set and the nearest edge of the periodic cell."""
    rows = np.flatnonzero(ind.values.any(axis=1))
    cols = np.flatnonzero(ind.values.any(axis=0))
    if rows.size == 0:
        return ind.grid.n
    n = ind.grid.n
    return int(min(rows[0], n - 1 - rows[-1], cols[0], n - 1 - cols[-1]))


def rasterize(shape: Shape, grid: GridSpec) -> IndicatorField:
    """
    Sample the closed region at the cell centers.

    Compact shapes closer than four cells to the seam, and non-periodic shapes that
    meet it, trigger a ClearanceWarning since their periodic images interact.
    """
    x, y = grid.mesh()
    ind = IndicatorField(grid=grid, values=shape.contains(x, y, grid.center).astype(np.uint8))
    if shape.periodic:
        return ind
    clearance = seam_clearance(ind) if shape.compact else 0
    if clearance < RASTER_CLEARANCE_CELLS:
        message = f"{shape.to_spec()} is {clearance} cells from the periodic seam (need {RASTER_CLEARANCE_CELLS})"
        logger.warning(message)
        warnings.warn(message, ClearanceWarning, stacklevel=2)
    return ind


def component_count(ind: IndicatorField) -> int:
    """Connected components (4-neighbour) of the set on the torus."""
    labels, count = ndimage.label(ind.values)
    if count == 0:
        return 0
    # Merge labels that touch across the two seams.
    pairs = [
        (labels[0, :], labels[-1, :]),
        (labels[:, 0], labels[:, -1]),
    ]
    rows, cols = [], []
    for first, second in pairs:
        joined = (first > 0) & (second > 0)
        rows.append(first[joined] - 1)
        cols.append(second[joined] - 1)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    graph = coo_matrix((np.ones(rows.size), (rows, cols)), shape=(count, count))
    merged, _ = connected_components(graph, directed=False)
    return int(merged)


def _require_closed(c: PolyCurve, what: str) -> None:
    if not c.closed:
        raise CurveTopologyError(f"{what} needs a closed curve")
    if len(c) < 3:
        raise CurveTopologyError(f"{what} needs at least 3 vertices, got {len(c)}")


def curve_area(c: PolyCurve) -> float:
    """Signed shoelace area; positive for counterclockwise curves."""
    _require_closed(c, "area")
    if c.wraps:
        raise CurveTopologyError("area is undefined for a curve that closes only on the torus")
    x, y = c.vertices[:, 0], c.vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def edge_lengths(c: PolyCurve) -> np.ndarray:
    starts, ends = c.edges()
    return np.hypot(*(ends - starts).T)


def curve_length(c: PolyCurve) -> float:
    return float(edge_lengths(c).sum())


def curve_centroid(c: PolyCurve) -> Tuple[float, float]:
    """Area centroid for ordinary closed curves, edge-midpoint average otherwise."""
    if c.closed and not c.wraps and len(c) >= 3:
        area = curve_area(c)
        if abs(area) > 0:
            x, y = c.vertices[:, 0], c.vertices[:, 1]
            xn, yn = np.roll(x, -1), np.roll(y, -1)
            cross = x * yn - xn * y
            return float(np.sum((x + xn) * cross) / (6 * area)), float(np.sum((y + yn) * cross) / (6 * area))
    starts, ends = c.edges()
    weights = edge_lengths(c)
    mid = 0.5 * (starts + ends)
    cx, cy = (weights[:, None] * mid).sum(axis=0) / weights.sum()
    return float(cx), float(cy)


def resample_uniform(c: PolyCurve, m: int) -> PolyCurve:
    """m vertices at equal arclength spacing, by linear interpolation along c."""
    _require_closed(c, "resampling")
    if m < MIN_RESAMPLE:
        raise ValueError(f"resample count must be at least {MIN_RESAMPLE}, got {m}")
    lengths = edge_lengths(c)
    s = np.concatenate([[0.0], np.cumsum(lengths)])
    loop = np.vstack([c.vertices, c.vertices[:1] + np.asarray(c.shift)])
    targets = np.arange(m) * (s[-1] / m)
    vertices = np.column_stack([np.interp(targets, s, loop[:, 0]), np.interp(targets, s, loop[:, 1])])
    return PolyCurve(vertices=vertices, closed=True, shift=c.shift)


def spacing_spread(c: PolyCurve) -> float:
    """Largest relative deviation of an edge length from the mean edge length."""
    lengths = edge_lengths(c)
    mean = float(lengths.mean())
    if mean <= 0:
        return float("inf")
    return float(np.max(np.abs(lengths - mean)) / mean)


def resample_for_grid(c: PolyCurve, grid: GridSpec) -> PolyCurve:
    """
    Resample with max(256, perimeter / (2 cell)) vertices.

    Corners sharper than the spacing leave chords shorter than the arclength
    they span, so the resampling is repeated on its own output until the edge
    lengths agree to half the curvature tolerance.
    """
    m = max(256, int(curve_length(c) / (2.0 * grid.cell)))
    curve = resample_uniform(c, m)
    for _ in range(RESAMPLE_PASSES):
        if spacing_spread(curve) <= 0.5 * SPACING_TOLERANCE:
            break
        curve = resample_uniform(curve, m)
    return curve


def curvature_smoothing(c: PolyCurve, grid: GridSpec) -> float:
    """
    Gaussian smoothing length for the curvature of a contour traced on `grid`.

    A rasterised boundary of radius R is a staircase whose flat runs reach
    sqrt(2 R cell); the length scales with sqrt(cell R), R taken from the perimeter.
    """
    radius = curve_length(c) / (2.0 * np.pi)
    return CURVATURE_SMOOTHING * float(np.sqrt(grid.cell * radius))


def _low_pass(c: PolyCurve, sigma: float) -> PolyCurve:
    """Gaussian filter of the vertex coordinates along a uniformly sampled closed curve."""
    m = len(c)
    # Remove the torus shift so the filtered coordinates are periodic in the vertex index.
    trend = np.outer(np.arange(m) / m, c.shift)
    periodic = ndimage.gaussian_filter1d(c.vertices - trend, sigma, axis=0, mode="wrap")
    return PolyCurve(vertices=periodic + trend, closed=True, shift=c.shift)


def curve_geometry(c: PolyCurve, smoothing: float = 0.0) -> CurveGeometry:
    """
    Curvature from turning angles at the vertices of a uniformly sampled closed curve.

    Sign convention: kappa = -d(theta)/ds, so a counterclockwise circle of radius R
    has kappa = -1/R (outward normal (t_y, -t_x)).

    Args:
        c: Closed curve with uniform vertex spacing.
        smoothing: Gaussian smoothing length applied to the coordinates before
            differencing, and once more to kappa before kappa_ss; 0 disables it.

    Raises:
        RequiresResamplingError: spacing varies by more than 1%.
    """
    _require_closed(c, "curve geometry")
    if spacing_spread(c) > SPACING_TOLERANCE:
        raise RequiresResamplingError("vertex spacing varies by more than 1%; call resample_uniform first")
    sigma = min(smoothing / float(edge_lengths(c).mean()), len(c) / SMOOTHING_CAP) if smoothing > 0 else 0.0
    traced = _low_pass(c, sigma) if sigma > 0 else c

    lengths = edge_lengths(traced)
    spacing = float(lengths.mean())
    starts, ends = traced.edges()
    theta = np.arctan2(ends[:, 1] - starts[:, 1], ends[:, 0] - starts[:, 0])
    turning = np.angle(np.exp(1j * (theta - np.roll(theta, 1))))
    kappa = -turning / (0.5 * (lengths + np.roll(lengths, 1)))
    smooth = ndimage.gaussian_filter1d(kappa, sigma, mode="wrap") if sigma > 0 else kappa
    kappa_ss = (np.roll(smooth, -1) - 2.0 * smooth + np.roll(smooth, 1)) / spacing**2
    arclengths = np.concatenate([[0.0], np.cumsum(lengths[:-1])])
    return CurveGeometry(curve=c, arclengths=arclengths, kappa=kappa, kappa_ss=kappa_ss, spacing=spacing)


def grid_geometry(c: PolyCurve, grid: GridSpec) -> CurveGeometry:
    """Geometry of a contour traced on `grid`: resampled, then smoothed over the raster staircase."""
    resampled = resample_for_grid(c, grid)
    return curve_geometry(resampled, curvature_smoothing(resampled, grid))


def willmore_energy(geom: CurveGeometry, lam: float = 0.0) -> float:
    """Periodic trapezoid rule for int (kappa^2 / 2 + lambda) ds."""
    return float(np.sum(0.5 * geom.kappa**2 + lam) * geom.spacing)


def l2_gradient(geom: CurveGeometry, lam: float = 0.0) -> np.ndarray:
    """kappa_ss + kappa^3 / 2 - lambda kappa per vertex."""
    return geom.kappa_ss + 0.5 * geom.kappa**3 - lam * geom.kappa


def predicted_speed(geom: CurveGeometry, lam: float = 0.0) -> float:
    """Curve average of |kappa^3 / 2 - lambda kappa|; kappa_ss is left out as it averages to zero."""
    return float(np.mean(np.abs(0.5 * geom.kappa**3 - lam * geom.kappa)))


def outward_normals(c: PolyCurve) -> np.ndarray:
    """Unit normals (t_y, -t_x) from central differences of the vertices."""
    loop = c.vertices
    ahead = np.roll(loop, -1, axis=0)
    behind = np.roll(loop, 1, axis=0)
    if c.closed:
        ahead[-1] = loop[0] + np.asarray(c.shift)
        behind[0] = loop[-1] - np.asarray(c.shift)
    else:
        ahead[-1] = loop[-1]
        behind[0] = loop[0]
    tangent = ahead - behind
    tangent /= np.hypot(*tangent.T)[:, None]
    return np.column_stack([tangent[:, 1], -tangent[:, 0]])
