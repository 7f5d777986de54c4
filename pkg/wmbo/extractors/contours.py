"""Level-set contours of grid fields and distances between curves."""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from wmbo.core.errors import CurveTopologyError
from wmbo.core.geometry import outward_normals
from wmbo.core.utils import wrap_delta
from wmbo.models.curves import PolyCurve
from wmbo.models.fields import GridSpec

logger = logging.getLogger(__name__)

# Corners 0=BL, 1=BR, 2=TR, 3=TL; edge k joins corner k to corner k+1.
# Case index = sum(2^k for inside corners k). Entries list (entry edge, exit edge)
# pairs so the super-level set lies left of travel; saddles carry the pairs for a
# center inside and outside.
MARCHING_SQUARES_TABLE = [
    (False, []),  # 0000
    (False, [(0, 3)]),  # 0001
    (False, [(1, 0)]),  # 0010
    (False, [(1, 3)]),  # 0011
    (False, [(2, 1)]),  # 0100
    (True, ([(0, 1), (2, 3)], [(0, 3), (2, 1)])),  # 0101
    (False, [(2, 0)]),  # 0110
    (False, [(2, 3)]),  # 0111
    (False, [(3, 2)]),  # 1000
    (False, [(0, 2)]),  # 1001
    (True, ([(1, 2), (3, 0)], [(1, 0), (3, 2)])),  # 1010
    (False, [(1, 2)]),  # 1011
    (False, [(3, 1)]),  # 1100
    (False, [(0, 1)]),  # 1101
    (False, [(3, 0)]),  # 1110
    (False, []),  # 1111
]

EdgeKey = Tuple[int, int, int]  # (0 horizontal | 1 vertical, x index, y index)


class ContourExtractor:
    """Marching squares on cell-center samples with linear edge interpolation."""

    def __init__(self, level: float = 0.5, periodic: bool = True, min_vertices: int = 8):
        """
        Initialize the extractor.

        Args:
            level: Contour level; samples >= level count as inside.
            periodic: Treat the field as periodic and stitch curves across the seam.
            min_vertices: Closed curves with fewer vertices are dropped.
        """
        self.level = level
        self.periodic = periodic
        self.min_vertices = min_vertices

    def extract(self, field: np.ndarray, grid: GridSpec) -> List[PolyCurve]:
        """
        Extract oriented polylines of {field = level}.

        Args:
            field: n x n samples on the cell centers of `grid`, indexed [y, x].
            grid: The grid the samples live on.

        Returns:
            Closed curves (and, without periodic stitching, open ones reaching the border).
        """
        values = np.asarray(field, dtype=float)
        if values.shape != (grid.n, grid.n):
            raise ValueError(f"field shape {values.shape} does not match grid n={grid.n}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite samples")

        links = self._link_edges(values, grid.n)
        chains = self._chain(links)
        curves = []
        for keys, closed in chains:
            points = np.array([self._edge_point(values, grid, key) for key in keys])
            curve = self._build_curve(points, closed, grid)
            if curve is not None:
                curves.append(curve)
        return curves

    def _corners(self, inside: np.ndarray) -> List[np.ndarray]:
        if self.periodic:
            right = np.roll(inside, -1, axis=1)
            return [inside, right, np.roll(right, -1, axis=0), np.roll(inside, -1, axis=0)]
        return [inside[:-1, :-1], inside[:-1, 1:], inside[1:, 1:], inside[1:, :-1]]

    def _link_edges(self, values: np.ndarray, n: int) -> Dict[EdgeKey, EdgeKey]:
        corners = self._corners(values >= self.level)
        case = sum(corner.astype(np.int64) << k for k, corner in enumerate(corners))
        center = sum(self._corners(values)) / 4.0
        links: Dict[EdgeKey, EdgeKey] = {}
        ys, xs = np.nonzero((case != 0) & (case != 15))
        for y, x in zip(ys.tolist(), xs.tolist()):
            saddle, pairs = MARCHING_SQUARES_TABLE[case[y, x]]
            if saddle:
                pairs = pairs[0] if center[y, x] >= self.level else pairs[1]
            for entry, exit_ in pairs:
                links[self._edge_key(x, y, entry, n)] = self._edge_key(x, y, exit_, n)
        return links

    def _edge_key(self, x: int, y: int, k: int, n: int) -> EdgeKey:
        if k == 0:
            key = (0, x, y)
        elif k == 1:
            key = (1, x + 1, y)
        elif k == 2:
            key = (0, x, y + 1)
        else:
            key = (1, x, y)
        if self.periodic:
            key = (key[0], key[1] % n, key[2] % n)
        return key

    def _chain(self, links: Dict[EdgeKey, EdgeKey]) -> List[Tuple[List[EdgeKey], bool]]:
        links = dict(links)
        starts = sorted(set(links) - set(links.values()))
        if starts and self.periodic:
            raise CurveTopologyError(f"{len(starts)} contour chains stay open after periodic stitching")
        chains = []
        for start in starts:
            keys = [start]
            while keys[-1] in links:
                keys.append(links.pop(keys[-1]))
            chains.append((keys, False))
        while links:
            first = min(links)
            keys = [first]
            key = links.pop(first)
            while key != first:
                keys.append(key)
                if key not in links:
                    raise CurveTopologyError("contour chain broke before closing")
                key = links.pop(key)
            chains.append((keys, True))
        return chains

    def _edge_point(self, values: np.ndarray, grid: GridSpec, key: EdgeKey) -> Tuple[float, float]:
        vertical, x, y = key
        n = grid.n
        fa = values[y, x]
        fb = values[(y + 1) % n, x] if vertical else values[y, (x + 1) % n]
        t = (self.level - fa) / (fb - fa)
        if vertical:
            return (x + 0.5) * grid.cell, (y + 0.5 + t) * grid.cell
        return (x + 0.5 + t) * grid.cell, (y + 0.5) * grid.cell

    def _build_curve(self, points: np.ndarray, closed: bool, grid: GridSpec) -> Optional[PolyCurve]:
        side = grid.side_length
        if self.periodic:
            steps = wrap_delta(np.diff(points, axis=0), side)
            points = np.vstack([points[:1], points[0] + np.cumsum(steps, axis=0)])
        shift = np.zeros(2)
        if closed and self.periodic:
            closing = points[-1] + wrap_delta(points[0] - points[-1], side)
            shift = side * np.round((closing - points[0]) / side)

        keep = np.ones(len(points), dtype=bool)
        keep[1:] = np.hypot(*np.diff(points, axis=0).T) > 1e-12 * side
        points = points[keep]
        if closed and len(points) > 1 and np.hypot(*(points[0] + shift - points[-1])) <= 1e-12 * side:
            points = points[:-1]

        if closed and len(points) < self.min_vertices:
            logger.debug("dropping closed contour with %d vertices", len(points))
            return None
        if not closed and len(points) < 2:
            return None
        return PolyCurve(vertices=points, closed=closed, shift=(float(shift[0]), float(shift[1])))


def extract_contours(field: np.ndarray, level: float, grid: GridSpec, periodic: bool = True) -> List[PolyCurve]:
    """Oriented level-set curves of a grid field; see ContourExtractor."""
    return ContourExtractor(level=level, periodic=periodic).extract(field, grid)


def _segments(curves: Sequence[PolyCurve]) -> Tuple[np.ndarray, np.ndarray]:
    """All edges of the curves, plus copies translated by +-shift for curves wrapping the torus."""
    starts, ends = [], []
    for curve in curves:
        a, b = curve.edges()
        offsets = [np.zeros(2)]
        if curve.wraps:
            offsets += [np.asarray(curve.shift), -np.asarray(curve.shift)]
        for offset in offsets:
            starts.append(a + offset)
            ends.append(b + offset)
    return np.vstack(starts), np.vstack(ends)


def normal_displacement(
    old: PolyCurve, new_curves: Sequence[PolyCurve], grid: Optional[GridSpec] = None, chunk: int = 256
) -> np.ndarray:
    """
    Signed distance along the outward normal from each vertex of `old` to the nearest
    crossing with `new_curves`; NaN where nothing is hit within the window.

    Args:
        old: Closed, uniformly resampled curve.
        new_curves: Curves to intersect with.
        grid: Domain grid; the search window is +-L/8 (an eighth of the curve span without it).
        chunk: Vertices processed per vectorised batch.
    """
    if not new_curves:
        raise CurveTopologyError("no curves to measure displacement against")
    if grid is not None:
        window = grid.side_length / 8.0
    else:
        window = max(float(np.ptp(old.vertices, axis=0).max()), 1e-300) / 8.0
    starts, ends = _segments(new_curves)
    edge = ends - starts
    normals = outward_normals(old)
    result = np.full(len(old), np.nan)
    for lo in range(0, len(old), chunk):
        p = old.vertices[lo : lo + chunk][:, None, :]
        d = normals[lo : lo + chunk][:, None, :]
        w = starts[None, :, :] - p
        denom = d[..., 0] * edge[None, :, 1] - d[..., 1] * edge[None, :, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (w[..., 0] * edge[None, :, 1] - w[..., 1] * edge[None, :, 0]) / denom
            u = (w[..., 0] * d[..., 1] - w[..., 1] * d[..., 0]) / denom
        hit = (np.abs(denom) > 1e-300) & (u >= -1e-9) & (u <= 1.0 + 1e-9) & (np.abs(s) <= window)
        s = np.where(hit, s, np.inf)
        best = np.argmin(np.abs(s), axis=1)
        chosen = s[np.arange(s.shape[0]), best]
        result[lo : lo + chunk] = np.where(np.isfinite(chosen), chosen, np.nan)
    return result


def curve_distance(points: np.ndarray, curves: Sequence[PolyCurve]) -> np.ndarray:
    """Euclidean distance from each point to the nearest segment of `curves`."""
    if not curves:
        raise CurveTopologyError("no curves to measure distance to")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    starts, ends = _segments(curves)
    # Every vertex is stored as a segment start and a segment end, so the nearest
    # few hits cover both segments meeting at the closest vertex.
    tree = cKDTree(np.vstack([starts, ends]))
    _, nearest = tree.query(points, k=min(4, 2 * len(starts)))
    candidates = np.atleast_2d(nearest) % len(starts)
    a = starts[candidates]
    e = ends[candidates] - a
    rel = points[:, None, :] - a
    length2 = np.maximum(np.sum(e * e, axis=-1), 1e-300)
    u = np.clip(np.sum(rel * e, axis=-1) / length2, 0.0, 1.0)
    gap = rel - u[..., None] * e
    return np.min(np.hypot(gap[..., 0], gap[..., 1]), axis=1)
