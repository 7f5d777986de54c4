"""Curve types produced by contour extraction."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from wmbo.core.errors import CurveTopologyError

MIN_CLOSED_VERTICES = 8
DUPLICATE_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class PolyCurve:
    """
    Oriented polyline in domain units.

    For a closed curve the edge from the last vertex back to the first is
    implied; its end point is `vertices[0] + shift`. A non-zero shift marks a
    curve that closes on the torus only (for instance the edge of a band).
    Orientation: the enclosed (super-level) region lies to the left.
    """

    vertices: np.ndarray
    closed: bool = True
    shift: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise ValueError(f"vertices must have shape (m, 2), got {vertices.shape}")
        vertices.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "shift", (float(self.shift[0]), float(self.shift[1])))
        self._validate()

    def _validate(self) -> None:
        if self.closed and len(self.vertices) < MIN_CLOSED_VERTICES:
            raise CurveTopologyError(
                f"closed curves need at least {MIN_CLOSED_VERTICES} vertices, got {len(self.vertices)}"
            )
        if len(self.vertices) < 2:
            raise CurveTopologyError("a curve needs at least two vertices")
        starts, ends = self.edges()
        gaps = np.hypot(*(ends - starts).T)
        scale = max(float(np.ptp(self.vertices, axis=0).max()), float(np.hypot(*self.shift)))
        if scale == 0.0 or gaps.min() <= DUPLICATE_TOLERANCE * scale:
            raise CurveTopologyError("curve has consecutive duplicate vertices")
        if self.closed and not self.wraps:
            x, y = self.vertices[:, 0], self.vertices[:, 1]
            area = 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
            if abs(area) <= DUPLICATE_TOLERANCE * scale**2:
                raise CurveTopologyError("closed curve encloses no area")

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def wraps(self) -> bool:
        """True when the curve closes only modulo the periodic cell."""
        return self.shift != (0.0, 0.0)

    def edges(self) -> Tuple[np.ndarray, np.ndarray]:
        """Segment start and end points, including the closing edge for closed curves."""
        if not self.closed:
            return self.vertices[:-1], self.vertices[1:]
        ends = np.roll(self.vertices, -1, axis=0).copy()
        ends[-1] = self.vertices[0] + np.asarray(self.shift)
        return self.vertices, ends


@dataclass(frozen=True, eq=False)
class CurveGeometry:
    """Per-vertex discrete differential geometry of a closed, uniformly sampled curve."""

    curve: PolyCurve
    arclengths: np.ndarray
    kappa: np.ndarray
    kappa_ss: np.ndarray
    spacing: float

    @property
    def length(self) -> float:
        return self.spacing * len(self.kappa)
