"""Contour extraction from grid fields."""

from wmbo.extractors.contours import (
    ContourExtractor,
    curve_distance,
    extract_contours,
    normal_displacement,
)

__all__ = [
    "ContourExtractor",
    "curve_distance",
    "extract_contours",
    "normal_displacement",
]
