"""wmbo - thresholding for Willmore-type flows of planar regions."""

__version__ = "1.0.0"

# Main exports
from wmbo.core.flow import ThresholdFlow, evolve
from wmbo.core.geometry import rasterize
from wmbo.core.spectral import step
from wmbo.models.fields import GridSpec, IndicatorField, ThresholdParams
from wmbo.models.reports import FlowConfig, Trajectory
from wmbo.models.shapes import Shape

__all__ = [
    "FlowConfig",
    "GridSpec",
    "IndicatorField",
    "Shape",
    "ThresholdFlow",
    "ThresholdParams",
    "Trajectory",
    "evolve",
    "rasterize",
    "step",
]
