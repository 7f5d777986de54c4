"""Data models for grids, curves, kernel tables and reports."""

from wmbo.models.curves import CurveGeometry, PolyCurve
from wmbo.models.fields import (
    DEFAULT_SCALE,
    GridSpec,
    IndicatorField,
    SchemeKind,
    SpectrumField,
    StepOutcome,
    StepStatus,
    ThresholdParams,
)
from wmbo.models.kernel import KernelSeries, MomentPattern, ZeroTable
from wmbo.models.reports import (
    BandInclusion,
    CheckResult,
    ConvergenceReport,
    Diagnostics,
    ExpansionFit,
    FlowConfig,
    StepRecord,
    Trajectory,
    VelocityReport,
)
from wmbo.models.shapes import Band, Cassini, Circle, HalfPlane, Rose, Shape

__all__ = [
    "DEFAULT_SCALE",
    "Band",
    "BandInclusion",
    "Cassini",
    "CheckResult",
    "Circle",
    "ConvergenceReport",
    "CurveGeometry",
    "Diagnostics",
    "ExpansionFit",
    "FlowConfig",
    "GridSpec",
    "HalfPlane",
    "IndicatorField",
    "KernelSeries",
    "MomentPattern",
    "PolyCurve",
    "Rose",
    "SchemeKind",
    "Shape",
    "SpectrumField",
    "StepOutcome",
    "StepRecord",
    "StepStatus",
    "ThresholdParams",
    "Trajectory",
    "VelocityReport",
    "ZeroTable",
]
