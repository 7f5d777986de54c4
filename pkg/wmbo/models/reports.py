"""Run records and validation reports."""

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

from wmbo.models.fields import GridSpec, IndicatorField, StepStatus, ThresholdParams


@dataclass(frozen=True)
class CheckResult:
    """One verified property: value, the bound it was held to, and the outcome."""

    name: str
    passed: bool
    value: Optional[float] = None
    bound: str = ""
    residual: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Diagnostics:
    """Which per-step measurements evolve records."""

    area: bool = True
    energy: bool = True
    contour: bool = True
    velocity: bool = True

    @classmethod
    def area_only(cls) -> "Diagnostics":
        return cls(area=True, energy=False, contour=False, velocity=False)


@dataclass(frozen=True)
class FlowConfig:
    """Iteration settings: steps * params.h is the simulated time."""

    params: ThresholdParams
    steps: int
    snapshot_every: int = 0
    diagnostics: Diagnostics = field(default_factory=Diagnostics)
    clearance_cells: int = 8

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be at least 1, got {self.steps}")
        if self.snapshot_every < 0 or (self.snapshot_every and self.steps % self.snapshot_every):
            raise ValueError(f"snapshot_every must be 0 or divide steps={self.steps}, got {self.snapshot_every}")

    @property
    def total_time(self) -> float:
        return self.steps * self.params.h


@dataclass(frozen=True)
class StepRecord:
    k: int
    t: float
    area: float
    components: int
    energy: Optional[float]
    max_displacement: Optional[float]
    status: StepStatus

    CSV_HEADER = ("k", "t", "area", "components", "energy", "max_disp", "status")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["status"] = self.status.value
        return data


@dataclass
class Trajectory:
    """Per-step records of one evolve run plus the kept snapshots."""

    grid: GridSpec
    params: ThresholdParams
    records: List[StepRecord] = field(default_factory=list)
    snapshots: Dict[int, IndicatorField] = field(default_factory=dict)
    halted: Optional[str] = None
    energy_violations: List[int] = field(default_factory=list)
    topology_errors: List[int] = field(default_factory=list)
    geometry_errors: List[int] = field(default_factory=list)
    final: Optional[IndicatorField] = None

    @property
    def statuses(self) -> List[str]:
        return [record.status.value for record in self.records]

    @property
    def flagged(self) -> bool:
        return any(record.status is StepStatus.UNDER_RESOLVED for record in self.records)

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "params": self.params.to_dict(),
            "steps": len(self.records) - 1,
            "halted": self.halted,
            "energy_violations": list(self.energy_violations),
            "topology_errors": list(self.topology_errors),
            "geometry_errors": list(self.geometry_errors),
            "snapshots": sorted(self.snapshots),
            "statuses": self.statuses,
        }


@dataclass(frozen=True)
class ConvergenceReport:
    h_values: List[float]
    errors: List[Optional[float]]
    fitted_slope: Optional[float]
    r_squared: Optional[float]
    invalid: List[float] = field(default_factory=list)
    r0: float = 0.0
    t_final: float = 0.0
    error_metric: str = "|pixel area - pi R(t_final)^2|"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ExpansionFit:
    """(u - 1/2) at the interface fitted as c14 t^(1/4) + c34 t^(3/4)."""

    t_values: List[float]
    u_minus_half: List[float]
    fitted_c14: float
    fitted_c34: float
    residual: float
    expected_c14: float
    combination: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class VelocityReport:
    """Measured normal velocity of one step against the negative L2 gradient."""

    h_values: List[float]
    sup_residuals: List[float]
    mean_velocity: List[float]
    mean_neg_gradient: List[float]
    expected_velocity: Optional[float]
    slope: Optional[float]

    @property
    def sup_residual(self) -> float:
        return self.sup_residuals[0]

    @property
    def relative_error(self) -> Optional[float]:
        if not self.expected_velocity:
            return None
        return abs(self.mean_velocity[0] - self.expected_velocity) / abs(self.expected_velocity)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["relative_error"] = self.relative_error
        return data


@dataclass(frozen=True)
class BandInclusion:
    """Sup distance from the thresholded contour to the initial one, per step size."""

    t_values: List[float]
    sup_distances: List[float]
    slope: Optional[float]
    r_squared: Optional[float]
    single_scale: bool = False

    def to_dict(self) -> dict:
        return asdict(self)
