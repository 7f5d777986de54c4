"""Grid, field and parameter types for the periodic spectral solver."""

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Tuple

import numpy as np

from wmbo.core.errors import GridError
from wmbo.core.utils import is_power_of_two

# 18 a^4 / 11 = 1
DEFAULT_SCALE = (11.0 / 18.0) ** 0.25


@dataclass(frozen=True)
class GridSpec:
    """
    Periodic square [0, L)^2 split into n x n cells.

    Arrays on this grid are indexed [row, col] = [y index, x index]; the sample
    of cell (i, j) sits at the center ((i + 1/2) L/n, (j + 1/2) L/n).
    """

    side_length: float
    n: int

    def __post_init__(self):
        if not self.side_length > 0:
            raise GridError(f"side length must be positive, got {self.side_length}")
        if not is_power_of_two(int(self.n)) or self.n < 2:
            raise GridError(f"cells per axis must be a power of two, got {self.n}")

    @property
    def cell(self) -> float:
        return self.side_length / self.n

    @property
    def center(self) -> Tuple[float, float]:
        half = 0.5 * self.side_length
        return half, half

    def centers(self) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        return (np.arange(self.n) + 0.5) * self.cell

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinates (X, Y), each of shape (n, n)."""
        axis = self.centers()
        return np.meshgrid(axis, axis, indexing="xy")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        return cls(side_length=float(data["side_length"]), n=int(data["n"]))


@dataclass(frozen=True, eq=False)
class IndicatorField:
    """0/1 samples of the characteristic function of a set on the cell centers."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"indicator shape {values.shape} does not match grid n={self.grid.n}")
        if not np.all((values == 0) | (values == 1)):
            raise ValueError("indicator values must be exactly 0 or 1")
        values = values.astype(np.uint8)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def count(self) -> int:
        return int(self.values.sum(dtype=np.int64))

    @property
    def area(self) -> float:
        """Pixel-count area estimate (count of ones) * cell^2."""
        return self.count * self.grid.cell**2

    @property
    def is_empty(self) -> bool:
        return self.count == 0

    @property
    def is_full(self) -> bool:
        return self.count == self.grid.n**2

    def equals(self, other: "IndicatorField") -> bool:
        return self.grid == other.grid and bool(np.array_equal(self.values, other.values))


@dataclass(frozen=True, eq=False)
class SpectrumField:
    """
    Complex Fourier coefficients of a real grid field.

    `coeffs` uses the FFT storage order along both axes (row index = y
    wavenumber); the coefficient at xi = 0 equals the mean of the field.
    """

    grid: GridSpec
    coeffs: np.ndarray


class SchemeKind(str, Enum):
    """Threshold function used by a step."""

    THREE_SCALE = "three_scale"
    SINGLE_SCALE = "single_scale"


@dataclass(frozen=True)
class ThresholdParams:
    """Parameters of one thresholding step."""

    h: float
    lam: float = 0.0
    a: float = DEFAULT_SCALE
    level: float = 0.5
    scheme: SchemeKind = SchemeKind.THREE_SCALE

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"scale a must be positive, got {self.a}")
        if not self.h > 0:
            raise ValueError(f"time step h must be positive, got {self.h}")
        object.__setattr__(self, "scheme", SchemeKind(self.scheme))

    def to_dict(self) -> dict:
        data = asdict(self)
        data["scheme"] = self.scheme.value
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ThresholdParams":
        return cls(
            h=float(data["h"]),
            lam=float(data.get("lam", 0.0)),
            a=float(data.get("a", DEFAULT_SCALE)),
            level=float(data.get("level", 0.5)),
            scheme=SchemeKind(data.get("scheme", SchemeKind.THREE_SCALE.value)),
        )


class StepStatus(str, Enum):
    """Outcome flag of a thresholding step."""

    OK = "ok"
    COLLAPSED = "collapsed"
    FILLED = "filled"
    UNDER_RESOLVED = "under_resolved"


@dataclass(frozen=True, eq=False)
class StepOutcome:
    """Result of one thresholding step."""

    indicator: IndicatorField
    field: np.ndarray
    status: StepStatus = StepStatus.OK
    warnings: Tuple[str, ...] = field(default_factory=tuple)
