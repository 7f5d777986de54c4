"""Initial regions and their `name:args` mini-DSL."""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import ClassVar, Dict, Optional, Tuple, Type

import numpy as np


class Shape(ABC):
    """A closed planar region placed in the periodic cell."""

    name: ClassVar[str] = ""
    registry: ClassVar[Dict[str, Type["Shape"]]] = {}

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        if cls.name:
            Shape.registry[cls.name] = cls

    # Compact shapes must keep clear of the seam. Periodic ones (bands) are meant to cross it.
    compact: ClassVar[bool] = True
    periodic: ClassVar[bool] = False

    @abstractmethod
    def contains(self, x: np.ndarray, y: np.ndarray, center: Tuple[float, float]) -> np.ndarray:
        """Vectorised membership test of the closed region."""

    @abstractmethod
    def args(self) -> Tuple[float, ...]:
        """Positional arguments of the DSL form."""

    def to_spec(self) -> str:
        args = self.args()
        if not args:
            return self.name
        return f"{self.name}:" + ",".join(repr(float(v)) for v in args)

    @classmethod
    @abstractmethod
    def from_args(cls, args: Tuple[str, ...]) -> "Shape":
        """Build the shape from DSL arguments."""

    @staticmethod
    def parse(spec: str) -> "Shape":
        """
        Parse `name:arg,arg,...`.

        Args:
            spec: e.g. "circle:0.15", "cassini:0.6825,0.678", "rose", "band:y,0.25".

        Returns:
            The shape instance.
        """
        name, _, rest = spec.strip().partition(":")
        name = name.strip().lower()
        if name not in Shape.registry:
            known = ", ".join(sorted(Shape.registry))
            raise ValueError(f"unknown shape '{name}' (known: {known})")
        args = tuple(part.strip() for part in rest.split(",") if part.strip()) if rest else ()
        return Shape.registry[name].from_args(args)


@dataclass(frozen=True)
class Circle(Shape):
    radius: float
    center: Optional[Tuple[float, float]] = None

    name: ClassVar[str] = "circle"

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"circle radius must be positive, got {self.radius}")

    def contains(self, x, y, center):
        cx, cy = self.center if self.center is not None else center
        return (x - cx) ** 2 + (y - cy) ** 2 <= self.radius**2

    def args(self):
        if self.center is None:
            return (self.radius,)
        return (self.center[0], self.center[1], self.radius)

    @classmethod
    def from_args(cls, args):
        values = [float(v) for v in args]
        if len(values) == 1:
            return cls(radius=values[0])
        if len(values) == 3:
            return cls(radius=values[2], center=(values[0], values[1]))
        raise ValueError("circle takes R or cx,cy,R")


@dataclass(frozen=True)
class Cassini(Shape):
    """(|x|^2)^2 - 2 b^2 (x1^2 - x2^2) <= a^4 - b^4 around the domain center."""

    a: float = 0.6825
    b: float = 0.678

    name: ClassVar[str] = "cassini"

    def __post_init__(self):
        if not (self.a >= self.b > 0):
            raise ValueError(f"cassini oval needs a >= b > 0 to be connected, got a={self.a}, b={self.b}")

    def contains(self, x, y, center):
        x1 = x - center[0]
        x2 = y - center[1]
        r2 = x1**2 + x2**2
        return r2**2 - 2.0 * self.b**2 * (x1**2 - x2**2) <= self.a**4 - self.b**4

    def args(self):
        return (self.a, self.b)

    @classmethod
    def from_args(cls, args):
        if len(args) not in (0, 2):
            raise ValueError("cassini takes a,b")
        return cls(*(float(v) for v in args))


@dataclass(frozen=True)
class Rose(Shape):
    """|x|^2 <= max{0.01, r(x)^2} with r = 0.5 + (16c^5 - 20c^3 + 5c)/3, c = x1/|x|."""

    name: ClassVar[str] = "rose"

    def contains(self, x, y, center):
        x1 = x - center[0]
        x2 = y - center[1]
        r2 = x1**2 + x2**2
        with np.errstate(invalid="ignore", divide="ignore"):
            c = np.where(r2 > 0, x1 / np.sqrt(r2), 0.0)
        radius = 0.5 + (16 * c**5 - 20 * c**3 + 5 * c) / 3.0
        return r2 <= np.maximum(0.01, radius**2)

    def args(self):
        return ()

    @classmethod
    def from_args(cls, args):
        if args:
            raise ValueError("rose takes no arguments")
        return cls()


@dataclass(frozen=True)
class Band(Shape):
    """|coord - L/2| <= half_width along `axis` ('x' or 'y'); spans the other axis."""

    axis: str = "y"
    half_width: float = 0.25

    name: ClassVar[str] = "band"
    compact: ClassVar[bool] = False
    periodic: ClassVar[bool] = True

    def __post_init__(self):
        if self.axis not in ("x", "y"):
            raise ValueError(f"band axis must be 'x' or 'y', got {self.axis!r}")

    def contains(self, x, y, center):
        coord, mid = (y, center[1]) if self.axis == "y" else (x, center[0])
        return np.abs(coord - mid) <= self.half_width

    def args(self):
        return (self.half_width,)

    def to_spec(self) -> str:
        return f"{self.name}:{self.axis},{self.half_width!r}"

    @classmethod
    def from_args(cls, args):
        if len(args) != 2:
            raise ValueError("band takes axis,half_width")
        return cls(axis=args[0].lower(), half_width=float(args[1]))


@dataclass(frozen=True)
class HalfPlane(Shape):
    """<normal, x - center> <= offset. Meets the seam, so it is never clearance-safe."""

    normal: Tuple[float, float] = (0.0, 1.0)
    offset: float = 0.0

    name: ClassVar[str] = "halfplane"
    compact: ClassVar[bool] = False

    def contains(self, x, y, center):
        nx, ny = self.normal
        norm = np.hypot(nx, ny)
        return (nx * (x - center[0]) + ny * (y - center[1])) / norm <= self.offset

    def args(self):
        return (self.normal[0], self.normal[1], self.offset)

    @classmethod
    def from_args(cls, args):
        if len(args) != 3:
            raise ValueError("halfplane takes nx,ny,offset")
        nx, ny, offset = (float(v) for v in args)
        return cls(normal=(nx, ny), offset=offset)
