"""Tables produced by the kernel analysis."""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np


@dataclass(frozen=True, eq=False)
class KernelSeries:
    """Truncated power series of the radial profile phi_N."""

    dim: int
    coeffs: np.ndarray
    n_max: int
    valid_radius: float

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "n_max": self.n_max,
            "valid_radius": self.valid_radius,
            "coeffs": [float(c) for c in self.coeffs],
        }


@dataclass(frozen=True)
class ZeroTable:
    """Sign-change radii 0 < r_1^+ < r_1^- < r_2^+ < ... of phi_1."""

    pairs: Tuple[Tuple[float, float], ...]
    tol: float

    def radii(self) -> List[float]:
        return [r for pair in self.pairs for r in pair]

    def to_dict(self) -> dict:
        return {
            "tol": self.tol,
            "pairs": [{"k": k, "r_plus": p, "r_minus": q} for k, (p, q) in enumerate(self.pairs, start=1)],
        }


@dataclass(frozen=True)
class MomentPattern:
    """
    Moment of (-d^2/dz_N^2)^ell (-Laplace)^m g_N on the hyperplane z_N = 0
    against (z')^beta, where beta lists the non-zero exponents.
    """

    beta: Tuple[int, ...] = field(default_factory=tuple)
    ell: int = 0
    m: int = 0
    dim: int = 2

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(int(b) for b in self.beta))
        if any(b <= 0 for b in self.beta):
            raise ValueError(f"beta lists the positive exponents only, got {self.beta}")
        if self.ell < 0 or self.m < 0:
            raise ValueError("ell and m must be non-negative")
        if self.dim < 2:
            raise ValueError(f"moments live on a hyperplane, need dim >= 2, got {self.dim}")
        if len(self.beta) > self.dim - 1:
            raise ValueError(f"pattern {self.beta} needs at least {len(self.beta) + 1} dimensions")

    @property
    def order(self) -> int:
        return sum(self.beta)

    def key(self) -> Tuple[Tuple[int, ...], int, int]:
        """Table key; g_N is radial, so the order of the exponents is irrelevant."""
        return tuple(sorted(self.beta, reverse=True)), self.ell, self.m

    def label(self) -> str:
        beta = ",".join(str(b) for b in self.beta) or "0"
        return f"M[({beta}); l={self.ell}, m={self.m}; N={self.dim}]"
