"""Writers for the files a run leaves behind: JSON, CSV, PGM and SVG."""

import csv
import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from wmbo.core.geometry import l2_gradient  # noqa: E402
from wmbo.core.utils import format_float  # noqa: E402
from wmbo.models.curves import CurveGeometry, PolyCurve  # noqa: E402
from wmbo.models.fields import IndicatorField  # noqa: E402
from wmbo.models.reports import ConvergenceReport  # noqa: E402

logger = logging.getLogger(__name__)

# Fixed ids and no creation date so repeated runs give identical SVG bytes.
plt.rcParams["svg.hashsalt"] = "wmbo"
SVG_METADATA = {"Date": None, "Creator": None}


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialise {type(value).__name__}")


def write_json(path: Path, data: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_jsonable) + "\n", encoding="utf-8")
    return path


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "" if np.isnan(value) else format_float(value)
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """RFC 4180 CSV (CRLF line ends) with round-trippable floats; None and NaN become empty fields."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(value) for value in row])
    return path


def write_pgm(path: Path, ind: IndicatorField) -> Path:
    """Binary PGM (P5), 0 outside and 255 inside; the first image row is the top of the domain."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = ind.grid.n
    pixels = np.flipud(ind.values).astype(np.uint8) * 255
    path.write_bytes(f"P5\n{n} {n}\n255\n".encode("ascii") + pixels.tobytes())
    return path


def read_pgm(path: Path) -> np.ndarray:
    """Pixel rows of a P5 file written by write_pgm, top row first."""
    data = Path(path).read_bytes()
    header = data.split(b"\n", 3)
    if header[0] != b"P5":
        raise ValueError(f"{path} is not a binary PGM")
    width, height = (int(v) for v in header[1].split())
    return np.frombuffer(header[3], dtype=np.uint8).reshape(height, width)


def curve_rows(geom: CurveGeometry, lam: float = 0.0) -> List[tuple]:
    """Rows s, x, y, kappa, kappa_ss, gradE of a resampled curve."""
    gradient = l2_gradient(geom, lam)
    vertices = geom.curve.vertices
    return [
        (geom.arclengths[i], vertices[i, 0], vertices[i, 1], geom.kappa[i], geom.kappa_ss[i], gradient[i])
        for i in range(len(vertices))
    ]


CURVE_HEADER = ("s", "x", "y", "kappa", "kappa_ss", "gradE")


def _closed_loop(curve: PolyCurve) -> np.ndarray:
    if not curve.closed:
        return curve.vertices
    return np.vstack([curve.vertices, curve.vertices[:1] + np.asarray(curve.shift)])


def plot_overlay(path: Path, ind: IndicatorField, curves: Sequence[PolyCurve], title: Optional[str] = None) -> Path:
    """SVG of the indicator with its contours drawn on top, in domain coordinates."""
    side = ind.grid.side_length
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.imshow(ind.values, cmap="Greys", origin="lower", extent=(0, side, 0, side), vmin=0, vmax=1, interpolation="nearest")
    for curve in curves:
        loop = _closed_loop(curve)
        ax.plot(loop[:, 0], loop[:, 1], "r-", lw=0.8)
    ax.set_xlim(0, side)
    ax.set_ylim(0, side)
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    fig.savefig(path, format="svg", bbox_inches="tight", metadata=SVG_METADATA)
    plt.close(fig)
    return Path(path)


def plot_convergence(path: Path, report: ConvergenceReport) -> Path:
    """Log-log error against h with the fitted rate and an O(h) guide line."""
    valid = [(h, e) for h, e in zip(report.h_values, report.errors) if e is not None and e > 0]
    fig, ax = plt.subplots(figsize=(7, 6))
    if valid:
        h = np.array([v[0] for v in valid])
        err = np.array([v[1] for v in valid])
        label = "area error" if report.fitted_slope is None else f"area error = O(h^{report.fitted_slope:.2f})"
        ax.loglog(h, err, "ko", ms=8.0, mfc="k", label=label)
        ax.loglog(h, err[0] * h / h[0], "--", color="tab:orange", label="O(h)")
    ax.grid(True)
    ax.set_xlabel("$h$")
    ax.set_ylabel("|pixel area - exact area|")
    ax.minorticks_off()
    ax.legend(loc="upper left")
    fig.savefig(path, format="svg", bbox_inches="tight", metadata=SVG_METADATA)
    plt.close(fig)
    return Path(path)
