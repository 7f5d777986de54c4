"""Iterated thresholding: Omega_0, Omega_1, ... with per-step diagnostics."""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from wmbo.core.errors import CurveTopologyError, RequiresResamplingError
from wmbo.core.geometry import (
    component_count,
    curve_centroid,
    grid_geometry,
    predicted_speed,
    resample_for_grid,
    seam_clearance,
    willmore_energy,
)
from wmbo.core.spectral import resolution_check, smoothed_field, step
from wmbo.core.utils import wrap_delta
from wmbo.extractors.contours import extract_contours, normal_displacement
from wmbo.models.curves import PolyCurve
from wmbo.models.fields import GridSpec, IndicatorField, StepStatus
from wmbo.models.reports import FlowConfig, StepRecord, Trajectory

logger = logging.getLogger(__name__)

SMOOTHING_CELLS = 2.0
ENERGY_ALLOWANCE = 0.05
# An interface is pinned when it moves less than PIN_CELLS while the gradient predicts
# at least MOVING_CELLS.
PIN_CELLS = 0.5
MOVING_CELLS = 0.05


def interface_contours(ind: IndicatorField, workers: Optional[int] = None) -> List[PolyCurve]:
    """Sub-cell boundary of the set: the 1/2 level of its slightly propagated indicator."""
    return extract_contours(smoothed_field(ind, SMOOTHING_CELLS, workers), 0.5, ind.grid)


def pair_curves(
    before: Sequence[PolyCurve], after: Sequence[PolyCurve], grid: GridSpec
) -> List[Tuple[PolyCurve, PolyCurve]]:
    """Match every curve of `before` with the `after` curve whose centroid is nearest on the torus."""
    if not before or not after:
        raise CurveTopologyError("both steps need at least one contour")
    if len(before) == 1:
        return [(before[0], _nearest(before[0], after, grid))]
    if len(before) != len(after):
        raise CurveTopologyError(f"cannot pair {len(before)} contours with {len(after)}")
    pairs = [(curve, _nearest(curve, after, grid)) for curve in before]
    if len({id(new) for _, new in pairs}) != len(pairs):
        raise CurveTopologyError("contour pairing by centroid is ambiguous")
    return pairs


def _nearest(curve: PolyCurve, candidates: Sequence[PolyCurve], grid: GridSpec) -> PolyCurve:
    origin = np.asarray(curve_centroid(curve))
    gaps = [
        np.hypot(*wrap_delta(np.asarray(curve_centroid(other)) - origin, grid.side_length)) for other in candidates
    ]
    return candidates[int(np.argmin(gaps))]


def step_displacements(
    before: Sequence[PolyCurve], after: Sequence[PolyCurve], grid: GridSpec
) -> List[Tuple[PolyCurve, np.ndarray]]:
    """Resampled `before` curves with the normal displacement of each vertex to its paired curve."""
    result = []
    for old, new in pair_curves(before, after, grid):
        resampled = resample_for_grid(old, grid)
        result.append((resampled, normal_displacement(resampled, [new], grid)))
    return result


def measure_step_velocity(
    before: IndicatorField, after: IndicatorField, h: float, grid: Optional[GridSpec] = None
) -> np.ndarray:
    """
    Outward normal velocity of one step at the vertices of the resampled initial contour.

    Args:
        before: Indicator before the step.
        after: Indicator after the step.
        h: Step size.
        grid: Grid of both indicators (taken from `before` when omitted).

    Returns:
        Displacement / h per vertex, NaN where no crossing was found.
    """
    grid = grid or before.grid
    if after.grid != grid or before.grid != grid:
        raise ValueError("indicators live on different grids")
    pieces = step_displacements(interface_contours(before), interface_contours(after), grid)
    return np.concatenate([displacement for _, displacement in pieces]) / h


class ThresholdFlow:
    """Runs the thresholding iteration and records diagnostics."""

    def __init__(self, config: FlowConfig, workers: Optional[int] = None):
        """
        Initialize the flow.

        Args:
            config: Step parameters, step count, snapshot cadence and diagnostics.
            workers: Parallelism passed to scipy.fft.
        """
        self.config = config
        self.workers = workers

    @property
    def _needs_contours(self) -> bool:
        flags = self.config.diagnostics
        return flags.contour or flags.energy or flags.velocity

    def _contours(self, ind: IndicatorField, k: int, trajectory: Trajectory) -> Optional[List[PolyCurve]]:
        if not self._needs_contours or ind.is_empty or ind.is_full:
            return None
        try:
            return interface_contours(ind, self.workers)
        except CurveTopologyError as exc:
            logger.warning("step %d: contour extraction failed (%s); contour diagnostics skipped", k, exc)
            trajectory.topology_errors.append(k)
            return None

    def _energy(
        self, curves: Optional[List[PolyCurve]], grid: GridSpec, k: int, trajectory: Trajectory
    ) -> Tuple[Optional[float], Optional[float]]:
        """Willmore energy of all closed contours and the predicted interface speed."""
        if not curves or not self.config.diagnostics.energy:
            return None, None
        lam = self.config.params.lam
        try:
            geometries = [grid_geometry(curve, grid) for curve in curves if curve.closed]
        except RequiresResamplingError as exc:
            logger.warning("step %d: energy not measured (%s)", k, exc)
            trajectory.geometry_errors.append(k)
            return None, None
        if not geometries:
            return None, None
        energy = sum(willmore_energy(geom, lam) for geom in geometries)
        speed = max(predicted_speed(geom, lam) for geom in geometries)
        return energy, speed

    def _max_displacement(
        self, before: Optional[List[PolyCurve]], after: Optional[List[PolyCurve]], grid: GridSpec, k: int
    ) -> Optional[float]:
        if not self.config.diagnostics.velocity or not before or not after:
            return None
        try:
            pieces = step_displacements(before, after, grid)
        except CurveTopologyError as exc:
            logger.warning("step %d: displacement not measured (%s)", k, exc)
            return None
        displacement = np.concatenate([d for _, d in pieces])
        if not np.any(np.isfinite(displacement)):
            return None
        return float(np.nanmax(np.abs(displacement)))

    def run(self, ind0: IndicatorField) -> Trajectory:
        """
        Evolve the initial set for `config.steps` steps.

        Args:
            ind0: Nonempty, non-full initial indicator.

        Returns:
            Trajectory with one record per state, k = 0..K (K < steps on early halt).
        """
        if ind0.is_empty or ind0.is_full:
            raise ValueError("the initial set must be nonempty and not fill the domain")
        cfg = self.config
        params = cfg.params
        grid = ind0.grid
        trajectory = Trajectory(grid=grid, params=params)
        guard_active = cfg.clearance_cells > 0 and seam_clearance(ind0) > 0

        curves = self._contours(ind0, 0, trajectory)
        energy, speed = self._energy(curves, grid, 0, trajectory)
        if speed is not None:
            resolution_check(grid, params, speed)
        trajectory.records.append(
            StepRecord(0, 0.0, ind0.area, component_count(ind0), energy, None, StepStatus.OK)
        )
        if cfg.snapshot_every:
            trajectory.snapshots[0] = ind0
        logger.info("evolve: %d steps of h=%r on n=%d, L=%r", cfg.steps, params.h, grid.n, grid.side_length)

        current = ind0
        for k in range(1, cfg.steps + 1):
            outcome = step(current, params, self.workers)
            new = outcome.indicator
            status = outcome.status

            new_curves = self._contours(new, k, trajectory)
            new_energy, new_speed = self._energy(new_curves, grid, k, trajectory)
            max_disp = self._max_displacement(curves, new_curves, grid, k)

            if status is StepStatus.OK and speed is not None and speed * params.h >= MOVING_CELLS * grid.cell:
                pinned = max_disp < PIN_CELLS * grid.cell if max_disp is not None else new.equals(current)
                if pinned:
                    status = StepStatus.UNDER_RESOLVED
                    logger.warning("step %d: interface pinned, predicted %.3g cells moved", k, speed * params.h / grid.cell)

            if energy is not None and new_energy is not None and new_energy > energy * (1.0 + ENERGY_ALLOWANCE):
                trajectory.energy_violations.append(k)
                logger.warning("step %d: energy rose from %.6g to %.6g", k, energy, new_energy)

            record = StepRecord(k, k * params.h, new.area, component_count(new), new_energy, max_disp, status)
            trajectory.records.append(record)
            logger.info("step %d t=%.6g area=%.6g status=%s", k, record.t, record.area, status.value)
            if cfg.snapshot_every and k % cfg.snapshot_every == 0:
                trajectory.snapshots[k] = new

            current, curves, energy, speed = new, new_curves, new_energy, new_speed
            if status in (StepStatus.COLLAPSED, StepStatus.FILLED):
                trajectory.halted = status.value
                logger.info("evolve halted at step %d: %s", k, status.value)
                break
            if guard_active and seam_clearance(current) < cfg.clearance_cells:
                trajectory.halted = "clearance"
                logger.warning("evolve halted at step %d: set within %d cells of the seam", k, cfg.clearance_cells)
                break

        trajectory.final = current
        return trajectory


def evolve(ind0: IndicatorField, cfg: FlowConfig, workers: Optional[int] = None) -> Trajectory:
    """Apply `cfg.steps` thresholding steps to `ind0`, halting early on collapse, fill or clearance."""
    return ThresholdFlow(cfg, workers).run(ind0)
