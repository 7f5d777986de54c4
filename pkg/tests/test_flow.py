import numpy as np
import pytest

from wmbo.core import flow
from wmbo.core.errors import CurveTopologyError, RequiresResamplingError
from wmbo.core.flow import ThresholdFlow, evolve, interface_contours, measure_step_velocity, pair_curves
from wmbo.core.geometry import rasterize
from wmbo.models.fields import GridSpec, IndicatorField, SchemeKind, StepStatus, ThresholdParams
from wmbo.models.reports import Diagnostics, FlowConfig
from wmbo.models.shapes import Circle


def test_flow_config_validation():
    params = ThresholdParams(h=1e-5)
    with pytest.raises(ValueError):
        FlowConfig(params=params, steps=0)
    with pytest.raises(ValueError):
        FlowConfig(params=params, steps=5, snapshot_every=2)
    assert FlowConfig(params=params, steps=4, snapshot_every=2).total_time == pytest.approx(4e-5)


def test_band_run_records_every_step(band_indicator):
    cfg = FlowConfig(params=ThresholdParams(h=1e-6), steps=3, snapshot_every=1)
    trajectory = evolve(band_indicator, cfg)
    assert [record.k for record in trajectory.records] == [0, 1, 2, 3]
    assert trajectory.statuses == ["ok"] * 4
    assert sorted(trajectory.snapshots) == [0, 1, 2, 3]
    assert trajectory.halted is None
    assert trajectory.final.equals(band_indicator)
    assert all(record.components == 1 for record in trajectory.records)
    assert trajectory.records[1].max_displacement == pytest.approx(0.0, abs=1e-9)
    assert not trajectory.energy_violations
    assert not trajectory.flagged


def test_area_only_diagnostics(circle_indicator):
    cfg = FlowConfig(params=ThresholdParams(h=1e-6), steps=2, diagnostics=Diagnostics.area_only())
    trajectory = ThresholdFlow(cfg).run(circle_indicator)
    assert all(record.energy is None for record in trajectory.records)
    assert all(record.max_displacement is None for record in trajectory.records)


def test_small_disc_collapses_under_single_scale(small_grid):
    ind0 = rasterize(Circle(radius=0.02), small_grid)
    params = ThresholdParams(h=1e-3, scheme=SchemeKind.SINGLE_SCALE)
    trajectory = evolve(ind0, FlowConfig(params=params, steps=5))
    assert trajectory.halted == "collapsed"
    assert trajectory.records[-1].status is StepStatus.COLLAPSED
    assert len(trajectory.records) == 2
    assert trajectory.final.is_empty


def test_run_rejects_degenerate_start(small_grid):
    empty = IndicatorField(grid=small_grid, values=np.zeros((128, 128)))
    with pytest.raises(ValueError):
        evolve(empty, FlowConfig(params=ThresholdParams(h=1e-5), steps=1))


def test_pair_curves(circle_indicator, band_indicator):
    circle = interface_contours(circle_indicator)
    band = interface_contours(band_indicator)
    pairs = pair_curves(band, list(reversed(band)), band_indicator.grid)
    for old, new in pairs:
        assert np.mean(old.vertices[:, 1]) == pytest.approx(np.mean(new.vertices[:, 1]))
    assert pair_curves(circle, band, circle_indicator.grid)[0][0] is circle[0]
    with pytest.raises(CurveTopologyError):
        pair_curves(band, circle, band_indicator.grid)
    with pytest.raises(CurveTopologyError):
        pair_curves([], circle, circle_indicator.grid)


def test_measure_velocity_of_unchanged_set(band_indicator):
    velocity = measure_step_velocity(band_indicator, band_indicator, h=1e-6)
    np.testing.assert_allclose(velocity, 0.0, atol=1e-3)
    other = IndicatorField(grid=GridSpec(side_length=1.0, n=64), values=np.zeros((64, 64)))
    with pytest.raises(ValueError):
        measure_step_velocity(band_indicator, other, h=1e-6)


def test_evolve_is_deterministic(circle_indicator):
    cfg = FlowConfig(params=ThresholdParams(h=5e-4), steps=3)
    first = evolve(circle_indicator, cfg)
    second = evolve(circle_indicator, cfg)
    assert [r.to_dict() for r in first.records] == [r.to_dict() for r in second.records]
    assert first.final.equals(second.final)


def test_centered_disc_keeps_its_symmetry(circle_indicator):
    cfg = FlowConfig(params=ThresholdParams(h=5e-4), steps=3, snapshot_every=1, diagnostics=Diagnostics.area_only())
    trajectory = evolve(circle_indicator, cfg)
    for snapshot in trajectory.snapshots.values():
        values = snapshot.values
        np.testing.assert_array_equal(values, values.T)
        np.testing.assert_array_equal(values, np.flipud(values))
        np.testing.assert_array_equal(values, np.fliplr(values))


def test_geometry_failures_are_recorded(circle_indicator, monkeypatch, caplog):
    def refuse(curve, grid):
        raise RequiresResamplingError("vertex spacing varies by more than 1%")

    monkeypatch.setattr(flow, "grid_geometry", refuse)
    trajectory = evolve(circle_indicator, FlowConfig(params=ThresholdParams(h=1e-5), steps=2))
    assert trajectory.geometry_errors == [0, 1, 2]
    assert all(record.energy is None for record in trajectory.records)
    assert trajectory.halted is None
    assert "energy not measured" in caplog.text
    assert trajectory.to_dict()["geometry_errors"] == [0, 1, 2]
