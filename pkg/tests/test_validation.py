import numpy as np
import pytest
from scipy import special

from wmbo.core.errors import RegimeError
from wmbo.core.flow import evolve
from wmbo.core.geometry import rasterize
from wmbo.core.spectral import semigroup_multiplier
from wmbo.core.validation import (
    band_inclusion_check,
    circle_convergence_study,
    circle_radius_exact,
    evaluate_series,
    exact_coefficients,
    expansion_probe,
    velocity_gradient_residual,
)
from wmbo.models.fields import GridSpec, ThresholdParams
from wmbo.models.reports import Diagnostics, FlowConfig
from wmbo.models.shapes import Band, Cassini, Circle, Rose

PRE_ASYMPTOTIC = (
    "kernel width 3a h^(1/4) is comparable to R at desk-scale step sizes; "
    "the continuum velocity only settles near 1/(2R^3) around h = 1e-9, below one cell of motion"
)


def test_circle_radius_law():
    assert circle_radius_exact(0.15, 0.0) == 0.15
    assert circle_radius_exact(0.1, 0.00064) == pytest.approx(0.19274, rel=1e-4)
    dt = 1e-8
    slope = (circle_radius_exact(0.15, 1e-5 + dt) - circle_radius_exact(0.15, 1e-5 - dt)) / (2 * dt)
    assert slope == pytest.approx(0.5 * circle_radius_exact(0.15, 1e-5) ** -3, rel=1e-6)
    with pytest.raises(ValueError):
        circle_radius_exact(-0.1, 0.0)


def test_fourth_power_grows_linearly():
    rng = np.random.default_rng(7)
    for r0, t in zip(rng.uniform(0.05, 1.0, 10), rng.uniform(0.0, 1.0, 10)):
        assert circle_radius_exact(r0, t) ** 4 - r0**4 == pytest.approx(2 * t, rel=1e-12, abs=1e-14)


def test_convergence_study_bookkeeping(small_grid):
    report = circle_convergence_study(0.25, small_grid, [2.5e-6, 5e-6], 1e-5, jobs=2)
    assert report.h_values == [5e-6, 2.5e-6]
    assert len(report.errors) == 2
    assert report.invalid == []
    with pytest.raises(ValueError):
        circle_convergence_study(0.25, small_grid, [3e-5], 1e-4)


def test_single_step_size_has_no_slope(small_grid):
    report = circle_convergence_study(0.25, small_grid, [5e-6], 5e-6)
    assert report.fitted_slope is None
    assert report.errors[0] is not None


def test_flat_band_expansion_vanishes(small_grid):
    fit = expansion_probe(None, small_grid, [1e-8, 1e-7, 1e-6], shape=Band())
    assert fit.expected_c14 == 0.0
    assert abs(fit.fitted_c14) < 1e-6


def test_flat_band_velocity_and_band(small_grid):
    params = ThresholdParams(h=1e-6)
    report = velocity_gradient_residual(Band(), small_grid, params)
    assert report.expected_velocity == 0.0
    assert report.sup_residual < small_grid.cell / params.h
    inclusion = band_inclusion_check(Band(), small_grid, params, [1e-6, 1e-5])
    assert max(inclusion.sup_distances) <= small_grid.cell


def test_sub_cell_step_is_a_regime_error(small_grid):
    # 1/(2 R^3) h is about 0.4 cells here.
    with pytest.raises(RegimeError):
        velocity_gradient_residual(Circle(radius=0.25), small_grid, ThresholdParams(h=1e-4))


@pytest.mark.slow
def test_flat_band_stationary_desk_scale():
    grid = GridSpec(side_length=1.0, n=1024)
    ind0 = rasterize(Band(), grid)
    trajectory = evolve(ind0, FlowConfig(params=ThresholdParams(h=1e-6), steps=10, diagnostics=Diagnostics.area_only()))
    assert trajectory.final.equals(ind0)


@pytest.mark.slow
@pytest.mark.xfail(strict=False, reason=PRE_ASYMPTOTIC)
def test_circle_follows_radius_law():
    grid = GridSpec(side_length=1.0, n=2048)
    r0, h = 0.15, 1e-5
    trajectory = evolve(
        rasterize(Circle(radius=r0), grid),
        FlowConfig(params=ThresholdParams(h=h), steps=20, diagnostics=Diagnostics.area_only()),
    )
    assert trajectory.halted is None
    for record in trajectory.records:
        exact = np.pi * circle_radius_exact(r0, record.t) ** 2
        assert record.area == pytest.approx(exact, rel=2e-2)


@pytest.mark.slow
@pytest.mark.xfail(strict=False, reason=PRE_ASYMPTOTIC)
def test_first_order_convergence():
    grid = GridSpec(side_length=1.0, n=4096)
    report = circle_convergence_study(0.15, grid, [1.6e-5, 8e-6, 4e-6, 2e-6], 6.4e-5)
    assert 0.7 <= report.fitted_slope <= 1.3
    errors = report.errors
    inversions = [i for i in range(1, len(errors)) if errors[i] > errors[i - 1]]
    assert len(inversions) <= 1
    assert all(errors[i] <= 1.1 * errors[i - 1] for i in inversions)


@pytest.mark.slow
@pytest.mark.xfail(strict=False, reason=PRE_ASYMPTOTIC)
@pytest.mark.parametrize("lam", [0.0, 0.5])
def test_circle_velocity_law(lam):
    grid = GridSpec(side_length=1.0, n=2048)
    report = velocity_gradient_residual(Circle(radius=0.15), grid, ThresholdParams(h=1e-5, lam=lam))
    assert report.expected_velocity == pytest.approx(1 / (2 * 0.15**3) - lam / 0.15)
    assert report.relative_error < 0.2


def test_three_scale_cancels_quarter_power():
    grid = GridSpec(side_length=1.0, n=512)
    t_values = [1e-10, 4e-10, 1.6e-9, 6.4e-9]
    single = expansion_probe(0.2, grid, t_values, analytic=True)
    combined = expansion_probe(0.2, grid, t_values, combination=True, analytic=True)
    expected = -special.gamma(0.75) / (2 * np.pi * 0.2)
    assert single.expected_c14 == pytest.approx(expected)
    assert single.fitted_c14 == pytest.approx(expected, rel=0.1)
    assert all(value < 0 for value in single.u_minus_half)
    assert abs(combined.fitted_c14) < 0.05 * abs(single.fitted_c14)


@pytest.mark.slow
@pytest.mark.xfail(strict=False, reason=PRE_ASYMPTOTIC)
def test_interface_band_is_order_t():
    grid = GridSpec(side_length=1.0, n=2048)
    report = band_inclusion_check(Circle(radius=0.15), grid, ThresholdParams(h=1e-5), [1e-5, 2e-5, 5e-5, 1e-4])
    assert 0.8 <= report.slope <= 1.2




def test_exact_coefficients_place_the_shape(small_grid):
    multiplier = semigroup_multiplier(small_grid, 1e-8)
    disc = exact_coefficients(Circle(radius=0.1, center=(0.3, 0.6)), small_grid)
    assert disc[0, 0].real == pytest.approx(np.pi * 0.01)
    x, y = np.array([0.3, 0.6, 0.4]), np.array([0.6, 0.3, 0.6])
    inside, outside, edge = evaluate_series(disc * multiplier, small_grid, x, y)
    assert inside == pytest.approx(1.0, abs=1e-3)
    assert outside == pytest.approx(0.0, abs=1e-3)
    assert edge == pytest.approx(0.5, abs=0.05)

    band = exact_coefficients(Band(axis="x", half_width=0.1), small_grid)
    assert band[0, 0].real == pytest.approx(0.2)
    values = evaluate_series(band * multiplier, small_grid, np.array([0.5, 0.1]), np.array([0.1, 0.5]))
    np.testing.assert_allclose(values, [1.0, 0.0], atol=1e-3)
    with pytest.raises(ValueError):
        exact_coefficients(Rose(), small_grid)


def test_analytic_band_expansion_vanishes(small_grid):
    fit = expansion_probe(None, small_grid, [1e-8, 1e-7, 1e-6], shape=Band(), analytic=True)
    assert abs(fit.fitted_c14) < 1e-6
    assert max(abs(value) for value in fit.u_minus_half) < 1e-6


def test_rose_flow_measures_energy():
    grid = GridSpec(side_length=2.5, n=256)
    trajectory = evolve(rasterize(Rose(), grid), FlowConfig(params=ThresholdParams(h=1e-4), steps=2))
    assert len(trajectory.records) == 3
    assert not trajectory.geometry_errors
    assert trajectory.records[0].energy is not None


@pytest.mark.slow
@pytest.mark.parametrize("shape", [Cassini(), Rose()])
def test_qualitative_presets_complete(shape):
    grid = GridSpec(side_length=5.0, n=1024)
    h = 0.004 if isinstance(shape, Cassini) else 0.003
    trajectory = evolve(rasterize(shape, grid), FlowConfig(params=ThresholdParams(h=h), steps=4, snapshot_every=1))
    assert trajectory.halted is None
    assert len(trajectory.snapshots) >= 4
    assert not trajectory.topology_errors
    assert not trajectory.geometry_errors
    assert all(record.energy is not None for record in trajectory.records)


@pytest.mark.slow
@pytest.mark.xfail(
    strict=False,
    reason="kernel width 3a h^(1/4) is about 0.66 at h = 0.004, wider than the oval's neck; energy rebounds after the neck fills",
)
def test_cassini_energy_never_jumps():
    grid = GridSpec(side_length=5.0, n=1024)
    trajectory = evolve(rasterize(Cassini(), grid), FlowConfig(params=ThresholdParams(h=0.004), steps=4))
    energies = [record.energy for record in trajectory.records]
    assert all(later <= earlier * 1.05 for earlier, later in zip(energies, energies[1:]))
