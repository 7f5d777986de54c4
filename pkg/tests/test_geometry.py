import warnings

import numpy as np
import pytest

from wmbo.core.errors import ClearanceWarning, CurveTopologyError, RequiresResamplingError
from wmbo.core.geometry import (
    component_count,
    curve_area,
    curve_centroid,
    curvature_smoothing,
    curve_geometry,
    curve_length,
    grid_geometry,
    l2_gradient,
    outward_normals,
    predicted_speed,
    rasterize,
    resample_for_grid,
    resample_uniform,
    seam_clearance,
    spacing_spread,
    willmore_energy,
)
from wmbo.models.curves import PolyCurve
from wmbo.core.flow import interface_contours
from wmbo.models.fields import GridSpec, IndicatorField
from wmbo.models.shapes import Band, Cassini, Circle, HalfPlane, Rose, Shape


def test_shape_dsl():
    assert Shape.parse("circle:0.15") == Circle(radius=0.15)
    assert Shape.parse("circle:0.2,0.3,0.1") == Circle(radius=0.1, center=(0.2, 0.3))
    assert Shape.parse("cassini:0.6825,0.678") == Cassini()
    assert isinstance(Shape.parse("rose"), Rose)
    assert Shape.parse("band:x,0.2") == Band(axis="x", half_width=0.2)
    assert Shape.parse(Cassini().to_spec()) == Cassini()
    with pytest.raises(ValueError):
        Shape.parse("ellipse:1,2")
    with pytest.raises(ValueError):
        Shape.parse("circle:-1")


def test_rasterized_circle_area(small_grid, circle_indicator):
    assert circle_indicator.area == pytest.approx(np.pi * 0.25**2, rel=2e-2)
    assert seam_clearance(circle_indicator) > 4


def test_clearance_warnings(small_grid):
    with pytest.warns(ClearanceWarning):
        rasterize(Circle(radius=0.49), small_grid)
    with pytest.warns(ClearanceWarning):
        rasterize(HalfPlane(normal=(0.0, 1.0), offset=0.0), small_grid)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rasterize(Band(), small_grid)
        rasterize(Circle(radius=0.25), small_grid)


def test_component_count(small_grid, circle_indicator, band_indicator):
    assert component_count(circle_indicator) == 1
    assert component_count(band_indicator) == 1

    values = np.zeros((128, 128), dtype=np.uint8)
    values[60:70, :4] = 1
    values[60:70, -4:] = 1
    assert component_count(IndicatorField(grid=small_grid, values=values)) == 1
    values[10:20, 40:50] = 1
    assert component_count(IndicatorField(grid=small_grid, values=values)) == 2
    assert component_count(IndicatorField(grid=small_grid, values=np.zeros((128, 128)))) == 0


def test_polygon_measures(make_polygon):
    m = 512
    curve = make_polygon(radius=1.0, m=m, center=(0.3, 0.2))
    assert curve_area(curve) == pytest.approx(0.5 * m * np.sin(2 * np.pi / m), rel=1e-12)
    assert curve_length(curve) == pytest.approx(2 * m * np.sin(np.pi / m), rel=1e-12)
    np.testing.assert_allclose(curve_centroid(curve), (0.3, 0.2), atol=1e-12)


def test_area_needs_closed_curve():
    open_curve = PolyCurve(vertices=np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]), closed=False)
    with pytest.raises(CurveTopologyError):
        curve_area(open_curve)
    xs = np.arange(8) / 8.0
    wrapping = PolyCurve(vertices=np.column_stack([xs, np.full(8, 0.5)]), shift=(1.0, 0.0))
    with pytest.raises(CurveTopologyError):
        curve_area(wrapping)


def test_resample_uniform(make_polygon):
    curve = resample_uniform(make_polygon(m=300), 64)
    assert len(curve) == 64
    lengths = np.hypot(*np.diff(np.vstack([curve.vertices, curve.vertices[:1]]), axis=0).T)
    assert np.ptp(lengths) < 1e-2 * lengths.mean()
    with pytest.raises(ValueError):
        resample_uniform(curve, 8)


def test_circle_curvature_and_gradient(make_polygon):
    radius = 0.5
    geom = curve_geometry(make_polygon(radius=radius, m=1024))
    np.testing.assert_allclose(geom.kappa, -1.0 / radius, rtol=1e-4)
    np.testing.assert_allclose(geom.kappa_ss, 0.0, atol=1e-4)
    assert geom.length == pytest.approx(2 * np.pi * radius, rel=1e-4)

    assert willmore_energy(geom) == pytest.approx(np.pi / radius, rel=1e-4)
    assert willmore_energy(geom, lam=0.5) == pytest.approx(np.pi / radius + 0.5 * 2 * np.pi * radius, rel=1e-4)

    lam = 0.5
    expected = -1.0 / (2 * radius**3) + lam / radius
    np.testing.assert_allclose(l2_gradient(geom, lam), expected, rtol=1e-3)
    assert predicted_speed(geom, lam) == pytest.approx(abs(expected), rel=1e-3)


def test_geometry_requires_uniform_spacing():
    angles = np.sort(np.concatenate([np.linspace(0, np.pi, 40, endpoint=False), np.linspace(np.pi, 2 * np.pi, 80, endpoint=False)]))
    curve = PolyCurve(vertices=np.column_stack([np.cos(angles), np.sin(angles)]))
    with pytest.raises(RequiresResamplingError):
        curve_geometry(curve)


def test_outward_normals_point_away(make_polygon):
    curve = make_polygon(radius=1.0, m=128)
    normals = outward_normals(curve)
    np.testing.assert_allclose(np.sum(normals * curve.vertices, axis=1), 1.0, atol=1e-3)


def test_polycurve_rejects_degenerate_curves():
    with pytest.raises(ValueError):
        PolyCurve(vertices=np.zeros((5, 3)))
    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(CurveTopologyError):
        PolyCurve(vertices=square)
    PolyCurve(vertices=square, closed=False)

    angles = 2.0 * np.pi * np.arange(8) / 8
    octagon = np.column_stack([np.cos(angles), np.sin(angles)])
    PolyCurve(vertices=octagon)
    with pytest.raises(CurveTopologyError):
        PolyCurve(vertices=np.vstack([octagon[:3], octagon[2:]]))
    with pytest.raises(CurveTopologyError):
        PolyCurve(vertices=np.column_stack([np.arange(8.0), np.zeros(8)]))
    with pytest.raises(CurveTopologyError):
        PolyCurve(vertices=np.array([[0.5, 0.5]]), closed=False)


def _ellipse(a, b, count):
    t = 2.0 * np.pi * np.arange(count) / count
    return PolyCurve(vertices=np.column_stack([a * np.cos(t), b * np.sin(t)]))


def test_ellipse_curvature_converges_second_order():
    a, b = 1.0, 0.5
    dense = _ellipse(a, b, 100000)
    errors = []
    for m in (64, 128, 256):
        geom = curve_geometry(resample_uniform(dense, m))
        x, y = geom.curve.vertices.T
        t = np.arctan2(y / b, x / a)
        exact = -a * b / (a**2 * np.sin(t) ** 2 + b**2 * np.cos(t) ** 2) ** 1.5
        errors.append(float(np.max(np.abs(geom.kappa - exact))))
    assert errors[0] / errors[1] > 3.0
    assert errors[1] / errors[2] > 3.0


def _crosses(p1, p2, q1, q2):
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    return orient(p1, p2, q1) * orient(p1, p2, q2) < 0 and orient(q1, q2, p1) * orient(q1, q2, p2) < 0


def test_coarse_resampling_stays_simple():
    angles = 2.0 * np.pi * np.arange(2000) / 2000
    radius = 1.0 + 0.3 * np.cos(3 * angles)
    trefoil = PolyCurve(vertices=np.column_stack([radius * np.cos(angles), radius * np.sin(angles)]))
    coarse = resample_uniform(trefoil, 16)
    starts, ends = coarse.edges()
    m = len(coarse)
    for i in range(m):
        for j in range(i + 2, m):
            if i == 0 and j == m - 1:
                continue
            assert not _crosses(starts[i], ends[i], starts[j], ends[j]), (i, j)
    assert curve_area(coarse) > 0


def test_raster_circle_speed_and_energy():
    radius = 0.25
    grid = GridSpec(side_length=1.0, n=512)
    (contour,) = interface_contours(rasterize(Circle(radius=radius), grid))
    geom = grid_geometry(contour, grid)
    assert predicted_speed(geom) == pytest.approx(1.0 / (2 * radius**3), rel=0.1)
    assert willmore_energy(geom) == pytest.approx(np.pi / radius, rel=0.05)
    assert np.mean(-geom.kappa) == pytest.approx(1.0 / radius, rel=0.05)
    assert abs(np.mean(geom.kappa_ss)) < 0.05 / radius**3


def test_smoothing_keeps_polygon_curvature(make_polygon):
    radius = 0.5
    geom = curve_geometry(make_polygon(radius=radius, m=1024), smoothing=0.05)
    np.testing.assert_allclose(geom.kappa, -1.0 / radius, rtol=1e-2)
    assert len(geom.curve) == 1024
    assert curvature_smoothing(make_polygon(radius=radius, m=1024), GridSpec(side_length=4.0, n=512)) > 0


def test_grid_resampling_evens_out_rose_contour():
    grid = GridSpec(side_length=2.5, n=256)
    curves = interface_contours(rasterize(Rose(), grid))
    assert curves
    for curve in curves:
        resampled = resample_for_grid(curve, grid)
        assert spacing_spread(resampled) <= 0.01
        geom = grid_geometry(curve, grid)
        assert np.isfinite(willmore_energy(geom))
