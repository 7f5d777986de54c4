"""Shared fixtures and the --runslow switch."""

import numpy as np
import pytest

from wmbo.core.geometry import rasterize
from wmbo.models.curves import PolyCurve
from wmbo.models.fields import GridSpec
from wmbo.models.shapes import Band, Circle


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run desk-scale acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="desk-scale run; use --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def small_grid():
    return GridSpec(side_length=1.0, n=128)


@pytest.fixture
def circle_indicator(small_grid):
    return rasterize(Circle(radius=0.25), small_grid)


@pytest.fixture
def band_indicator(small_grid):
    return rasterize(Band(axis="y", half_width=0.25), small_grid)


def polygon_circle(radius=1.0, m=512, center=(0.0, 0.0)):
    """Counterclockwise regular m-gon inscribed in a circle."""
    angles = 2.0 * np.pi * np.arange(m) / m
    vertices = np.column_stack([center[0] + radius * np.cos(angles), center[1] + radius * np.sin(angles)])
    return PolyCurve(vertices=vertices, closed=True)


@pytest.fixture
def unit_polygon():
    return polygon_circle()


@pytest.fixture
def make_polygon():
    return polygon_circle
