import sys
import warnings
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import groupoidlab as gl
from groupoidlab.errors import DecayWarning


@pytest.fixture(autouse=True)
def _quiet_decay_warnings():
    # coarse-grid tests legitimately warn; specific tests re-enable with pytest.warns
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DecayWarning)
        yield


@pytest.fixture(scope="session")
def pair1():
    return gl.builtin_chart("pair", n=1)


@pytest.fixture(scope="session")
def pair1_grid64():
    return gl.GridSpec(
        base=(gl.Axis.centered(6.0, 64),), fiber=(gl.Axis.centered(8.0, 64),)
    )


@pytest.fixture(scope="session")
def pair1_data64(pair1, pair1_grid64):
    return gl.extract_algebroid(pair1, pair1_grid64.base_points_flat())


@pytest.fixture(scope="session")
def heisenberg():
    return gl.builtin_chart("heisenberg")


@pytest.fixture(scope="session")
def heis_grid16():
    return gl.GridSpec(
        base=(), fiber=tuple(gl.Axis.centered(5.5, 16) for _ in range(3))
    )


@pytest.fixture(scope="session")
def heis_data16(heisenberg, heis_grid16):
    return gl.extract_algebroid(heisenberg, heis_grid16.base_points_flat())


@pytest.fixture(scope="session")
def gauss11():
    return gl.SymbolSpec.gaussian(1, 1)


@pytest.fixture(scope="session")
def xxigauss11():
    return gl.SymbolSpec.gaussian(1, 1, x_powers=[1], xi_powers=[1])


def fiber_grid_1d(half_width=8.0, intervals=256):
    return gl.GridSpec(base=(), fiber=(gl.Axis.centered(half_width, intervals),))
