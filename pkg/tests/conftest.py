import numpy as np
import pytest

from anholo.schemas.clifford import GridSpec
from anholo.schemas.fields import DMetric, NConnectionField
from anholo.schemas.geometry import ChartPoint, Dimensions
from anholo.schemas.lagrange import Lagrangian
from anholo.models.scenarios.selftest_scenario import (
    SPHERE_LAGRANGIAN,
    circle_cover,
    disk_cover,
    torus_cover,
)

SEED = 1234


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture
def sphere_lagrangian():
    return Lagrangian.from_text(SPHERE_LAGRANGIAN, 2)


@pytest.fixture
def sphere_point():
    return ChartPoint(x=[np.pi / 4, 0.3], y=[0.0, 1.0])


@pytest.fixture
def twisted_dims():
    return Dimensions(n=2, m=1)


@pytest.fixture
def twisted_nconnection(twisted_dims):
    return NConnectionField.from_text([["y1"], ["x1"]], twisted_dims)


@pytest.fixture
def analytic_metric(twisted_dims):
    """
    Generic d-metric on (2, 1) with every block depending on x and y
    """
    return DMetric.from_text(
        [["2 + sin(x1*y1)", "0.3*x2"], ["0.3*x2", "1.5 + cos(x2)^2"]],
        [["1 + 0.5*y1^2 + x1^2"]],
        [["0.2*x2*y1"], ["sin(x1) + 0.1*y1^2"]],
        twisted_dims,
    )


@pytest.fixture
def analytic_point():
    return ChartPoint(x=[0.3, -0.2], y=[0.4])


@pytest.fixture
def flat_plane():
    return DMetric.flat(Dimensions(n=1, m=1))


@pytest.fixture
def torus_grid():
    return GridSpec(sizes=[8, 8], lengths=[2 * np.pi, 2 * np.pi])


@pytest.fixture
def circle():
    return circle_cover()


@pytest.fixture
def torus():
    return torus_cover()


@pytest.fixture
def disk():
    return disk_cover()
