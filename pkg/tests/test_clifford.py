import numpy as np
import pytest

from anholo.schemas.fields import DMetric
from anholo.schemas.geometry import ChartPoint, Dimensions
from anholo.models.components.clifford.gamma import build_gamma, distinguished_gamma
from anholo.models.components.clifford.spin import (
    dirac_symbol,
    frame_gamma,
    spin_dconnection,
)
from anholo.models.components.clifford_model import CliffordModel, CliffordModelConf
from anholo.models.components.lagrange_model import sasaki_lift
from anholo.utils.errors import EnvelopeError, NotPositiveDefiniteError


@pytest.mark.parametrize("d", range(1, 9))
def test_gamma_clifford_relation(d):
    rep = build_gamma(d)
    assert rep.k == 2 ** (d // 2)
    assert rep.anticommutator_residual() <= 1e-13
    assert rep.hermiticity_residual() <= 1e-13


@pytest.mark.parametrize("d", [0, 9])
def test_gamma_dimension_envelope(d):
    with pytest.raises(EnvelopeError):
        build_gamma(d)


@pytest.mark.parametrize("n, m", [(1, 1), (2, 1), (2, 2), (3, 2)])
def test_distinguished_couple(n, m):
    couple = distinguished_gamma(Dimensions(n=n, m=m))
    full = build_gamma(n + m)
    np.testing.assert_array_equal(couple.horizontal, full.gammas[:n])
    np.testing.assert_array_equal(couple.vertical, full.gammas[n:])
    assert couple.h_rep.dim == n
    assert couple.v_rep.dim == m
    for gi in couple.horizontal:
        for ga in couple.vertical:
            np.testing.assert_allclose(gi @ ga + ga @ gi, 0.0, atol=1e-13)


def test_frame_gamma_relation(sphere_lagrangian, sphere_point):
    M = sasaki_lift(sphere_lagrangian)
    frame = frame_gamma(build_gamma(4), M, sphere_point)
    assert frame.anticommutator_residual <= 1e-12
    # g^22 = 2 on the sphere at x1 = pi/4
    square = frame.gammas[1] @ frame.gammas[1]
    np.testing.assert_allclose(square, 2.0 * np.eye(4), atol=1e-12)


def test_frame_gamma_needs_positive_blocks():
    M = DMetric.from_text([["-1"]], [["1"]], [["0"]], Dimensions(n=1, m=1))
    with pytest.raises(NotPositiveDefiniteError):
        frame_gamma(build_gamma(2), M, ChartPoint(x=[0.1], y=[0.2]))


def test_spin_connection_is_anti_hermitian(analytic_metric, analytic_point):
    spin = spin_dconnection(analytic_metric, build_gamma(3), analytic_point)
    assert spin.anti_hermitian_residual <= 1e-10
    np.testing.assert_allclose(spin.rho, spin.rho_h + spin.rho_v, atol=1e-14)


def test_spin_connection_vanishes_when_flat():
    M = DMetric.flat(Dimensions(n=2, m=1))
    spin = spin_dconnection(M, build_gamma(3), ChartPoint(x=[0.1, 0.2], y=[0.3]))
    np.testing.assert_allclose(spin.rho, 0.0, atol=1e-15)


def test_dirac_symbol_squares_to_norm(analytic_metric, analytic_point, rng):
    for _ in range(5):
        symbol = dirac_symbol(analytic_metric, analytic_point, rng.normal(size=3))
        assert symbol.square_residual <= 1e-12
        assert symbol.norm_squared > 0
        assert symbol.inverse_norm * np.sqrt(symbol.norm_squared) == pytest.approx(
            1.0, rel=1e-10
        )


def test_dirac_symbol_on_sphere(sphere_lagrangian, sphere_point):
    M = sasaki_lift(sphere_lagrangian)
    symbol = dirac_symbol(M, sphere_point, [0, 1, 0, 0])
    assert symbol.norm_squared == pytest.approx(2.0, abs=1e-12)


def test_dirac_symbol_covector_length(analytic_metric, analytic_point):
    with pytest.raises(ValueError):
        dirac_symbol(analytic_metric, analytic_point, [1.0, 0.0])


def test_clifford_model_point_tasks(analytic_metric, analytic_point):
    model = CliffordModel(CliffordModelConf(probes=[analytic_point], seed=7))
    for tag in ("gamma",) + CliffordModel.POINT_TASKS:
        block, checks = model.task(tag, analytic_metric)
        assert checks
        assert all(check.passed for check in checks), tag


def test_clifford_model_needs_grid_for_lattice_tasks(analytic_metric):
    model = CliffordModel(CliffordModelConf())
    with pytest.raises(ValueError):
        model.task("dirac_spectrum", analytic_metric)
