import numpy as np
import pytest
from pydantic import ValidationError

from anholo.schemas.geometry import ChartPoint, Dimensions
from anholo.schemas.lagrange import Lagrangian
from anholo.models.nodes.expression.evaluator import Evaluator
from anholo.models.nodes.expression.parser import parse
from anholo.models.components.lagrange_model import (
    LagrangeModel,
    LagrangeModelConf,
    almost_complex,
    canonical_nconnection,
    energy,
    euler_lagrange_residual,
    finsler_check,
    geodesic_integrate,
    hessian_metric,
    sasaki_lift,
    semispray,
)
from tests.oracles import (
    christoffel,
    finite_difference,
    random_block,
    riemannian_lagrangian_text,
)


def sphere_L(u):
    x1, _, y1, y2 = u
    return np.array(y1**2 + np.sin(x1) ** 2 * y2**2)


def numeric_semispray(L, u, n):
    """
    G^i = ¼ g^ij (∂²L/∂y^j∂x^k y^k − ∂L/∂x^j), g = ½ ∂²L/∂y∂y, by differences
    """
    gradient = finite_difference(L, u, step=1e-4)
    hessian = finite_difference(
        lambda v: finite_difference(L, v, step=1e-4), u, step=1e-4
    )
    g = 0.5 * hessian[n:, n:]
    mixed = hessian[n:, :n] @ u[n:]
    return 0.25 * np.linalg.solve(g, mixed - gradient[:n])


def test_sphere_hessian(sphere_lagrangian, sphere_point):
    g, _ = hessian_metric(sphere_lagrangian, sphere_point)
    np.testing.assert_allclose(g, [[1.0, 0.0], [0.0, 0.5]], atol=1e-12)


def test_sphere_semispray_and_nconnection(sphere_lagrangian, sphere_point):
    ev = Evaluator.at(sphere_point)
    G = ev.array(semispray(sphere_lagrangian).G)
    N = ev.array(canonical_nconnection(sphere_lagrangian).N)
    assert G[0] == pytest.approx(-0.25, abs=1e-12)
    assert G[1] == pytest.approx(0.0, abs=1e-12)
    assert N[1, 0] == pytest.approx(-0.5, abs=1e-12)


def test_semispray_matches_finite_difference(sphere_lagrangian, rng):
    for _ in range(3):
        u = np.concatenate([rng.uniform(0.3, 1.2, 2), rng.uniform(-1, 1, 2)])
        G = Evaluator(u[:2], u[2:]).array(semispray(sphere_lagrangian).G)
        np.testing.assert_allclose(G, numeric_semispray(sphere_L, u, 2), atol=1e-5)


def test_nconnection_is_semispray_derivative(sphere_lagrangian, sphere_point):
    G = semispray(sphere_lagrangian).G

    def values(u):
        return Evaluator(u[:2], u[2:]).array(G)

    dG = finite_difference(values, sphere_point.u)  # [i, mu]
    N = Evaluator.at(sphere_point).array(canonical_nconnection(sphere_lagrangian).N)
    np.testing.assert_allclose(N, dG[:, 2:].T, atol=1e-8)


@pytest.mark.parametrize("seed", range(10))
def test_riemannian_nconnection_matches_christoffel(seed):
    # N^i_j = Γ^i_jk(x) y^k for L = g_ij(x) y^i y^j
    rng = np.random.default_rng(100 + seed)
    n = 2 if seed % 2 else 3
    rows = random_block(rng, n, "x", "y", 0)
    Lag = Lagrangian.from_text(riemannian_lagrangian_text(rows), n)
    x, y = rng.uniform(-1, 1, n), rng.uniform(-1, 1, n)
    metric = [[parse(e, Lag.dims) for e in row] for row in rows]

    def g(v):
        return Evaluator(v, y).array(metric)

    gamma = christoffel(g, x)
    N = Evaluator(x, y).array(canonical_nconnection(Lag).N)
    np.testing.assert_allclose(N, np.einsum("ijk,k->ji", gamma, y), atol=1e-8)


def test_equator_is_a_geodesic(sphere_lagrangian):
    trajectory = geodesic_integrate(
        semispray(sphere_lagrangian), [np.pi / 2, 0.0], [0.0, 1.0], 1.0, 200
    )
    np.testing.assert_allclose(trajectory.x[:, 0], np.pi / 2, atol=1e-6)
    assert trajectory.x[-1, 1] == pytest.approx(1.0, abs=1e-6)


def test_geodesic_conserves_energy(sphere_lagrangian, sphere_point):
    trajectory = geodesic_integrate(
        semispray(sphere_lagrangian), sphere_point.x, [0.3, 0.8], 1.0, 1000
    )
    E = energy(sphere_lagrangian, trajectory)
    assert np.max(np.abs(E - E[0])) <= 1e-6
    assert euler_lagrange_residual(sphere_lagrangian, trajectory) <= 1e-5


def test_geodesic_needs_a_step(sphere_lagrangian, sphere_point):
    with pytest.raises(ValueError):
        geodesic_integrate(
            semispray(sphere_lagrangian), sphere_point.x, sphere_point.y, 1.0, 0
        )


def test_sasaki_lift_blocks(sphere_lagrangian, sphere_point):
    M = sasaki_lift(sphere_lagrangian)
    assert M.dims == Dimensions(n=2, m=2)
    ev = Evaluator.at(sphere_point)
    g, _ = hessian_metric(sphere_lagrangian, sphere_point)
    np.testing.assert_allclose(ev.array(M.g), g, atol=1e-14)
    np.testing.assert_allclose(ev.array(M.h), g, atol=1e-14)
    np.testing.assert_allclose(
        ev.array(M.N.N),
        ev.array(canonical_nconnection(sphere_lagrangian).N),
        atol=1e-14,
    )


def test_almost_complex_structure(sphere_lagrangian, sphere_point):
    J = almost_complex(sphere_lagrangian, sphere_point)
    assert J.square_residual <= 1e-10
    assert J.compatibility_residual <= 1e-10


def test_quartic_root_is_finsler():
    Lag = Lagrangian.from_text("(y1^4 + y2^4)^0.5", 2)
    report = finsler_check(Lag, ChartPoint(x=[0.1, 0.2], y=[0.3, 0.7]))
    assert report.testable and report.is_finsler
    assert report.max_deviation < 1e-9


@pytest.mark.parametrize("seed", range(4))
def test_finsler_nconnection_is_one_homogeneous(seed):
    """
    For a Finsler L the Cartan N-connection satisfies N(x, λy) = λ N(x, y)
    """
    rng = np.random.default_rng(300 + seed)
    Lag = Lagrangian.from_text("(exp(x2)*y1^4 + (1 + x1^2)*y2^4)^0.5", 2)
    N = canonical_nconnection(Lag).N
    x = list(rng.uniform(-1.0, 1.0, 2))
    y = rng.uniform(0.3, 1.0, 2) * rng.choice([-1.0, 1.0], 2)
    base = Evaluator(x, list(y)).array(N)
    assert np.max(np.abs(base)) > 1e-3
    for scale in rng.uniform(0.2, 4.0, 3):
        scaled = Evaluator(x, list(scale * y)).array(N)
        np.testing.assert_allclose(scaled, scale * base, rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("text", ["y1^2 + y2^2", "(1 + x1^2)*y1^2 + y2^2"])
def test_homogeneous_quadratics_are_finsler(text):
    report = finsler_check(
        Lagrangian.from_text(text, 2), ChartPoint(x=[0.5, 0.1], y=[0.3, 0.7])
    )
    assert report.is_finsler


def test_linear_term_breaks_homogeneity():
    Lag = Lagrangian.from_text("y1^2 + y2^2 + x1*y1", 2)
    report = finsler_check(Lag, ChartPoint(x=[0.5, 0.1], y=[0.3, 0.7]))
    assert report.testable
    assert not report.is_finsler


def test_negative_lagrangian_is_untestable():
    Lag = Lagrangian.from_text("-y1^2 - y2^2", 2)
    report = finsler_check(Lag, ChartPoint(x=[0.5, 0.1], y=[0.3, 0.7]))
    assert not report.testable
    assert report.reason


def test_finsler_check_excludes_null_section(sphere_lagrangian):
    with pytest.raises(ValueError):
        finsler_check(sphere_lagrangian, ChartPoint(x=[0.5, 0.1], y=[0.0, 0.0]))


def test_lagrangian_needs_tangent_bundle():
    dims = Dimensions(n=2, m=1)
    with pytest.raises(ValidationError):
        Lagrangian(dims=dims, L=parse("y1^2", dims))


def test_lagrange_model_tasks(sphere_lagrangian, sphere_point):
    model = LagrangeModel(
        LagrangeModelConf(probes=[sphere_point], geodesic_steps=100)
    )
    for tag in LagrangeModel.TASKS:
        block, checks = model.task(tag, sphere_lagrangian)
        assert len(block["probes"]) == 1
        assert all(check.passed for check in checks), tag
    geodesic, _ = model.task("geodesic", sphere_lagrangian)
    assert geodesic["steps"] == 100
    assert geodesic["energy_drift"] <= 1e-6


def test_lagrange_model_run_reports_each_point(sphere_lagrangian, sphere_point):
    model = LagrangeModel(LagrangeModelConf(probes=[sphere_point, sphere_point]))
    blocks = model.run(sphere_lagrangian)
    assert len(blocks) == 2
    assert blocks[0]["sasaki_h_scalar"] == pytest.approx(2.0, abs=1e-6)
    assert blocks[0]["finsler"]["is_finsler"]
