import numpy as np
import pytest

from anholo.schemas.fields import DMetric
from anholo.schemas.geometry import ChartPoint, Dimensions
from anholo.models.nodes.expression.evaluator import Evaluator
from anholo.models.components.geometry.nconnection import (
    anholonomy,
    frame_eval,
    nconnection_curvature,
)
from anholo.models.components.geometry.metric import (
    assemble_offdiagonal,
    split_to_dmetric,
)
from anholo.models.components.geometry.dconnection import (
    canonical_dconnection,
    canonical_dconnection_field,
    metric_compatibility,
)
from anholo.models.components.geometry.levi_civita import levi_civita
from anholo.models.components.geometry.torsion import d_torsion
from anholo.models.components.geometry.curvature import d_curvature, ricci_and_scalar
from anholo.models.components.geometry_model import GeometryModel, GeometryModelConf
from anholo.models.components.lagrange_model import sasaki_lift
from anholo.utils.errors import DegenerateMetricError
from tests.oracles import (
    christoffel,
    finite_difference,
    random_dmetric_text,
    riemann,
)


def numeric_omega(M: DMetric, p: ChartPoint) -> np.ndarray:
    """
    Ω^a_ij = e_j N^a_i − e_i N^a_j with e_i = ∂_i − N^b_i ∂_b, by differences
    """
    n = M.dims.n

    def values(u):
        return Evaluator(u[:n], u[n:]).array(M.N.N)

    N = values(p.u)
    dN = finite_difference(values, p.u)  # [i, a, mu]
    e = dN[:, :, :n] - np.einsum("jb,iab->iaj", N, dN[:, :, n:])  # e_j N^a_i
    return np.einsum("iaj->aij", e) - np.einsum("jai->aij", e)


def test_omega_example(twisted_nconnection):
    p = ChartPoint(x=[0.3, 0.0], y=[1.0])
    omega = nconnection_curvature(twisted_nconnection, p)
    assert omega[0, 0, 1] == pytest.approx(-1.3, abs=1e-12)
    assert omega[0, 1, 0] == pytest.approx(1.3, abs=1e-12)


def test_omega_matches_finite_difference(analytic_metric, analytic_point):
    omega = nconnection_curvature(analytic_metric.N, analytic_point)
    expected = numeric_omega(analytic_metric, analytic_point)
    np.testing.assert_allclose(omega, expected, atol=1e-8)
    np.testing.assert_allclose(omega, -np.swapaxes(omega, 1, 2), atol=1e-15)


def test_anholonomy_carries_omega(analytic_metric, analytic_point):
    table = anholonomy(analytic_metric.N, analytic_point)
    omega = nconnection_curvature(analytic_metric.N, analytic_point)
    np.testing.assert_allclose(table.W_v_hh, omega, atol=1e-14)
    np.testing.assert_allclose(table.W, -np.swapaxes(table.W, 1, 2), atol=1e-14)


def test_frame_rows_and_dual(twisted_nconnection):
    p = ChartPoint(x=[0.3, 0.0], y=[1.0])
    frame = frame_eval(twisted_nconnection, p)
    expected = np.array([[1.0, 0.0, -1.0], [0.0, 1.0, -0.3], [0.0, 0.0, 1.0]])
    np.testing.assert_allclose(frame.E, expected, atol=1e-15)
    np.testing.assert_allclose(frame.E @ frame.Einv, np.eye(3), atol=1e-12)


def test_assemble_example():
    M = DMetric.from_text(
        [["1", "0"], ["0", "1"]], [["1"]], [["2"], ["0"]], Dimensions(n=2, m=1)
    )
    G = assemble_offdiagonal(M, ChartPoint(x=[0.1, 0.2], y=[0.3]))
    expected = [[5.0, 0.0, 2.0], [0.0, 1.0, 0.0], [2.0, 0.0, 1.0]]
    np.testing.assert_allclose(G, expected, atol=1e-14)


def test_split_recovers_blocks(analytic_metric, analytic_point):
    G = assemble_offdiagonal(analytic_metric, analytic_point)
    split = split_to_dmetric(G, analytic_metric.dims)
    ev = Evaluator.at(analytic_point)
    np.testing.assert_allclose(split.g, ev.array(analytic_metric.g), atol=1e-12)
    np.testing.assert_allclose(split.h, ev.array(analytic_metric.h), atol=1e-12)
    np.testing.assert_allclose(split.N, ev.array(analytic_metric.N.N), atol=1e-12)
    E = split.frame.E
    blocks = np.zeros((3, 3))
    blocks[:2, :2], blocks[2:, 2:] = split.g, split.h
    np.testing.assert_allclose(E @ G @ E.T, blocks, atol=1e-12)


def test_split_rejects_singular_fiber():
    G = np.diag([1.0, 1.0, 0.0])
    with pytest.raises(DegenerateMetricError):
        split_to_dmetric(G, Dimensions(n=2, m=1))


def test_canonical_dconnection_is_metric_compatible(analytic_metric, analytic_point):
    report = metric_compatibility(analytic_metric, analytic_point)
    assert report.max_residual <= 1e-8


def test_pure_torsions_vanish(analytic_metric, analytic_point):
    D = canonical_dconnection(analytic_metric, analytic_point)
    T = d_torsion(analytic_metric, D, analytic_point)
    assert np.max(np.abs(T.Thhh)) <= 1e-10
    assert np.max(np.abs(T.Tvvv)) <= 1e-10
    np.testing.assert_allclose(T.Thhv, D.Chh, atol=1e-15)
    omega = nconnection_curvature(analytic_metric.N, analytic_point)
    np.testing.assert_allclose(T.Tvhh, omega, atol=1e-14)


def test_holonomic_product_matches_christoffel():
    """
    With N = 0, g = g(x) and h = h(y) the d-connection blocks are the
    Christoffel symbols of each factor
    """
    dims = Dimensions(n=2, m=2)
    M = DMetric.from_text(
        [["1 + x1^2", "0.2*x1*x2"], ["0.2*x1*x2", "2 + sin(x2)"]],
        [["1 + y1^2", "0"], ["0", "exp(y2)"]],
        [["0", "0"], ["0", "0"]],
        dims,
    )
    p = ChartPoint(x=[0.4, 0.7], y=[-0.3, 0.2])
    D = canonical_dconnection(M, p)

    def g(x):
        return Evaluator(x, p.y).array(M.g)

    def h(y):
        return Evaluator(p.x, y).array(M.h)

    np.testing.assert_allclose(D.Lhh, christoffel(g, np.array(p.x)), atol=1e-8)
    np.testing.assert_allclose(D.Cvv, christoffel(h, np.array(p.y)), atol=1e-8)
    np.testing.assert_allclose(D.Lvv, 0.0, atol=1e-15)
    np.testing.assert_allclose(D.Chh, 0.0, atol=1e-15)


FUZZ_DIMS = [(1, 1), (2, 1), (1, 2), (2, 2), (3, 1), (1, 3), (3, 2), (2, 3)]


@pytest.mark.parametrize("seed", range(20))
def test_fuzzed_dmetrics_are_compatible_and_pure(seed):
    rng = np.random.default_rng(seed)
    n, m = FUZZ_DIMS[seed % len(FUZZ_DIMS)]
    dims = Dimensions(n=n, m=m)
    M = DMetric.from_text(*random_dmetric_text(rng, n, m), dims)
    p = ChartPoint.from_u(rng.uniform(-1, 1, n + m), dims)
    assert metric_compatibility(M, p).max_residual <= 1e-8
    T = d_torsion(M, canonical_dconnection(M, p), p)
    assert np.max(np.abs(T.Thhh)) <= 1e-10
    assert np.max(np.abs(T.Tvvv)) <= 1e-10
    np.testing.assert_allclose(
        nconnection_curvature(M.N, p), numeric_omega(M, p), atol=1e-6
    )


def test_levi_civita_distortion(analytic_metric, analytic_point):
    lc = levi_civita(analytic_metric, analytic_point)
    assert lc.residual <= 1e-6


def frame_rows(M: DMetric, u) -> np.ndarray:
    """
    E[α, μ] with e_α = E[α, μ] ∂_μ at the coordinate point u
    """
    n = M.dims.n
    E = np.eye(len(u))
    E[:n, n:] = -Evaluator(u[:n], u[n:]).array(M.N.N)
    return E


def numeric_levi_civita(M: DMetric, p: ChartPoint) -> np.ndarray:
    """
    (∇_{e_α} e_β)^γ from the Christoffel symbols of the assembled metric and
    the differenced frame rows, stored [γ, α, β]
    """
    n = M.dims.n

    def metric(u):
        ev = Evaluator(u[:n], u[n:])
        g, h, N = ev.array(M.g), ev.array(M.h), ev.array(M.N.N)
        return np.block([[g + N @ h @ N.T, N @ h], [h @ N.T, h]])

    E = frame_rows(M, p.u)
    dE = finite_difference(lambda u: frame_rows(M, u), p.u)  # [β, ρ, ν]
    gamma = christoffel(metric, p.u)  # [ρ, ν, σ]
    transported = np.einsum("an,brn->abr", E, dE) + np.einsum(
        "an,bs,rns->abr", E, E, gamma
    )
    return np.einsum("rg,abr->gab", np.linalg.inv(E), transported)


@pytest.mark.parametrize("seed", range(10))
def test_fuzzed_anholonomy_matches_frame_commutators(seed):
    rng = np.random.default_rng(200 + seed)
    n, m = FUZZ_DIMS[seed % len(FUZZ_DIMS)]
    dims = Dimensions(n=n, m=m)
    D = dims.total
    M = DMetric.from_text(*random_dmetric_text(rng, n, m), dims)
    p = ChartPoint.from_u(rng.uniform(-0.8, 0.8, D), dims)
    # f(u) = c·u + ½ uᵀAu
    c = rng.normal(size=D)
    A = rng.normal(size=(D, D))
    A = A + A.T

    def gradient(u):
        return c + A @ u

    def along_frame(u):
        return frame_rows(M, u) @ gradient(u)  # e_β f

    E = frame_rows(M, p.u)
    second = E @ finite_difference(along_frame, p.u).T  # [α, β] = e_α(e_β f)
    commutator = second - second.T
    W = anholonomy(M.N, p).W
    expected = np.einsum("gab,g->ab", W, E @ gradient(p.u))
    np.testing.assert_allclose(commutator, expected, atol=1e-6)


@pytest.mark.parametrize("seed", range(10))
def test_fuzzed_levi_civita_matches_coordinate_christoffel(seed):
    rng = np.random.default_rng(100 + seed)
    n, m = FUZZ_DIMS[seed % len(FUZZ_DIMS)]
    dims = Dimensions(n=n, m=m)
    M = DMetric.from_text(*random_dmetric_text(rng, n, m), dims)
    p = ChartPoint.from_u(rng.uniform(-0.8, 0.8, n + m), dims)
    lc = levi_civita(M, p)
    np.testing.assert_allclose(lc.coefficients, numeric_levi_civita(M, p), atol=1e-6)
    assert lc.residual <= 1e-8

    ev = Evaluator.at(p)
    g, h = ev.array(M.g), ev.array(M.h)

    def nconnection(u):
        return Evaluator(u[:n], u[n:]).array(M.N.N)

    dyN = finite_difference(nconnection, p.u)[:, :, n:]  # [k, a, b] = ∂_b N^a_k
    omega = numeric_omega(M, p)
    P = lc.distortion
    np.testing.assert_allclose(P["P_hhh"], 0.0, atol=1e-6)
    np.testing.assert_allclose(P["P_vvv"], 0.0, atol=1e-6)
    np.testing.assert_allclose(P["P_vvh"], np.einsum("kab->abk", dyN), atol=1e-6)
    np.testing.assert_allclose(
        P["P_hhv"],
        -0.5 * np.einsum("ik,akj,ca->ijc", np.linalg.inv(g), omega, h),
        atol=1e-6,
    )


def test_levi_civita_distortion_of_linear_fiber_nconnection():
    """
    g = I, h = (1), N^3_1 = y3: the only distortion is P^3_31 = e_3 N^3_1 = 1
    """
    dims = Dimensions(n=2, m=1)
    M = DMetric.from_text([["1", "0"], ["0", "1"]], [["1"]], [["y1"], ["0"]], dims)
    p = ChartPoint(x=[0.3, 0.2], y=[0.5])
    lc = levi_civita(M, p)
    assert lc.distortion["P_vvh"][0, 0, 0] == pytest.approx(1.0, abs=1e-12)
    assert lc.distortion["P_vvh"][0, 0, 1] == pytest.approx(0.0, abs=1e-12)
    assert lc.coefficients[2, 2, 0] == pytest.approx(-1.0, abs=1e-12)
    np.testing.assert_allclose(lc.distortion["P_hhv"], 0.0, atol=1e-12)
    assert lc.residual <= 1e-12
    np.testing.assert_allclose(lc.coefficients, numeric_levi_civita(M, p), atol=1e-6)


def test_product_curvature_matches_coordinate_riemann():
    """
    With N = 0, g = g(x) and h = h(y) the hh and vv blocks are the Riemann
    tensors of each factor and every mixed block vanishes
    """
    dims = Dimensions(n=2, m=2)
    M = DMetric.from_text(
        [["1 + x1^2", "0.2*x1*x2"], ["0.2*x1*x2", "2 + sin(x2)"]],
        [["1 + y2^2", "0"], ["0", "2 + sin(y1)"]],
        [["0", "0"], ["0", "0"]],
        dims,
    )
    p = ChartPoint(x=[0.4, 0.7], y=[-0.3, 0.2])
    R = d_curvature(M, canonical_dconnection_field(M), p)

    def g(x):
        return Evaluator(x, p.y).array(M.g)

    def h(y):
        return Evaluator(p.x, y).array(M.h)

    base = riemann(g, np.array(p.x))  # [ρ, σ, μ, ν] = R^ρ_σμν
    fiber = riemann(h, np.array(p.y))
    assert np.max(np.abs(base)) > 1e-3
    assert np.max(np.abs(fiber)) > 1e-3
    # R_hhhh[i, h, j, k] = (R(e_k, e_j) e_h)^i = R^i_hkj
    np.testing.assert_allclose(R.R_hhhh, np.swapaxes(base, 2, 3), atol=1e-5)
    np.testing.assert_allclose(R.R_vvvv, np.swapaxes(fiber, 2, 3), atol=1e-5)
    for block in (R.R_vvhh, R.R_hhhv, R.R_vvhv, R.R_hhvv):
        np.testing.assert_allclose(block, 0.0, atol=1e-12)


def test_curvature_antisymmetric(analytic_metric, analytic_point):
    R = d_curvature(
        analytic_metric, canonical_dconnection_field(analytic_metric), analytic_point
    )
    for block in (R.R_hhhh, R.R_vvhh, R.R_hhvv, R.R_vvvv):
        np.testing.assert_allclose(block, -np.swapaxes(block, -1, -2), atol=1e-10)


def test_flat_metric_has_no_curvature():
    M = DMetric.flat(Dimensions(n=2, m=2))
    ricci = ricci_and_scalar(
        M, canonical_dconnection_field(M), ChartPoint(x=[0.1, 0.2], y=[0.3, 0.4])
    )
    assert ricci.scalar == pytest.approx(0.0, abs=1e-15)


def test_sphere_sasaki_christoffel_and_scalar(sphere_lagrangian, sphere_point):
    M = sasaki_lift(sphere_lagrangian)
    D = canonical_dconnection(M, sphere_point)
    assert D.Lhh[0, 1, 1] == pytest.approx(-0.5, abs=1e-12)
    ricci = ricci_and_scalar(M, canonical_dconnection_field(M), sphere_point)
    assert ricci.h_scalar == pytest.approx(2.0, abs=1e-6)


def test_sphere_fiber_vertical_scalar():
    M = DMetric.from_text(
        [["1"]], [["1", "0"], ["0", "sin(y1)^2"]], [["0", "0"]], Dimensions(n=1, m=2)
    )
    p = ChartPoint(x=[0.2], y=[np.pi / 3, 0.1])
    ricci = ricci_and_scalar(M, canonical_dconnection_field(M), p)
    assert ricci.v_scalar == pytest.approx(2.0, abs=1e-6)
    assert ricci.h_scalar == pytest.approx(0.0, abs=1e-12)


def test_geometry_model_runs_every_task(analytic_metric, analytic_point):
    model = GeometryModel(GeometryModelConf(probes=[analytic_point]))
    results = model.run(analytic_metric, list(GeometryModel.TASKS))
    assert list(results) == list(GeometryModel.TASKS)
    for tag, (block, checks) in results.items():
        assert len(block["probes"]) == 1
        assert all(check.passed for check in checks), tag


def test_geometry_model_rejects_unknown_task(analytic_metric, analytic_point):
    model = GeometryModel(GeometryModelConf(probes=[analytic_point]))
    with pytest.raises(ValueError):
        model.task("holonomy", analytic_metric)
