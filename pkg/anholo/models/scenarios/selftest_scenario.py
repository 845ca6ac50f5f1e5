from functools import lru_cache
from typing import Callable, Dict, List, NamedTuple

import numpy as np
import pandas as pd
from scipy.spatial.transform import Rotation

from anholo.schemas.cech import Cochain, Cover, GroupSpec, LocalSections
from anholo.schemas.clifford import GridSpec
from anholo.schemas.conf.run import SelftestConf
from anholo.schemas.fields import DMetric, NConnectionField
from anholo.schemas.geometry import ChartPoint, Dimensions
from anholo.schemas.lagrange import Lagrangian
from anholo.models.nodes.expression.parser import parse, parse_constant
from anholo.models.nodes.expression.printer import to_text
from anholo.models.nodes.expression.calculus import adapted_derivative, d_x, d_y
from anholo.models.nodes.expression.evaluator import Evaluator, evaluate
from anholo.models.components.geometry.nconnection import (
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
from anholo.models.components.geometry.curvature import ricci_and_scalar
from anholo.models.components.lagrange_model import (
    almost_complex,
    canonical_nconnection,
    energy,
    finsler_check,
    geodesic_integrate,
    hessian_metric,
    sasaki_lift,
    semispray,
)
from anholo.models.components.clifford.gamma import build_gamma
from anholo.models.components.clifford.spin import (
    dirac_symbol,
    frame_gamma,
    spin_dconnection,
)
from anholo.models.components.clifford.dirac import (
    assemble_dirac,
    dirac_spectrum,
    lichnerowicz_residual,
)
from anholo.models.components.cech_model import (
    cocycle_basis,
    cocycle_defect,
    cocycle_of_chain,
    coboundary_matrix,
    glue_sections,
    pre_hilbert_product,
    spin_obstruction,
    z2_cohomology,
)
from anholo.models.components.chern_model import (
    chern_character,
    chern_class_form,
    curvature_form_from_nconnection,
    curvature_form_from_synthetic,
    index_pairing,
    integrate_form,
    monopole_curvature,
    unit_class,
)
from anholo.utils.errors import ExpressionDomainError, VariableIndexError
from anholo.utils.logging import LOGGER
from anholo.utils.progress_bar import progress_bar as pb


SPHERE_LAGRANGIAN = "y1^2 + sin(x1)^2*y2^2"
SPHERE_POINT = ChartPoint(x=[np.pi / 4, 0.3], y=[0.0, 1.0])
TWISTED_DIMS = Dimensions(n=2, m=1)
TWISTED_POINT = ChartPoint(x=[0.3, 0.0], y=[1.0])
ANALYTIC_POINT = ChartPoint(x=[0.3, -0.2], y=[0.4])

# fixtures are built on first use, inside the checks that need them


@lru_cache(maxsize=None)
def sphere_lagrangian() -> Lagrangian:
    return Lagrangian.from_text(SPHERE_LAGRANGIAN, 2)


@lru_cache(maxsize=None)
def sphere_dmetric() -> DMetric:
    return sasaki_lift(sphere_lagrangian())


@lru_cache(maxsize=None)
def sphere_fiber_dmetric() -> DMetric:
    """
    Flat line times the unit 2-sphere as fiber
    """
    return DMetric.from_text(
        [["1"]], [["1", "0"], ["0", "sin(y1)^2"]], [["0", "0"]], Dimensions(n=1, m=2)
    )


@lru_cache(maxsize=None)
def twisted_nconnection() -> NConnectionField:
    return NConnectionField.from_text([["y1"], ["x1"]], TWISTED_DIMS)


@lru_cache(maxsize=None)
def analytic_dmetric() -> DMetric:
    return DMetric.from_text(
        [["2 + sin(x1*y1)", "0.3*x2"], ["0.3*x2", "1.5 + cos(x2)^2"]],
        [["1 + 0.5*y1^2 + x1^2"]],
        [["0.2*x2*y1"], ["sin(x1) + 0.1*y1^2"]],
        TWISTED_DIMS,
    )


def torus_grid() -> GridSpec:
    return GridSpec(sizes=[8, 8], lengths=[2 * np.pi, 2 * np.pi])


def box_grid() -> GridSpec:
    return GridSpec(sizes=[4, 4], lengths=[2.0, 3.0])


def rotation(axis: str, angle: float) -> np.ndarray:
    return Rotation.from_euler(axis, angle).as_matrix()


def circle_cover() -> Cover:
    return Cover.from_maximal([1, 2, 3], [(1, 2), (2, 3), (1, 3)])


def torus_cover() -> Cover:
    """
    Nerve of the 7-vertex torus triangulation
    """
    triangles = []
    for i in range(7):
        for offsets in ((0, 1, 3), (0, 2, 3)):
            triangles.append(tuple(sorted((i + k) % 7 + 1 for k in offsets)))
    return Cover.from_maximal(list(range(1, 8)), triangles)


def tetrahedron_cover() -> Cover:
    return Cover.from_maximal([1, 2, 3, 4], [(1, 2, 3, 4)])


def disk_cover() -> Cover:
    return Cover.from_maximal([1, 2, 3, 4], [(1, 2, 3), (1, 3, 4)])


def disk_trivializations() -> Dict[int, np.ndarray]:
    return {
        1: rotation("z", 0.9 * np.pi),
        2: rotation("z", -0.9 * np.pi),
        3: np.eye(3),
        4: np.eye(3),
    }


def rotation_chain(matrices: Dict[tuple, np.ndarray]) -> Cochain:
    return Cochain(
        degree=1,
        group=GroupSpec(kind="orthogonal", dim=3),
        values={edge: np.asarray(m) for edge, m in matrices.items()},
    )


def disk_spin_chain() -> Cochain:
    """
    q_αβ = t_α t_β⁻¹ on the disk; its lifts multiply to −1 on one triangle
    only, a coboundary
    """
    t = disk_trivializations()
    edges = disk_cover().simplices(1)
    return rotation_chain({(a, b): t[a] @ t[b].T for a, b in edges})


def torus_no_spin_chain() -> Cochain:
    """
    q = A^u B^v with u, v the two GF(2) classes of the torus nerve and A, B
    commuting half turns whose lifts anticommute
    """
    cover = torus_cover()
    u, v = cocycle_basis(cover, 1)[:2]
    A, B = rotation("x", np.pi), rotation("y", np.pi)
    values = {}
    for edge, bit_u, bit_v in zip(cover.simplices(1), u, v):
        values[edge] = np.linalg.matrix_power(A, int(bit_u) % 2) @ (
            np.linalg.matrix_power(B, int(bit_v) % 2)
        )
    return rotation_chain(values)


def disk_sections(rng: np.random.Generator, fault: float = 0.0) -> LocalSections:
    """
    z_α(s) = t_α v(s) with one sample per element and one per overlap; fault
    is added to one overlap value
    """
    cover = disk_cover()
    t = disk_trivializations()
    holders = {s: (e,) for s, e in enumerate(cover.elements)}
    for s, edge in enumerate(cover.simplices(1), start=len(holders)):
        holders[s] = edge
    values = {a: {} for a in cover.elements}
    for s, elements in holders.items():
        v = rng.normal(size=3)
        for a in elements:
            values[a][s] = t[a] @ v
    if fault:
        a, b = cover.simplices(1)[0]
        shared = next(s for s, e in holders.items() if e == (a, b))
        values[a][shared] = values[a][shared] + fault
    return LocalSections(values=values, h_size=2)


class Check(NamedTuple):
    module: str
    name: str
    tolerance: float
    residual: Callable[[], float]


def _raises(error, action: Callable) -> float:
    try:
        action()
    except error:
        return 0.0
    return 1.0


class SelftestScenario:
    """
    Runs the built-in corpus of named checks with a fixed seed and returns
    the result table
    """

    def __init__(self, config: SelftestConf):
        self.config = config
        self.rng = np.random.default_rng(config.seed)

    def _expression_checks(self) -> List[Check]:
        dims = Dimensions(n=2, m=1)
        p = ChartPoint(x=[0.4, 0.1], y=[0.7])
        step = 1e-5

        def sample():
            return parse("sin(x1*y1) + exp(x2)*y1^2", dims)

        def central_difference():
            f = sample()
            up = Evaluator([p.x[0] + step, p.x[1]], p.y).scalar(f)
            down = Evaluator([p.x[0] - step, p.x[1]], p.y).scalar(f)
            return abs((up - down) / (2 * step) - evaluate(d_x(f, 0), p))

        def mixed_partials():
            f, ev = sample(), Evaluator.at(p)
            return abs(ev.scalar(d_x(d_y(f, 0), 0)) - ev.scalar(d_y(d_x(f, 0), 0)))

        def round_trip():
            corpus = ["x1*y1 - 2/(1 + y1^2)", "sqrt(x2)^1.5 + ln(cos(x1))", "-pi*x1"]
            trees = [parse(s, dims) for s in corpus]
            return float(sum(parse(to_text(e), dims) != e for e in trees))

        def adapted():
            N = NConnectionField.from_text([["y1"], ["0"]], dims)
            value = evaluate(adapted_derivative(parse("x1*y1", dims), N, 0), p)
            return abs(value - (0.7 - 0.7 * 0.4))

        wide = Dimensions(n=2, m=2)
        return [
            Check("expr", "derivative_matches_difference", 1e-6, central_difference),
            Check("expr", "mixed_partials_commute", 1e-10, mixed_partials),
            Check("expr", "parse_print_round_trip", 0.5, round_trip),
            Check("expr", "adapted_derivative_example", 1e-12, adapted),
            Check(
                "expr",
                "evaluate_sum_of_squares",
                1e-12,
                lambda: abs(
                    evaluate(parse("y1^2+y2^2", wide), ChartPoint(x=[0, 0], y=[3, 4]))
                    - 25.0
                ),
            ),
            Check(
                "expr",
                "constant_folding",
                1e-15,
                lambda: abs(parse_constant("2*pi") - 2 * np.pi),
            ),
            Check(
                "expr",
                "sqrt_domain_error",
                0.5,
                lambda: _raises(
                    ExpressionDomainError,
                    lambda: evaluate(
                        parse("sqrt(x1)", wide), ChartPoint(x=[-1, 0], y=[0, 0])
                    ),
                ),
            ),
            Check(
                "expr",
                "variable_index_error",
                0.5,
                lambda: _raises(VariableIndexError, lambda: parse("x3", wide)),
            ),
        ]

    def _geometry_checks(self) -> List[Check]:
        p, q = TWISTED_POINT, ANALYTIC_POINT

        def omega_example():
            omega = nconnection_curvature(twisted_nconnection(), p)
            return abs(omega[0, 0, 1] - (-1.0 - 0.3))

        def frame_dual():
            frame = frame_eval(twisted_nconnection(), p)
            return float(np.max(np.abs(frame.E @ frame.Einv - np.eye(3))))

        def assembled():
            M = DMetric.from_text(
                [["1", "0"], ["0", "1"]], [["1"]], [["2"], ["0"]], TWISTED_DIMS
            )
            G = assemble_offdiagonal(M, q)
            target = np.array([[5.0, 0, 2], [0, 1, 0], [2, 0, 1]])
            return float(np.max(np.abs(G - target)))

        def split_recovers():
            analytic = analytic_dmetric()
            split = split_to_dmetric(assemble_offdiagonal(analytic, q), TWISTED_DIMS)
            ev = Evaluator.at(q)
            return float(
                max(
                    np.max(np.abs(split.g - ev.array(analytic.g))),
                    np.max(np.abs(split.N - ev.array(analytic.N.N))),
                )
            )

        def torsion(block: str):
            analytic = analytic_dmetric()
            T = d_torsion(analytic, canonical_dconnection(analytic, q), q)
            return float(np.max(np.abs(getattr(T, block))))

        def scalar(M: DMetric, p: ChartPoint):
            return ricci_and_scalar(M, canonical_dconnection_field(M), p)

        return [
            Check("geometry", "omega_example", 1e-12, omega_example),
            Check("geometry", "frame_dual", 1e-12, frame_dual),
            Check("geometry", "assemble_example", 1e-12, assembled),
            Check("geometry", "split_recovers_blocks", 1e-10, split_recovers),
            Check("geometry", "pure_torsion_h", 1e-10, lambda: torsion("Thhh")),
            Check("geometry", "pure_torsion_v", 1e-10, lambda: torsion("Tvvv")),
            Check(
                "geometry",
                "metric_compatible",
                1e-8,
                lambda: metric_compatibility(analytic_dmetric(), q).max_residual,
            ),
            Check(
                "geometry",
                "distortion_matches",
                1e-6,
                lambda: levi_civita(analytic_dmetric(), q).residual,
            ),
            Check(
                "geometry",
                "sphere_christoffel",
                1e-12,
                lambda: abs(
                    canonical_dconnection(sphere_dmetric(), SPHERE_POINT).Lhh[0, 1, 1]
                    + 0.5
                ),
            ),
            Check(
                "geometry",
                "sphere_h_scalar",
                1e-6,
                lambda: abs(scalar(sphere_dmetric(), SPHERE_POINT).h_scalar - 2.0),
            ),
            Check(
                "geometry",
                "sphere_fiber_v_scalar",
                1e-6,
                lambda: abs(
                    scalar(
                        sphere_fiber_dmetric(), ChartPoint(x=[0.2], y=[np.pi / 3, 0.1])
                    ).v_scalar
                    - 2.0
                ),
            ),
        ]

    def _lagrange_checks(self) -> List[Check]:
        p = SPHERE_POINT

        def equator():
            trajectory = geodesic_integrate(
                semispray(sphere_lagrangian()), [np.pi / 2, 0.0], [0.0, 1.0], 1.0, 200
            )
            return float(np.max(np.abs(trajectory.x[:, 0] - np.pi / 2)))

        def energy_drift():
            Lag = sphere_lagrangian()
            trajectory = geodesic_integrate(semispray(Lag), p.x, [0.3, 0.8], 1.0, 200)
            E = energy(Lag, trajectory)
            return float(np.max(np.abs(E - E[0])))

        def at_point(exprs) -> np.ndarray:
            return Evaluator.at(p).array(exprs)

        def quartic():
            report = finsler_check(
                Lagrangian.from_text("(y1^4 + y2^4)^0.5", 2),
                ChartPoint(x=[0.1, 0.2], y=[0.3, 0.7]),
            )
            return report.max_deviation if report.is_finsler else 1.0

        def not_finsler():
            report = finsler_check(
                Lagrangian.from_text("y1^2 + y2^2 + x1*y1", 2),
                ChartPoint(x=[0.5, 0.1], y=[0.3, 0.7]),
            )
            return 0.0 if report.testable and not report.is_finsler else 1.0

        return [
            Check(
                "lagrange",
                "sphere_hessian",
                1e-12,
                lambda: abs(hessian_metric(sphere_lagrangian(), p)[0][1, 1] - 0.5),
            ),
            Check(
                "lagrange",
                "sphere_semispray",
                1e-12,
                lambda: abs(at_point(semispray(sphere_lagrangian()).G)[0] + 0.25),
            ),
            Check(
                "lagrange",
                "sphere_nconnection",
                1e-12,
                lambda: abs(
                    at_point(canonical_nconnection(sphere_lagrangian()).N)[1, 0] + 0.5
                ),
            ),
            Check("lagrange", "equator_geodesic", 1e-6, equator),
            Check("lagrange", "energy_conserved", 1e-6, energy_drift),
            Check(
                "lagrange",
                "almost_complex_square",
                1e-10,
                lambda: almost_complex(sphere_lagrangian(), p).square_residual,
            ),
            Check(
                "lagrange",
                "almost_complex_compatible",
                1e-10,
                lambda: almost_complex(sphere_lagrangian(), p).compatibility_residual,
            ),
            Check("lagrange", "quartic_is_finsler", 1e-9, quartic),
            Check("lagrange", "linear_term_not_finsler", 0.5, not_finsler),
        ]

    def _clifford_checks(self) -> List[Check]:
        line = Dimensions(n=1, m=1)

        def flat() -> DMetric:
            return DMetric.flat(line)

        def shifted() -> DMetric:
            return DMetric.from_text([["1"]], [["1"]], [["0.3"]], line)

        def flat_spectrum():
            grid = torus_grid()
            op = assemble_dirac(flat(), grid)
            eigenvalues = np.sort(dirac_spectrum(op, op.dimension).eigenvalues.real)
            h = grid.lengths[0] / grid.sizes[0]
            k = 2 * np.pi * np.arange(grid.sizes[0]) / grid.lengths[0]
            s = np.sqrt(np.add.outer(np.sin(k * h) ** 2, np.sin(k * h) ** 2)) / h
            oracle = np.sort(np.concatenate([s.ravel(), -s.ravel()]))
            return float(np.max(np.abs(eigenvalues - oracle)))

        def symbol_norm():
            symbol = dirac_symbol(sphere_dmetric(), SPHERE_POINT, [0, 1, 0, 0])
            return abs(symbol.norm_squared - 2)

        checks = [
            Check(
                "clifford",
                f"gamma_relation_d{d}",
                1e-13,
                lambda d=d: build_gamma(d).anticommutator_residual(),
            )
            for d in (2, 3, 4, 5)
        ]
        return checks + [
            Check(
                "clifford",
                "gamma_self_adjoint_d8",
                1e-13,
                lambda: build_gamma(8).hermiticity_residual(),
            ),
            Check(
                "clifford",
                "sphere_frame_gamma",
                1e-12,
                lambda: frame_gamma(
                    build_gamma(4), sphere_dmetric(), SPHERE_POINT
                ).anticommutator_residual,
            ),
            Check("clifford", "sphere_symbol_norm", 1e-12, symbol_norm),
            Check(
                "clifford",
                "symbol_squares_to_norm",
                1e-12,
                lambda: dirac_symbol(
                    sphere_dmetric(), SPHERE_POINT, self.rng.normal(size=4)
                ).square_residual,
            ),
            Check(
                "clifford",
                "spin_connection_anti_hermitian",
                1e-10,
                lambda: spin_dconnection(
                    sphere_dmetric(), build_gamma(4), SPHERE_POINT
                ).anti_hermitian_residual,
            ),
            Check("clifford", "flat_torus_dispersion", 1e-9, flat_spectrum),
            Check(
                "clifford",
                "lichnerowicz_flat",
                1e-10,
                lambda: lichnerowicz_residual(flat(), torus_grid()).residual,
            ),
            Check(
                "clifford",
                "lichnerowicz_constant_N",
                1e-10,
                lambda: lichnerowicz_residual(shifted(), torus_grid()).residual,
            ),
        ]

    def _cech_checks(self) -> List[Check]:
        def dims_of(cover: Cover, expected):
            return float(np.max(np.abs(np.array(z2_cohomology(cover).dims) - expected)))

        def coboundary_squares():
            tetrahedron = tetrahedron_cover()
            return float(
                max(
                    np.max(
                        coboundary_matrix(tetrahedron, k + 1)
                        @ coboundary_matrix(tetrahedron, k)
                        % 2
                    )
                    for k in range(2)
                )
            )

        def random_cocycle():
            tetrahedron = tetrahedron_cover()
            matrices = Rotation.random(6, random_state=self.config.seed).as_matrix()
            q = rotation_chain(dict(zip(tetrahedron.simplices(1), matrices)))
            c = cocycle_of_chain(q, tetrahedron)
            return cocycle_defect(c, tetrahedron, q).max_defect

        def flips_invariant():
            q = disk_spin_chain()
            flips = {(1, 2): -1, (3, 4): -1}
            plain = spin_obstruction(q, disk_cover())
            flipped = spin_obstruction(q, disk_cover(), flips)
            return float(plain.spin_exists != flipped.spin_exists)

        def partition_invariant():
            sections = disk_sections(self.rng)
            report = glue_sections(disk_spin_chain(), sections, disk_cover())
            section = report.section
            weights = {a: {} for a in section.values}
            for s in section.sample_ids():
                holders = section.elements_at(s)
                shares = np.linspace(1.0, 2.0, len(holders))
                for a, share in zip(holders, shares / shares.sum()):
                    weights[a][s] = float(share)
            uniform = pre_hilbert_product(section, section).value
            skewed = pre_hilbert_product(section, section, weights).value
            return abs(uniform - skewed)

        return [
            Check(
                "cech",
                "circle_cohomology",
                0.5,
                lambda: dims_of(circle_cover(), (1, 1, 0)),
            ),
            Check(
                "cech",
                "torus_cohomology",
                0.5,
                lambda: dims_of(torus_cover(), (1, 2, 1)),
            ),
            Check("cech", "coboundary_squares_to_zero", 0.5, coboundary_squares),
            Check("cech", "random_rotation_cocycle", 1e-9, random_cocycle),
            Check(
                "cech",
                "disk_spin_exists",
                0.5,
                lambda: float(
                    not spin_obstruction(disk_spin_chain(), disk_cover()).spin_exists
                ),
            ),
            Check(
                "cech",
                "torus_no_spin",
                0.5,
                lambda: float(
                    spin_obstruction(torus_no_spin_chain(), torus_cover()).spin_exists
                ),
            ),
            Check("cech", "spin_class_flip_invariant", 0.5, flips_invariant),
            Check(
                "cech",
                "rotated_sections_glue",
                1e-9,
                lambda: glue_sections(
                    disk_spin_chain(), disk_sections(self.rng), disk_cover()
                ).max_deviation,
            ),
            Check(
                "cech",
                "gluing_detects_fault",
                0.5,
                lambda: float(
                    glue_sections(
                        disk_spin_chain(), disk_sections(self.rng, 1e-3), disk_cover()
                    ).compatible
                ),
            ),
            Check("cech", "product_partition_invariant", 1e-12, partition_invariant),
        ]

    def _chern_checks(self) -> List[Check]:
        def monopole_c1(q: int):
            F = monopole_curvature(q, box_grid())
            return abs(integrate_form(chern_class_form(F, 1), box_grid()) - q)

        def pairing():
            ch = chern_character(monopole_curvature(2, box_grid()))
            return abs(index_pairing(ch, unit_class(box_grid()), box_grid()) - 2.0)

        def character_matches_c1():
            F = monopole_curvature(1, box_grid())
            part = chern_character(F).part(2).form
            return (part - chern_class_form(F, 1).form).max_abs()

        def trace_free():
            R = np.zeros((2, 2, 2, 2), dtype=complex)
            R[0, 1] = 0.7j * np.diag([1.0, -1.0])
            R[1, 0] = -R[0, 1]
            F = curvature_form_from_synthetic(R, box_grid())
            return chern_class_form(F, 1).form.max_abs()

        def flat_nconnection():
            M = DMetric.flat(Dimensions(n=1, m=1))
            F = curvature_form_from_nconnection(M, box_grid())
            return float(np.max(np.abs(F.R)))

        return [
            Check("chern", "monopole_c1_q1", 1e-9, lambda: monopole_c1(1)),
            Check("chern", "monopole_c1_q3", 1e-9, lambda: monopole_c1(3)),
            Check("chern", "unit_pairing_q2", 1e-9, pairing),
            Check("chern", "character_degree_2_is_c1", 1e-12, character_matches_c1),
            Check("chern", "trace_free_c1_vanishes", 1e-12, trace_free),
            Check("chern", "flat_nconnection_curvature", 1e-12, flat_nconnection),
        ]

    def checks(self) -> List[Check]:
        return (
            self._expression_checks()
            + self._geometry_checks()
            + self._lagrange_checks()
            + self._clifford_checks()
            + self._cech_checks()
            + self._chern_checks()
        )

    def run(self, progress_bar: bool = False) -> pd.DataFrame:
        """
        :param progress_bar: whether or not to show the progress bar over checks
        :return: one row per check with its residual, tolerance and verdict
        """
        LOGGER.info("Starting Selftest Scenario")
        rows = []
        checks = self.checks()
        for check in pb(checks, "selftest") if progress_bar else checks:
            tolerance = check.tolerance * self.config.tol_scale
            error = None
            try:
                residual = float(check.residual())
            except (ValueError, ArithmeticError) as e:
                residual, error = float("inf"), f"{type(e).__name__}: {e}"
                LOGGER.warning(f"Check {check.name} failed: {error}")
            rows.append(
                {
                    "module": check.module,
                    "check": check.name,
                    "residual": residual,
                    "tolerance": tolerance,
                    "passed": residual <= tolerance,
                    "error": error,
                }
            )
        return pd.DataFrame(rows)
