from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, validate_arguments

from anholo.schemas.fields import DMetric, NConnectionField
from anholo.schemas.geometry import ChartPoint
from anholo.schemas.output import InvariantCheck
from anholo.schemas.lagrange import (
    AlmostComplexEval,
    FinslerReport,
    Lagrangian,
    Semispray,
    Trajectory,
)
from anholo.models.nodes.expression.tree import add_all, symbolic_array, y_var
from anholo.models.nodes.expression.calculus import d_x, d_y
from anholo.models.nodes.expression.evaluator import Evaluator
from anholo.models.nodes.expression.printer import to_text
from anholo.models.nodes.linalg.symbolic import symbolic_inverse, symbolic_symmetric
from anholo.models.components.geometry.metric import (
    assemble_offdiagonal,
    check_nondegenerate,
)
from anholo.models.components.geometry.nconnection import (
    frame_eval,
    nconnection_curvature,
)
from anholo.models.components.geometry.dconnection import canonical_dconnection_field
from anholo.models.components.geometry.curvature import ricci_and_scalar
from anholo.utils.errors import ExpressionDomainError, NonFiniteStateError
from anholo.utils.globals import (
    DEFAULT_GEODESIC_STEPS,
    DEFAULT_GEODESIC_TAU,
    DEFAULT_TOLERANCES,
    FINSLER_LAMBDAS,
    FINSLER_TOLERANCE,
)
from anholo.utils.logging import LOGGER
from anholo.utils.progress_bar import progress_bar as pb


def hessian_field(Lag: Lagrangian) -> np.ndarray:
    """
    g^L_ij = ½ ∂²L/∂y^i∂y^j, upper triangle mirrored so g^L is symmetric
    node for node
    """
    if "hessian" not in Lag._cache:
        n = Lag.dims.n
        g = symbolic_array((n, n))
        for i in range(n):
            first = d_y(Lag.L, i)
            for j in range(i, n):
                g[i, j] = 0.5 * d_y(first, j)
        Lag._cache["hessian"] = symbolic_symmetric(g)
    return Lag._cache["hessian"]


def hessian_metric(Lag: Lagrangian, p: ChartPoint):
    """
    :return: (g^L evaluated at p, symbolic g^L)
    """
    field = hessian_field(Lag)
    values = Evaluator.at(p.check(Lag.dims)).array(field)
    return check_nondegenerate(values, "Lagrangian Hessian"), field


def semispray(Lag: Lagrangian) -> Semispray:
    """
    G^i = ¼ g^ij (∂²L/∂y^j∂x^k y^k − ∂L/∂x^j)
    """
    if "semispray" not in Lag._cache:
        n = Lag.dims.n
        g_inv, _ = symbolic_inverse(hessian_field(Lag))
        force = symbolic_array((n,))
        for j in range(n):
            momentum = d_y(Lag.L, j)
            force[j] = add_all(
                d_x(momentum, k) * y_var(k) for k in range(n)
            ) - d_x(Lag.L, j)
        G = symbolic_array((n,))
        for i in range(n):
            G[i] = 0.25 * add_all(g_inv[i, j] * force[j] for j in range(n))
        Lag._cache["semispray"] = Semispray(dims=Lag.dims, G=G)
    return Lag._cache["semispray"]


def canonical_nconnection(Lag: Lagrangian) -> NConnectionField:
    """
    Cartan N-connection N^i_j = ∂G^i/∂y^j, stored N[j, i]
    """
    if "nconnection" not in Lag._cache:
        n = Lag.dims.n
        G = semispray(Lag).G
        N = symbolic_array((n, n))
        for j in range(n):
            for i in range(n):
                N[j, i] = d_y(G[i], j)
        Lag._cache["nconnection"] = NConnectionField(dims=Lag.dims, N=N)
    return Lag._cache["nconnection"]


def _spray_rhs(G: np.ndarray, state: np.ndarray, n: int) -> np.ndarray:
    x, y = state[:n], state[n:]
    acceleration = -2.0 * Evaluator(x, y).array(G)
    return np.concatenate([y, acceleration])


@validate_arguments(config=dict(arbitrary_types_allowed=True))
def geodesic_integrate(
    S: Semispray,
    x0: List[float],
    y0: List[float],
    tau_end: float = DEFAULT_GEODESIC_TAU,
    steps: int = DEFAULT_GEODESIC_STEPS,
    progress_bar: bool = False,
) -> Trajectory:
    """
    Fixed-step RK4 for dx/dτ = y, dy/dτ = −2 G(x, y)
    :param S: semispray
    :param x0: initial position
    :param y0: initial velocity
    :param tau_end: final parameter value
    :param steps: number of RK4 steps, at least 1
    :return: steps + 1 samples including the initial state
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    n = S.dims.n
    ChartPoint(x=x0, y=y0).check(S.dims)
    h = tau_end / steps
    state = np.array(list(x0) + list(y0), dtype=float)
    states = [state]
    for step in pb(range(1, steps + 1), "geodesic", enabled=progress_bar):
        try:
            k1 = _spray_rhs(S.G, state, n)
            k2 = _spray_rhs(S.G, state + 0.5 * h * k1, n)
            k3 = _spray_rhs(S.G, state + 0.5 * h * k2, n)
            k4 = _spray_rhs(S.G, state + h * k3, n)
        except ExpressionDomainError as e:
            raise NonFiniteStateError(step) from e
        state = state + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(state)):
            raise NonFiniteStateError(step)
        states.append(state)
    states = np.array(states)
    return Trajectory(
        tau=np.linspace(0.0, tau_end, steps + 1), x=states[:, :n], y=states[:, n:]
    )


def energy_field(Lag: Lagrangian):
    """
    E = y^i ∂L/∂y^i − L, the first integral of the Euler-Lagrange flow
    """
    n = Lag.dims.n
    return add_all(y_var(i) * d_y(Lag.L, i) for i in range(n)) - Lag.L


def energy(Lag: Lagrangian, trajectory: Trajectory) -> np.ndarray:
    ev = Evaluator(list(trajectory.x.T), list(trajectory.y.T))
    return np.broadcast_to(ev(energy_field(Lag)), trajectory.tau.shape).astype(float)


def euler_lagrange_residual(Lag: Lagrangian, trajectory: Trajectory) -> float:
    """
    max |d/dτ(∂L/∂y^i) − ∂L/∂x^i| along the samples, the τ-derivative by
    second-order finite differences
    """
    n = Lag.dims.n
    ev = Evaluator(list(trajectory.x.T), list(trajectory.y.T))
    samples = trajectory.tau.shape
    momenta = np.stack(
        [np.broadcast_to(ev(d_y(Lag.L, i)), samples) for i in range(n)], axis=-1
    )
    forces = np.stack(
        [np.broadcast_to(ev(d_x(Lag.L, i)), samples) for i in range(n)], axis=-1
    )
    rate = np.gradient(momenta, trajectory.tau, axis=0, edge_order=2)
    return float(np.max(np.abs(rate - forces)))


def sasaki_lift(Lag: Lagrangian) -> DMetric:
    """
    d-metric with g = h = g^L and the Cartan N-connection
    """
    if "sasaki" not in Lag._cache:
        g = hessian_field(Lag)
        Lag._cache["sasaki"] = DMetric(
            dims=Lag.dims, g=g, h=g, N=canonical_nconnection(Lag)
        )
    return Lag._cache["sasaki"]


def almost_complex(Lag: Lagrangian, p: ChartPoint) -> AlmostComplexEval:
    """
    F = [[0, −I], [I, 0]] in the adapted frame. Coordinate components of a
    vector are Eᵀ times its adapted components, so F_coordinate = Eᵀ F E⁻ᵀ.
    """
    n = Lag.dims.n
    p = p.check(Lag.dims)
    F = np.block([[np.zeros((n, n)), -np.eye(n)], [np.eye(n), np.zeros((n, n))]])
    frame = frame_eval(canonical_nconnection(Lag), p)
    F_coordinate = frame.E.T @ F @ frame.Einv.T
    G = assemble_offdiagonal(sasaki_lift(Lag), p)
    square = F_coordinate @ F_coordinate + np.eye(2 * n)
    compatibility = F_coordinate.T @ G @ F_coordinate - G
    return AlmostComplexEval(
        F=F,
        F_coordinate=F_coordinate,
        square_residual=float(np.max(np.abs(square))),
        compatibility_residual=float(np.max(np.abs(compatibility))),
        at=p,
    )


def finsler_check(
    Lag: Lagrangian, p: ChartPoint, lambdas: Sequence[float] = FINSLER_LAMBDAS
) -> FinslerReport:
    """
    Tests F(x, λy) = λ F(x, y) for F = sqrt(L) at the sampled λ > 0
    """
    p = p.check(Lag.dims)
    if not np.any(np.asarray(p.y)):
        raise ValueError("Finsler check requires y != 0 (null section excluded)")
    if any(lam <= 0 for lam in lambdas):
        raise ValueError("Finsler check needs positive scale factors")
    scaled = [float(lam) for lam in lambdas]
    values = [Evaluator(p.x, [lam * v for v in p.y]).scalar(Lag.L) for lam in scaled]
    base = Evaluator.at(p).scalar(Lag.L)
    if base <= 0 or any(v <= 0 for v in values):
        return FinslerReport(
            testable=False, lambdas=scaled, reason="L(p) <= 0, F = sqrt(L)", at=p
        )
    F = np.sqrt(base)
    deviation = max(
        abs(np.sqrt(v) - lam * F) / (lam * F) for v, lam in zip(values, scaled)
    )
    return FinslerReport(
        testable=True,
        is_finsler=bool(deviation < FINSLER_TOLERANCE),
        max_deviation=float(deviation),
        lambdas=scaled,
        at=p,
    )


Block = Tuple[Dict[str, Any], List[InvariantCheck]]


class LagrangeModelConf(BaseModel):
    """
    Evaluation points, geodesic settings and check tolerances of a Lagrangian run
    """

    probes: List[ChartPoint]
    geodesic_tau: float = DEFAULT_GEODESIC_TAU
    geodesic_steps: int = DEFAULT_GEODESIC_STEPS
    finsler_lambdas: List[float] = list(FINSLER_LAMBDAS)
    tolerances: Dict[str, float] = dict(DEFAULT_TOLERANCES)


class LagrangeModel:
    """
    Derives the geometric tower of a regular Lagrangian and reports it at
    each evaluation point
    """

    TASKS = (
        "expression",
        "hessian",
        "semispray",
        "nconnection",
        "sasaki",
        "almost_complex",
        "finsler",
    )

    def __init__(self, config: LagrangeModelConf):
        self.config = config

    def _check(self, name: str, residual: float, key: str, where) -> InvariantCheck:
        if isinstance(where, ChartPoint):
            where = where.to_json()
        return InvariantCheck.of(name, residual, self.config.tolerances[key], where)

    def expression_block(self, Lag: Lagrangian, p: ChartPoint) -> Block:
        ev = Evaluator.at(p)
        n = Lag.dims.n
        return {
            "at": p.to_json(),
            "L": to_text(Lag.L),
            "value": ev.scalar(Lag.L),
            "dL_dx": [ev.scalar(d_x(Lag.L, i)) for i in range(n)],
            "dL_dy": [ev.scalar(d_y(Lag.L, a)) for a in range(n)],
        }, []

    def hessian_block(self, Lag: Lagrangian, p: ChartPoint) -> Block:
        g, _ = hessian_metric(Lag, p)
        return {"at": p.to_json(), "g_L": g}, [
            self._check("hessian_symmetric", np.max(np.abs(g - g.T)), "symmetry", p)
        ]

    def semispray_block(self, Lag: Lagrangian, p: ChartPoint) -> Block:
        return {"at": p.to_json(), "G": Evaluator.at(p).array(semispray(Lag).G)}, []

    def nconnection_block(self, Lag: Lagrangian, p: ChartPoint) -> Block:
        N = canonical_nconnection(Lag)
        omega = nconnection_curvature(N, p)
        antisymmetry = np.max(np.abs(omega + np.swapaxes(omega, -1, -2)), initial=0.0)
        return {"at": p.to_json(), "N": Evaluator.at(p).array(N.N), "Omega": omega}, [
            self._check("omega_antisymmetric", antisymmetry, "symmetry", p)
        ]

    def sasaki_block(self, Lag: Lagrangian, p: ChartPoint) -> Block:
        M = sasaki_lift(Lag)
        ricci = ricci_and_scalar(M, canonical_dconnection_field(M), p)
        return {
            "at": p.to_json(),
            "G": assemble_offdiagonal(M, p),
            "scalar": ricci.scalar,
            "h_scalar": ricci.h_scalar,
            "v_scalar": ricci.v_scalar,
        }, []

    def almost_complex_block(self, Lag: Lagrangian, p: ChartPoint) -> Block:
        J = almost_complex(Lag, p)
        return {"at": p.to_json(), "F": J.F, "F_coordinate": J.F_coordinate}, [
            self._check("F_squared", J.square_residual, "almost_complex", p),
            self._check(
                "F_sasaki_compatible",
                J.compatibility_residual,
                "almost_complex",
                p,
            ),
        ]

    def finsler_block(self, Lag: Lagrangian, p: ChartPoint) -> Block:
        try:
            finsler = finsler_check(Lag, p, self.config.finsler_lambdas).dict()
        except ValueError as e:
            finsler = {"testable": False, "reason": str(e)}
        finsler["at"] = p.to_json()
        return finsler, []

    def point_block(self, Lag: Lagrangian, p: ChartPoint) -> dict:
        g, _ = hessian_metric(Lag, p)
        sasaki, _ = self.sasaki_block(Lag, p)
        nconnection, _ = self.nconnection_block(Lag, p)
        finsler, _ = self.finsler_block(Lag, p)
        return {
            "at": p.to_json(),
            "g_L": g,
            "G": Evaluator.at(p).array(semispray(Lag).G),
            "N": nconnection["N"],
            "Omega": nconnection["Omega"],
            "sasaki_scalar": sasaki["scalar"],
            "sasaki_h_scalar": sasaki["h_scalar"],
            "sasaki_v_scalar": sasaki["v_scalar"],
            "finsler": finsler,
        }

    def task(self, tag: str, Lag: Lagrangian) -> Block:
        if tag == "geodesic":
            return self.geodesic(Lag), []
        if tag not in self.TASKS:
            raise ValueError(f"Invalid Lagrange task {tag}")
        method = getattr(self, f"{tag}_block")
        blocks, checks = [], []
        for p in self.config.probes:
            p = p.check(Lag.dims)
            block, found = method(Lag, p)
            blocks.append(block)
            checks += found
        return {"probes": blocks}, checks

    @validate_arguments(config=dict(arbitrary_types_allowed=True))
    def run(self, Lag: Lagrangian, progress_bar: bool = False) -> List[dict]:
        LOGGER.info("Starting Lagrange Model")
        probes = pb(self.config.probes) if progress_bar else self.config.probes
        return [self.point_block(Lag, p.check(Lag.dims)) for p in probes]

    def geodesic(self, Lag: Lagrangian, start: Optional[ChartPoint] = None) -> dict:
        if start is None and not self.config.probes:
            raise ValueError("Geodesic needs a start point")
        start = start or self.config.probes[0]
        trajectory = geodesic_integrate(
            semispray(Lag),
            start.x,
            start.y,
            self.config.geodesic_tau,
            self.config.geodesic_steps,
        )
        E = energy(Lag, trajectory)
        return {
            "at": start.to_json(),
            "end": trajectory.end.to_json(),
            "tau": self.config.geodesic_tau,
            "steps": self.config.geodesic_steps,
            "energy_drift": float(np.max(np.abs(E - E[0]))),
            "euler_lagrange_residual": euler_lagrange_residual(Lag, trajectory),
        }
