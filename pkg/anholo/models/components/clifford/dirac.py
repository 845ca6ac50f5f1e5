from typing import Optional

import numpy as np
import scipy.sparse as sp

from anholo.schemas.clifford import (
    DiracSpectrum,
    GammaRep,
    GridSpec,
    LatticeDirac,
    LichnerowiczReport,
    SpinorField,
)
from anholo.schemas.fields import DMetric
from anholo.models.nodes.expression.evaluator import Evaluator
from anholo.models.nodes.lattice.periodic_grid import (
    PeriodicLattice,
    block_diagonal,
    nodal_diagonal,
    spinor_lift,
)
from anholo.models.components.geometry.dconnection import (
    canonical_dconnection_field,
    full_connection,
)
from anholo.models.components.geometry.curvature import scalar_curvature_on_nodes
from anholo.models.components.clifford.gamma import build_gamma
from anholo.models.components.clifford.spin import spin_tables
from anholo.utils.errors import EnvelopeError
from anholo.utils.globals import DEFAULT_TOLERANCES, MAX_LATTICE_DIMENSION
from anholo.utils.logging import LOGGER


def _zero(size: int) -> sp.csr_matrix:
    return sp.csr_matrix((size, size), dtype=complex)


def _lattice_for(M: DMetric, grid: GridSpec, K: int) -> PeriodicLattice:
    lattice = PeriodicLattice(grid)
    if lattice.dimension != M.dims.total:
        raise ValueError(
            f"Grid has {lattice.dimension} directions, the chart has {M.dims.total}"
        )
    if lattice.volume * K > MAX_LATTICE_DIMENSION:
        raise EnvelopeError(
            f"Lattice operator dimension {lattice.volume * K} exceeds "
            f"{MAX_LATTICE_DIMENSION}"
        )
    return lattice


def assemble_dirac(
    M: DMetric, grid: GridSpec, rep: Optional[GammaRep] = None
) -> LatticeDirac:
    """
    Đ = −i Σ_α γ^α(u) (e_α + ρ_α) on a periodic grid with central differences;
    e_i = ∂_i − N^a_i ∂_a acts through the nodal values of N^a_i
    :param M: positive definite d-metric
    :param grid: periodic box over (x, y)
    :param rep: gamma rep of dimension n+m, built when omitted
    """
    n, D = M.dims.n, M.dims.total
    rep = rep or build_gamma(D)
    K = rep.k
    lattice = _lattice_for(M, grid, K)
    LOGGER.info(f"Assembling lattice Dirac operator on {grid.grid_id}")
    nodes = lattice.nodes()
    ev = Evaluator.on_nodes(nodes[:, :n], nodes[:, n:])
    tables = spin_tables(M, rep, ev)
    N = ev.array(M.N.N)  # (V, n, m)

    partial = [spinor_lift(lattice.derivative(mu), K) for mu in range(D)]
    frame = []
    for i in range(n):
        e_i = partial[i]
        for a in range(M.dims.m):
            e_i = e_i - nodal_diagonal(N[:, i, a], K) @ partial[n + a]
        frame.append(e_i)
    frame += partial[n:]
    covariant = [
        (frame[alpha] + block_diagonal(tables["rho"][:, alpha])).tocsr()
        for alpha in range(D)
    ]
    size = lattice.volume * K
    parts = [_zero(size), _zero(size)]
    for alpha in range(D):
        term = block_diagonal(tables["gammas"][:, alpha]) @ covariant[alpha]
        parts[0 if alpha < n else 1] = parts[0 if alpha < n else 1] + term
    horizontal, vertical = (-1j * p for p in parts)
    connection = full_connection(*canonical_dconnection_field(M).evaluate_with(ev))
    return LatticeDirac(
        grid=grid,
        K=K,
        matrix=(horizontal + vertical).tocsr(),
        horizontal=horizontal.tocsr(),
        vertical=vertical.tocsr(),
        metric=M,
        covariant=covariant,
        inverse_metric=tables["inverse"],
        connection=connection,
    )


def apply_dirac(op: LatticeDirac, psi: SpinorField) -> SpinorField:
    values = op.matrix @ psi.flat()
    return SpinorField(values=values.reshape(-1, op.K))


def self_adjoint_residual(matrix: sp.spmatrix) -> float:
    difference = (matrix - matrix.conj().T).tocoo()
    return float(np.max(np.abs(difference.data), initial=0.0))


def dirac_spectrum(op: LatticeDirac, count: int = 8) -> DiracSpectrum:
    """
    Dense eigen-solve of the lattice operator
    :return: the count lowest |λ| values and the ± symmetry residual
    """
    residual = self_adjoint_residual(op.matrix)
    dense = op.matrix.toarray()
    if residual <= DEFAULT_TOLERANCES["anti_hermitian"]:
        hermitian = 0.5 * (dense + dense.conj().T)
        eigenvalues = np.linalg.eigvalsh(hermitian).astype(complex)
    else:
        eigenvalues = np.linalg.eigvals(dense)
    ordered = np.sort(eigenvalues.real)
    symmetry = float(np.max(np.abs(ordered + ordered[::-1])))
    lowest = eigenvalues[np.argsort(np.abs(eigenvalues), kind="stable")][:count]
    if residual <= DEFAULT_TOLERANCES["anti_hermitian"]:
        lowest = lowest.real
    return DiracSpectrum(
        eigenvalues=lowest,
        symmetry_residual=symmetry,
        self_adjoint_residual=residual,
        grid=op.grid.grid_id,
    )


def connection_laplacian(op: LatticeDirac) -> sp.csr_matrix:
    """
    Đ*Đ = −g^αβ (∇_α ∇_β − Γ^γ_βα ∇_γ) on spinor fields
    """
    inverse, connection, K = op.inverse_metric, op.connection, op.K
    D = len(op.covariant)
    laplacian = _zero(op.dimension)
    for alpha in range(D):
        for beta in range(D):
            coefficient = inverse[:, alpha, beta]
            if not np.any(coefficient):
                continue
            second = op.covariant[alpha] @ op.covariant[beta]
            laplacian = laplacian - nodal_diagonal(coefficient, K) @ second
    # g^αβ Γ^γ_βα, contracted per node
    transport = np.einsum("vab,vgba->vg", inverse, connection)
    for gamma in range(D):
        if np.any(transport[:, gamma]):
            laplacian = laplacian + (
                nodal_diagonal(transport[:, gamma], K) @ op.covariant[gamma]
            )
    return laplacian.tocsr()


def _weitzenbock_defect(
    M: DMetric, grid: GridSpec, rep: GammaRep, max_mode: int
) -> tuple:
    op = assemble_dirac(M, grid, rep)
    lattice = PeriodicLattice(grid)
    nodes = lattice.nodes()
    n = M.dims.n
    scalar = scalar_curvature_on_nodes(
        M, canonical_dconnection_field(M), nodes[:, :n], nodes[:, n:]
    )
    basis = lattice.smooth_basis(op.K, max_mode)
    square = op.matrix @ (op.matrix @ basis)
    curvature = nodal_diagonal(scalar / 4.0, op.K)
    rhs = connection_laplacian(op) @ basis + curvature @ basis
    norm = np.linalg.norm(square - rhs) / np.sqrt(lattice.volume * basis.shape[1])
    return float(norm), scalar, basis.shape[1]


def lichnerowicz_residual(
    M: DMetric, grid: GridSpec, rep: Optional[GammaRep] = None, max_mode: int = 1
) -> LichnerowiczReport:
    """
    ‖Đ² − (Đ*Đ + ¼ ←R)‖ on a smooth test subspace (low plane waves times the
    spinor basis), RMS per node and column. The second value repeats the
    measurement for the N-connection alone, g = I and h = I with ⁿ←R.
    """
    rep = rep or build_gamma(M.dims.total)
    residual, scalar, columns = _weitzenbock_defect(M, grid, rep, max_mode)
    residual_N, scalar_N, _ = _weitzenbock_defect(
        M.euclidean_blocks(), grid, rep, max_mode
    )
    return LichnerowiczReport(
        residual=residual,
        residual_nconnection=residual_N,
        scalar_range=[float(np.min(scalar)), float(np.max(scalar))],
        basis_columns=columns,
        grid=grid.grid_id,
        details={
            "nconnection_scalar_min": float(np.min(scalar_N)),
            "nconnection_scalar_max": float(np.max(scalar_N)),
        },
    )
