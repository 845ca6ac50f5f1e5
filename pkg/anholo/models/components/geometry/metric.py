from typing import Any

import numpy as np
from pydantic import validate_arguments

from anholo.schemas.fields import DMetric
from anholo.schemas.geometry import ChartPoint, Dimensions, FrameEval, SplitMetric
from anholo.models.nodes.expression.tree import add_all, mul, symbolic_array
from anholo.models.nodes.expression.evaluator import Evaluator
from anholo.models.components.geometry.nconnection import frame_from_coefficients
from anholo.utils.errors import DegenerateMetricError
from anholo.utils.globals import DEGENERACY_THRESHOLD


def check_nondegenerate(matrix: np.ndarray, name: str) -> np.ndarray:
    """
    Raises if any matrix of a (batched) stack has |det| <= DEGENERACY_THRESHOLD
    :return: the matrix, unchanged
    """
    if matrix.shape[-1] == 0:
        return matrix
    det = np.linalg.det(matrix)
    if not np.all(np.isfinite(det)) or np.any(np.abs(det) <= DEGENERACY_THRESHOLD):
        worst = float(np.min(np.abs(det)))
        raise DegenerateMetricError(f"{name} is degenerate (|det| = {worst:.3e})")
    return matrix


def metric_blocks(M: DMetric, ev: Evaluator):
    """
    Numeric g, h and N over the evaluator's batch, nondegeneracy checked
    :return: (g, h, N) with batch axes leading
    """
    g = check_nondegenerate(ev.array(M.g), "g")
    h = check_nondegenerate(ev.array(M.h), "h")
    return g, h, ev.array(M.N.N)


def assemble_offdiagonal_field(M: DMetric) -> np.ndarray:
    """
    Coordinate-basis metric [[g + N h Nᵀ, N h], [h Nᵀ, h]] with N stored [i, a],
    i.e. G_ij = g_ij + N^a_i h_ab N^b_j and G_{i,n+b} = N^a_i h_ab.
    """
    if "assembled" in M._cache:
        return M._cache["assembled"]
    n, m = M.dims.n, M.dims.m
    N, g, h = M.N.N, M.g, M.h
    G = symbolic_array((n + m, n + m))
    mixed = symbolic_array((n, m))
    for i in range(n):
        for b in range(m):
            mixed[i, b] = add_all(mul(N[i, a], h[a, b]) for a in range(m))
    for i in range(n):
        for j in range(i, n):
            G[i, j] = g[i, j] + add_all(mul(mixed[i, b], N[j, b]) for b in range(m))
            G[j, i] = G[i, j]
        for b in range(m):
            G[i, n + b] = mixed[i, b]
            G[n + b, i] = mixed[i, b]
    G[n:, n:] = h
    M._cache["assembled"] = G
    return G


def assemble_offdiagonal(M: DMetric, p: ChartPoint) -> np.ndarray:
    ev = Evaluator.at(M.point(p))
    metric_blocks(M, ev)
    return ev.array(assemble_offdiagonal_field(M))


@validate_arguments(config=dict(arbitrary_types_allowed=True))
def split_to_dmetric(G: Any, dims: Dimensions) -> SplitMetric:
    """
    Inverse of the assembly: h is the lower-right block, N = G_{h,v} h⁻¹,
    g = G_{h,h} − N h Nᵀ. The returned frame satisfies E G Eᵀ = diag(g, h).
    :param G: symmetric (n+m)x(n+m) coordinate metric
    :param dims: chart dimensions
    """
    G = np.asarray(G, dtype=float)
    n, m = dims.n, dims.m
    if G.shape != (n + m, n + m):
        raise ValueError(f"Metric matrix must be {(n + m, n + m)}, got {G.shape}")
    h = check_nondegenerate(G[n:, n:], "h block")
    N = np.linalg.solve(h, G[:n, n:].T).T
    g = G[:n, :n] - N @ h @ N.T
    E, Einv = frame_from_coefficients(N)
    return SplitMetric(g=g, h=h, N=N, frame=FrameEval(E=E, Einv=Einv))


def block_inverse(matrix: np.ndarray) -> np.ndarray:
    """
    Batched inverse that also accepts the empty block of a degenerate fiber
    """
    if matrix.shape[-1] == 0:
        return np.zeros(matrix.shape)
    return np.linalg.inv(matrix)
