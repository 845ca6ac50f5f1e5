import numpy as np

from anholo.schemas.fields import NConnectionField
from anholo.schemas.geometry import AnholonomyEval, ChartPoint, FrameEval
from anholo.models.nodes.expression.tree import ONE, neg, symbolic_array, sub
from anholo.models.nodes.expression.calculus import adapted_derivative, d_y, map_array
from anholo.models.nodes.expression.evaluator import Evaluator


def nconnection_curvature_field(N: NConnectionField) -> np.ndarray:
    """
    Ω^a_ij = e_j N^a_i − e_i N^a_j, which expands to
    ∂_j N^a_i − ∂_i N^a_j + N^b_i ∂_b N^a_j − N^b_j ∂_b N^a_i.
    :return: object array [a, i, j], antisymmetric node for node
    """
    if "omega" in N._cache:
        return N._cache["omega"]
    n, m = N.dims.n, N.dims.m
    omega = symbolic_array((m, n, n))
    for a in range(m):
        for i in range(n):
            for j in range(i + 1, n):
                value = sub(
                    adapted_derivative(N.N[i, a], N.N, j),
                    adapted_derivative(N.N[j, a], N.N, i),
                )
                omega[a, i, j] = value
                omega[a, j, i] = neg(value)
    N._cache["omega"] = omega
    return omega


def vertical_gradient_field(N: NConnectionField) -> np.ndarray:
    """
    ∂_b N^a_i as an object array [i, a, b]
    """
    if "dyN" in N._cache:
        return N._cache["dyN"]
    n, m = N.dims.n, N.dims.m
    out = symbolic_array((n, m, m))
    for i in range(n):
        for a in range(m):
            for b in range(m):
                out[i, a, b] = d_y(N.N[i, a], b)
    N._cache["dyN"] = out
    return out


def frame_matrix_field(N: NConnectionField) -> np.ndarray:
    """
    Symbolic E with frame vectors as rows: E[i, i] = 1, E[i, n+a] = −N^a_i,
    E[n+a, n+a] = 1; the lower-left block vanishes.
    """
    if "frame" in N._cache:
        return N._cache["frame"]
    n, m = N.dims.n, N.dims.m
    E = symbolic_array((n + m, n + m))
    for alpha in range(n + m):
        E[alpha, alpha] = ONE
    E[:n, n:] = map_array(neg, N.N)
    N._cache["frame"] = E
    return E


def frame_from_coefficients(N_values: np.ndarray):
    """
    :param N_values: array (..., n, m) of N^a_i
    :return: (E, Einv) with batch axes leading
    """
    n, m = N_values.shape[-2:]
    batch = N_values.shape[:-2]
    E = np.broadcast_to(np.eye(n + m), batch + (n + m, n + m)).copy()
    Einv = E.copy()
    E[..., :n, n:] = -N_values
    Einv[..., :n, n:] = N_values
    return E, Einv


def frame_eval(N: NConnectionField, p: ChartPoint) -> FrameEval:
    p = p.check(N.dims)
    E, Einv = frame_from_coefficients(Evaluator.at(p).array(N.N))
    return FrameEval(E=E, Einv=Einv, at=p)


def nconnection_curvature(N: NConnectionField, p: ChartPoint) -> np.ndarray:
    """
    Ω^a_ij evaluated at p, shape (m, n, n)
    """
    p = p.check(N.dims)
    return Evaluator.at(p).array(nconnection_curvature_field(N))


def anholonomy_tables(N: NConnectionField, ev: Evaluator):
    """
    Full commutator table W[..., γ, α, β] for [e_α, e_β] = W^γ_αβ e_γ:
    [e_i, e_a] = ∂_a N^b_i e_b and [e_i, e_j] = Ω^a_ij e_a.
    """
    n, m = N.dims.n, N.dims.m
    omega = ev.array(nconnection_curvature_field(N))  # [..., a, i, j]
    dyN = ev.array(vertical_gradient_field(N))  # [..., i, b, a] = ∂_a N^b_i
    W = np.zeros(ev.batch_shape + (n + m,) * 3)
    W[..., n:, :n, :n] = omega
    W_v_hv = np.swapaxes(dyN, -3, -2)  # [..., b, i, a]
    W[..., n:, :n, n:] = W_v_hv
    W[..., n:, n:, :n] = -np.swapaxes(W_v_hv, -1, -2)
    return W, W_v_hv, omega


def anholonomy(N: NConnectionField, p: ChartPoint) -> AnholonomyEval:
    p = p.check(N.dims)
    W, W_v_hv, omega = anholonomy_tables(N, Evaluator.at(p))
    return AnholonomyEval(W=W, W_v_hv=W_v_hv, W_v_hh=omega, at=p)
