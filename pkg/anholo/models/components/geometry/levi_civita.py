from typing import Dict

import numpy as np

from anholo.schemas.fields import DMetric
from anholo.schemas.geometry import ChartPoint, LeviCivitaEval
from anholo.models.nodes.expression.calculus import coordinate_gradient
from anholo.models.nodes.expression.evaluator import Evaluator
from anholo.models.components.geometry.metric import (
    assemble_offdiagonal_field,
    check_nondegenerate,
    metric_blocks,
)
from anholo.models.components.geometry.nconnection import (
    frame_matrix_field,
    nconnection_curvature_field,
    vertical_gradient_field,
)
from anholo.models.components.geometry.dconnection import canonical_dconnection_field


def coordinate_christoffel(G: np.ndarray, dG: np.ndarray) -> np.ndarray:
    """
    Γ^ρ_νσ of a coordinate metric, stored [ρ, ν, σ]
    :param G: metric matrix (..., D, D)
    :param dG: partials (..., D, D, D), dG[κ, σ, ν] = ∂_ν G_κσ
    """
    G_inv = np.linalg.inv(check_nondegenerate(G, "assembled metric"))
    lowered = (
        np.swapaxes(dG, -1, -2)
        + dG
        - np.moveaxis(dG, -1, -3)
    )  # [κ, ν, σ] = ∂_ν G_κσ + ∂_σ G_κν − ∂_κ G_νσ
    return 0.5 * np.einsum("...rk,...kns->...rns", G_inv, lowered)


def adapted_levi_civita(M: DMetric, ev: Evaluator) -> np.ndarray:
    """
    Levi-Civita connection of the assembled metric in the adapted frame,
    lc[γ, α, β] = (∇_{e_α} e_β)^γ. With E holding the frame vectors as rows,
    ∇_{e_α} e_β = E_αν (∂_ν E_βρ + E_βσ Γ^ρ_νσ) ∂_ρ, and Einv maps ∂_ρ back.
    """
    n, m = M.dims.n, M.dims.m
    G_field = assemble_offdiagonal_field(M)
    G = ev.array(G_field)
    dG = ev.array(coordinate_gradient(G_field, n, m))
    # dG[κ, σ, ν] = ∂_ν G_κσ
    christoffel = coordinate_christoffel(G, dG)
    E_field = frame_matrix_field(M.N)
    E = ev.array(E_field)
    dE = ev.array(coordinate_gradient(E_field, n, m))  # [β, ρ, ν] = ∂_ν E_βρ
    E_inv = np.linalg.inv(E)
    transported = np.einsum("...an,...brn->...abr", E, dE) + np.einsum(
        "...an,...bs,...rns->...abr", E, E, christoffel
    )
    return np.einsum("...rg,...abr->...gab", E_inv, transported)


def _distortion_blocks(lc: np.ndarray, connection, n: int) -> Dict[str, np.ndarray]:
    """
    Canonical minus Levi-Civita, block by block; the canonical coefficient
    (D_k e_j)^i is paired with the Levi-Civita component (∇_{e_j} e_k)^i.
    """
    Lhh, Lvv, Chh, Cvv = connection
    return {
        "P_hhh": Lhh - lc[..., :n, :n, :n],
        "P_vvh": Lvv - lc[..., n:, n:, :n],
        "P_hhv": Chh - lc[..., :n, :n, n:],
        "P_vvv": Cvv - lc[..., n:, n:, n:],
    }


def _predicted_distortion(M: DMetric, ev: Evaluator) -> Dict[str, np.ndarray]:
    """
    P^i_jk = 0, P^a_bk = e_b N^a_k, P^i_jc = −½ g^ik Ω^a_kj h_ca, P^a_bc = 0
    """
    n, m = M.dims.n, M.dims.m
    g, h, _ = metric_blocks(M, ev)
    omega = ev.array(nconnection_curvature_field(M.N))  # [a, k, j]
    dyN = ev.array(vertical_gradient_field(M.N))  # [k, a, b] = ∂_b N^a_k
    g_inv = np.linalg.inv(g)
    batch = ev.batch_shape
    return {
        "P_hhh": np.zeros(batch + (n, n, n)),
        "P_vvh": np.moveaxis(dyN, -3, -1),
        "P_hhv": -0.5 * np.einsum("...ik,...akj,...ca->...ijc", g_inv, omega, h),
        "P_vvv": np.zeros(batch + (m, m, m)),
    }


def levi_civita(M: DMetric, p: ChartPoint) -> LeviCivitaEval:
    """
    Levi-Civita connection of the assembled metric in the adapted frame and
    the distortion of the canonical d-connection relative to it
    """
    p = M.point(p)
    n = M.dims.n
    ev = Evaluator.at(p)
    lc = adapted_levi_civita(M, ev)
    connection = canonical_dconnection_field(M).evaluate_with(ev)
    distortion = _distortion_blocks(lc, connection, n)
    predicted = _predicted_distortion(M, ev)
    residual = max(
        float(np.max(np.abs(distortion[k] - predicted[k]), initial=0.0))
        for k in distortion
    )
    mixed = {
        # v-components of derivatives of h-frame vectors, and vice versa
        "v_of_h": lc[n:, :, :n],
        "h_of_v": lc[:n, :, n:],
    }
    return LeviCivitaEval(
        coefficients=lc,
        distortion=distortion,
        predicted=predicted,
        residual=residual,
        mixed=mixed,
        at=p,
    )
