from typing import Dict, Optional, Sequence

import numpy as np

from anholo.schemas.clifford import (
    DiracSymbolEval,
    FrameGammaEval,
    GammaRep,
    SpinDConnectionEval,
)
from anholo.schemas.fields import DMetric
from anholo.schemas.geometry import ChartPoint
from anholo.models.nodes.expression.evaluator import Evaluator
from anholo.models.components.geometry.metric import block_inverse, metric_blocks
from anholo.models.components.geometry.dconnection import (
    canonical_dconnection_field,
    full_connection,
    metric_gradients,
)
from anholo.models.components.clifford.gamma import build_gamma
from anholo.utils.errors import NotPositiveDefiniteError


def _cholesky(block: np.ndarray, name: str) -> np.ndarray:
    if block.shape[-1] == 0:
        return np.zeros(block.shape)
    try:
        return np.linalg.cholesky(block)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefiniteError(f"{name} block is not positive definite") from e


def _cholesky_derivative(L: np.ndarray, dG: np.ndarray) -> np.ndarray:
    """
    Directional derivatives of a Cholesky factor, dL = L Φ(L⁻¹ dG L⁻ᵀ) with
    Φ the lower triangle and a halved diagonal
    :param L: factors (..., k, k)
    :param dG: derivatives of L Lᵀ along each direction (..., D, k, k)
    :return: (..., D, k, k)
    """
    k = L.shape[-1]
    if k == 0:
        return np.zeros(dG.shape)
    L_inv = np.linalg.inv(L)[..., None, :, :]
    X = L_inv @ dG @ np.swapaxes(L_inv, -1, -2)
    phi = np.tril(X)
    diagonal = np.arange(k)
    phi[..., diagonal, diagonal] *= 0.5
    return L[..., None, :, :] @ phi


def vielbein_tables(M: DMetric, ev: Evaluator) -> Dict[str, np.ndarray]:
    """
    Block Cholesky vielbein V = blockdiag(chol g, chol h) so that
    V Vᵀ = blockdiag(g, h), A = V⁻ᵀ, and the frame derivatives of both
    """
    n, m = M.dims.n, M.dims.m
    g, h, _ = metric_blocks(M, ev)
    dg, dh = (ev.array(block) for block in metric_gradients(M))
    Lg, Lh = _cholesky(g, "g"), _cholesky(h, "h")
    batch = ev.batch_shape
    D = n + m
    V = np.zeros(batch + (D, D))
    V[..., :n, :n] = Lg
    V[..., n:, n:] = Lh
    dV = np.zeros(batch + (D, D, D))  # [μ, α, â]
    dV[..., :n, :n] = _cholesky_derivative(Lg, np.moveaxis(dg, -1, -3))
    dV[..., n:, n:] = _cholesky_derivative(Lh, np.moveaxis(dh, -1, -3))
    A = np.swapaxes(block_inverse(V), -1, -2)
    dA = -A[..., None, :, :] @ np.swapaxes(dV, -1, -2) @ A[..., None, :, :]
    inverse = np.zeros(batch + (D, D))
    inverse[..., :n, :n] = block_inverse(g)
    inverse[..., n:, n:] = block_inverse(h)
    return dict(V=V, A=A, dV=dV, dA=dA, inverse=inverse)


def _check_rep(rep: GammaRep, M: DMetric) -> GammaRep:
    if rep.dim != M.dims.total:
        raise ValueError(
            f"Gamma rep of dimension {rep.dim} does not match n+m = {M.dims.total}"
        )
    return rep


def spin_tables(M: DMetric, rep: GammaRep, ev: Evaluator) -> Dict[str, np.ndarray]:
    """
    Frame gammas and spin connection over the evaluator's batch.
    ω^â_b̂μ = V_αâ (e_μ A_αb̂ + Γ^α_βμ A_βb̂) is the d-connection in the
    orthonormal frame ê_b̂ = A_βb̂ e_β, and ρ_μ = ¼ ω^â_b̂μ γ^â γ^b̂.
    """
    rep = _check_rep(rep, M)
    n = M.dims.n
    tables = vielbein_tables(M, ev)
    V, A, dA = tables["V"], tables["A"], tables["dA"]
    gamma = full_connection(*canonical_dconnection_field(M).evaluate_with(ev))
    omega = np.einsum("...xa,...mxb->...abm", V, dA) + np.einsum(
        "...xa,...xym,...yb->...abm", V, gamma, A
    )
    products = np.einsum("akl,blp->abkp", rep.gammas, rep.gammas)
    h_mask = np.zeros(omega.shape[-3:-1])
    h_mask[:n, :n] = 1.0
    v_mask = 1.0 - h_mask
    rho_h = 0.25 * np.einsum(
        "...abm,abkl->...mkl", omega * h_mask[..., None], products
    )
    rho_v = 0.25 * np.einsum(
        "...abm,abkl->...mkl", omega * v_mask[..., None], products
    )
    frame = np.einsum("...ab,bkl->...akl", A, rep.gammas)
    tables.update(
        omega=omega, rho=rho_h + rho_v, rho_h=rho_h, rho_v=rho_v, gammas=frame
    )
    return tables


def _anticommutator_residual(gammas: np.ndarray, inverse: np.ndarray) -> float:
    K = gammas.shape[-1]
    anti = np.einsum("akl,blp->abkp", gammas, gammas)
    anti = anti + np.swapaxes(anti, 0, 1)
    target = 2.0 * inverse[:, :, None, None] * np.eye(K)
    return float(np.max(np.abs(anti - target)))


def frame_gamma(G: GammaRep, M: DMetric, p: ChartPoint) -> FrameGammaEval:
    """
    γ^α(u) with {γ^α, γ^β} = 2 g^αβ I in the adapted frame
    """
    p = M.point(p)
    G = _check_rep(G, M)
    tables = vielbein_tables(M, Evaluator.at(p))
    gammas = np.einsum("ab,bkl->akl", tables["A"], G.gammas)
    return FrameGammaEval(
        gammas=gammas,
        vielbein=tables["V"],
        anticommutator_residual=_anticommutator_residual(gammas, tables["inverse"]),
        at=p,
    )


def spin_dconnection(M: DMetric, G: GammaRep, p: ChartPoint) -> SpinDConnectionEval:
    p = M.point(p)
    tables = spin_tables(M, G, Evaluator.at(p))
    rho = tables["rho"]
    residual = float(
        np.max(np.abs(rho + np.conj(np.swapaxes(rho, -1, -2))), initial=0.0)
    )
    return SpinDConnectionEval(
        rho=rho,
        rho_h=tables["rho_h"],
        rho_v=tables["rho_v"],
        omega=tables["omega"],
        anti_hermitian_residual=residual,
        at=p,
    )


def dirac_symbol(
    M: DMetric, p: ChartPoint, k: Sequence[float], rep: Optional[GammaRep] = None
) -> DiracSymbolEval:
    """
    σ(k) = γ^α(p) k_α; σ(k)² = (g^αβ k_α k_β) I
    """
    p = M.point(p)
    rep = rep or build_gamma(M.dims.total)
    k = np.asarray(k, dtype=float)
    if k.shape != (M.dims.total,):
        raise ValueError(f"Covector must have length {M.dims.total}")
    frame = frame_gamma(rep, M, p)
    sigma = np.einsum("a,akl->kl", k, frame.gammas)
    inverse = vielbein_tables(M, Evaluator.at(p))["inverse"]
    norm_squared = float(k @ inverse @ k)
    residual = float(np.max(np.abs(sigma @ sigma - norm_squared * np.eye(rep.k))))
    inverse_norm = (
        float(np.linalg.norm(np.linalg.inv(sigma), 2)) if norm_squared > 0 else None
    )
    return DiracSymbolEval(
        sigma=sigma,
        k=k.tolist(),
        norm_squared=norm_squared,
        square_residual=residual,
        inverse_norm=inverse_norm,
        at=p,
    )
