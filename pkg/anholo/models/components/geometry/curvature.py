from typing import Dict

import numpy as np

from anholo.schemas.fields import DMetric
from anholo.schemas.geometry import ChartPoint, CurvatureEval, RicciEval
from anholo.models.nodes.expression.evaluator import Evaluator
from anholo.models.components.geometry.metric import block_inverse, metric_blocks
from anholo.models.components.geometry.nconnection import (
    nconnection_curvature_field,
    vertical_gradient_field,
)
from anholo.models.components.geometry.dconnection import DConnectionField


def _antisymmetrized(block: np.ndarray) -> np.ndarray:
    return block - np.swapaxes(block, -1, -2)


def curvature_tables(M: DMetric, field: DConnectionField, ev: Evaluator) -> Dict:
    """
    The six d-curvature blocks over the evaluator's batch. Each block is the
    component of R(e_last, e_prev) applied to the frame vector in the second slot,
    e.g. R_hhhh[i, h, j, k] = (R(e_k, e_j) e_h)^i.
    """
    n = M.dims.n
    L, Lv, C, Cv = field.evaluate_with(ev)
    dL, dLv, dC, dCv = field.gradients_with(ev)
    omega = ev.array(nconnection_curvature_field(M.N))  # [a, k, j]
    dyN = ev.array(vertical_gradient_field(M.N))  # [k, b, a] = ∂_a N^b_k
    # T^b_ka = ∂_a N^b_k − L^b_ak
    T = np.swapaxes(dyN, -3, -2) - np.swapaxes(Lv, -1, -2)

    R_hhhh = (
        _antisymmetrized(dL[..., :n])
        + _antisymmetrized(np.einsum("...mhj,...imk->...ihjk", L, L))
        - np.einsum("...iha,...akj->...ihjk", C, omega)
    )
    R_vvhh = (
        _antisymmetrized(dLv[..., :n])
        + _antisymmetrized(np.einsum("...cbj,...ack->...abjk", Lv, Lv))
        - np.einsum("...abc,...ckj->...abjk", Cv, omega)
    )

    # D_k C^i_ja laid out [i, j, k, a]
    DC = (
        np.swapaxes(dC[..., :n], -1, -2)
        + np.einsum("...imk,...mja->...ijka", L, C)
        - np.einsum("...mjk,...ima->...ijka", L, C)
        - np.einsum("...bak,...ijb->...ijka", Lv, C)
    )
    R_hhhv = dL[..., n:] - DC + np.einsum("...ijb,...bka->...ijka", C, T)

    # D_k C^c_ba laid out [c, b, k, a]
    DCv = (
        np.swapaxes(dCv[..., :n], -1, -2)
        + np.einsum("...cdk,...dba->...cbka", Lv, Cv)
        - np.einsum("...dbk,...cda->...cbka", Lv, Cv)
        - np.einsum("...dak,...cbd->...cbka", Lv, Cv)
    )
    R_vvhv = dLv[..., n:] - DCv + np.einsum("...cbd,...dka->...cbka", Cv, T)

    R_hhvv = _antisymmetrized(dC[..., n:]) + _antisymmetrized(
        np.einsum("...hjb,...ihc->...ijbc", C, C)
    )
    R_vvvv = _antisymmetrized(dCv[..., n:]) + _antisymmetrized(
        np.einsum("...ebc,...aed->...abcd", Cv, Cv)
    )
    return dict(
        R_hhhh=R_hhhh,
        R_vvhh=R_vvhh,
        R_hhhv=R_hhhv,
        R_vvhv=R_vvhv,
        R_hhvv=R_hhvv,
        R_vvvv=R_vvvv,
    )


def d_curvature(M: DMetric, D: DConnectionField, p: ChartPoint) -> CurvatureEval:
    p = M.point(p)
    return CurvatureEval(at=p, **curvature_tables(M, D, Evaluator.at(p)))


def ricci_tables(M: DMetric, curvature: Dict, ev: Evaluator) -> Dict:
    """
    R_ij = R^k_ijk, R_ia = −R^k_ika, R_ai = R^b_aib, R_ab = R^c_abc and the
    scalar g^ij R_ij + h^ab R_ab split into its h- and v-parts
    """
    g, h, _ = metric_blocks(M, ev)
    Rij = np.einsum("...kijk->...ij", curvature["R_hhhh"])
    Ria = -np.einsum("...kika->...ia", curvature["R_hhhv"])
    Rai = np.einsum("...baib->...ai", curvature["R_vvhv"])
    Rab = np.einsum("...cabc->...ab", curvature["R_vvvv"])
    h_scalar = np.einsum("...ij,...ij->...", block_inverse(g), Rij)
    v_scalar = np.einsum("...ab,...ab->...", block_inverse(h), Rab)
    return dict(
        Rij=Rij,
        Ria=Ria,
        Rai=Rai,
        Rab=Rab,
        scalar=h_scalar + v_scalar,
        h_scalar=h_scalar,
        v_scalar=v_scalar,
    )


def ricci_and_scalar(M: DMetric, D: DConnectionField, p: ChartPoint) -> RicciEval:
    p = M.point(p)
    ev = Evaluator.at(p)
    tables = ricci_tables(M, curvature_tables(M, D, ev), ev)
    for key in ("scalar", "h_scalar", "v_scalar"):
        tables[key] = float(tables[key])
    return RicciEval(at=p, **tables)


def scalar_curvature_on_nodes(
    M: DMetric, D: DConnectionField, x_nodes: np.ndarray, y_nodes: np.ndarray
) -> np.ndarray:
    """
    ←R at every node of a grid, shape (V,)
    """
    ev = Evaluator.on_nodes(x_nodes, y_nodes)
    return ricci_tables(M, curvature_tables(M, D, ev), ev)["scalar"]
