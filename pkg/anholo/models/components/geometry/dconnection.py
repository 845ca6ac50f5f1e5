from typing import Any, Dict, Tuple

import numpy as np
from pydantic import BaseModel, PrivateAttr

from anholo.schemas.fields import DMetric
from anholo.schemas.geometry import ChartPoint, CompatibilityEval, DConnectionEval
from anholo.models.nodes.expression.tree import add_all, symbolic_array
from anholo.models.nodes.expression.calculus import frame_gradient
from anholo.models.nodes.expression.evaluator import Evaluator
from anholo.models.nodes.linalg.symbolic import symbolic_inverse, symbolic_symmetric
from anholo.models.components.geometry.metric import metric_blocks
from anholo.models.components.geometry.nconnection import vertical_gradient_field


BLOCKS = ("Lhh", "Lvv", "Chh", "Cvv")


class DConnectionField(BaseModel):
    """
    d-connection coefficients as symbolic fields, so they can be evaluated at
    evaluation points or over grids and differentiated along the adapted frame.
    Index layout: Lhh[i, j, k] = L^i_jk, Lvv[a, b, k] = L^a_bk,
    Chh[i, j, c] = C^i_jc, Cvv[a, b, c] = C^a_bc; the last index is the
    direction of differentiation.
    """

    metric: DMetric
    Lhh: Any
    Lvv: Any
    Chh: Any
    Cvv: Any
    _cache: dict = PrivateAttr(default_factory=dict)

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @property
    def dims(self):
        return self.metric.dims

    def blocks(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in BLOCKS}

    def gradients(self) -> Dict[str, np.ndarray]:
        """
        Frame derivatives of every block, derivative index appended last
        """
        if "gradients" not in self._cache:
            self._cache["gradients"] = {
                name: frame_gradient(block, self.metric.N.N)
                for name, block in self.blocks().items()
            }
        return self._cache["gradients"]

    def evaluate_with(self, ev: Evaluator) -> Tuple[np.ndarray, ...]:
        """
        :return: (Lhh, Lvv, Chh, Cvv) with the evaluator's batch axes leading
        """
        metric_blocks(self.metric, ev)
        return tuple(ev.array(block) for block in self.blocks().values())

    def gradients_with(self, ev: Evaluator) -> Tuple[np.ndarray, ...]:
        return tuple(ev.array(block) for block in self.gradients().values())

    def evaluate(self, p: ChartPoint) -> DConnectionEval:
        p = self.metric.point(p)
        Lhh, Lvv, Chh, Cvv = self.evaluate_with(Evaluator.at(p))
        return DConnectionEval(Lhh=Lhh, Lvv=Lvv, Chh=Chh, Cvv=Cvv, at=p)

    def evaluate_nodes(self, x_nodes: np.ndarray, y_nodes: np.ndarray):
        return self.evaluate_with(Evaluator.on_nodes(x_nodes, y_nodes))


def metric_gradients(M: DMetric) -> Tuple[np.ndarray, np.ndarray]:
    """
    :return: (e_μ g_ij [i, j, μ], e_μ h_ab [a, b, μ]) over the full frame index
    """
    if "gradients" not in M._cache:
        M._cache["gradients"] = (
            frame_gradient(M.g, M.N.N),
            frame_gradient(M.h, M.N.N),
        )
    return M._cache["gradients"]


def metric_inverses(M: DMetric) -> Tuple[np.ndarray, np.ndarray]:
    if "inverses" not in M._cache:
        M._cache["inverses"] = (
            symbolic_symmetric(symbolic_inverse(M.g)[0]),
            symbolic_symmetric(symbolic_inverse(M.h)[0]),
        )
    return M._cache["inverses"]


def canonical_dconnection_field(M: DMetric) -> DConnectionField:
    """
    Canonical d-connection of a d-metric, the unique metric compatible
    d-connection with vanishing pure horizontal and pure vertical torsion:
        L^i_jk = ½ g^ir (e_k g_jr + e_j g_kr − e_r g_jk)
        L^a_bk = ∂_b N^a_k + ½ h^ac (e_k h_bc − h_dc ∂_b N^d_k − h_db ∂_c N^d_k)
        C^i_jc = ½ g^ik ∂_c g_jk
        C^a_bc = ½ h^ad (∂_c h_bd + ∂_b h_cd − ∂_d h_bc)
    """
    if "dconnection" in M._cache:
        return M._cache["dconnection"]
    n, m = M.dims.n, M.dims.m
    g_inv, h_inv = metric_inverses(M)
    dg, dh = metric_gradients(M)
    dyN = vertical_gradient_field(M.N)
    h = M.h

    Lhh = symbolic_array((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(j, n):
                Lhh[i, j, k] = 0.5 * add_all(
                    g_inv[i, r] * (dg[j, r, k] + dg[k, r, j] - dg[j, k, r])
                    for r in range(n)
                )
                Lhh[i, k, j] = Lhh[i, j, k]

    Lvv = symbolic_array((m, m, n))
    for a in range(m):
        for b in range(m):
            for k in range(n):
                Lvv[a, b, k] = dyN[k, a, b] + 0.5 * add_all(
                    h_inv[a, c]
                    * (
                        dh[b, c, k]
                        - add_all(h[d, c] * dyN[k, d, b] for d in range(m))
                        - add_all(h[d, b] * dyN[k, d, c] for d in range(m))
                    )
                    for c in range(m)
                )

    Chh = symbolic_array((n, n, m))
    for i in range(n):
        for j in range(n):
            for c in range(m):
                Chh[i, j, c] = 0.5 * add_all(
                    g_inv[i, k] * dg[j, k, n + c] for k in range(n)
                )

    Cvv = symbolic_array((m, m, m))
    for a in range(m):
        for b in range(m):
            for c in range(b, m):
                Cvv[a, b, c] = 0.5 * add_all(
                    h_inv[a, d] * (dh[b, d, n + c] + dh[c, d, n + b] - dh[b, c, n + d])
                    for d in range(m)
                )
                Cvv[a, c, b] = Cvv[a, b, c]

    field = DConnectionField(metric=M, Lhh=Lhh, Lvv=Lvv, Chh=Chh, Cvv=Cvv)
    M._cache["dconnection"] = field
    return field


def canonical_dconnection(M: DMetric, p: ChartPoint) -> DConnectionEval:
    return canonical_dconnection_field(M).evaluate(p)


def compatibility_residuals(M: DMetric, field: DConnectionField, ev: Evaluator):
    """
    Adapted covariant derivatives of g and h; all four vanish for a metric
    compatible d-connection.
    """
    n = M.dims.n
    g, h, _ = metric_blocks(M, ev)
    Lhh, Lvv, Chh, Cvv = field.evaluate_with(ev)
    dg, dh = (ev.array(block) for block in metric_gradients(M))
    g_h = (
        dg[..., :n]
        - np.einsum("...lik,...lj->...ijk", Lhh, g)
        - np.einsum("...ljk,...il->...ijk", Lhh, g)
    )
    h_h = (
        dh[..., :n]
        - np.einsum("...cak,...cb->...abk", Lvv, h)
        - np.einsum("...cbk,...ac->...abk", Lvv, h)
    )
    g_v = (
        dg[..., n:]
        - np.einsum("...lic,...lj->...ijc", Chh, g)
        - np.einsum("...ljc,...il->...ijc", Chh, g)
    )
    h_v = (
        dh[..., n:]
        - np.einsum("...dac,...db->...abc", Cvv, h)
        - np.einsum("...dbc,...ad->...abc", Cvv, h)
    )
    return g_h, h_h, g_v, h_v


def metric_compatibility(M: DMetric, p: ChartPoint) -> CompatibilityEval:
    p = M.point(p)
    g_h, h_h, g_v, h_v = compatibility_residuals(
        M, canonical_dconnection_field(M), Evaluator.at(p)
    )
    return CompatibilityEval(g_h=g_h, h_h=h_h, g_v=g_v, h_v=h_v, at=p)


def full_connection(Lhh, Lvv, Chh, Cvv) -> np.ndarray:
    """
    Γ[..., α, β, μ] = (D_{e_μ} e_β)^α over the full index, zero off the blocks
    """
    n, m = Lhh.shape[-1], Cvv.shape[-1]
    batch = Lhh.shape[:-3]
    gamma = np.zeros(batch + (n + m,) * 3)
    gamma[..., :n, :n, :n] = Lhh
    gamma[..., n:, n:, :n] = Lvv
    gamma[..., :n, :n, n:] = Chh
    gamma[..., n:, n:, n:] = Cvv
    return gamma
