import numpy as np

from anholo.schemas.fields import DMetric
from anholo.schemas.geometry import ChartPoint, DConnectionEval, TorsionEval
from anholo.models.nodes.expression.evaluator import Evaluator
from anholo.models.components.geometry.nconnection import (
    nconnection_curvature_field,
    vertical_gradient_field,
)


def torsion_blocks(omega, dyN, Lhh, Lvv, Chh, Cvv):
    """
    T^i_jk = L^i_jk − L^i_kj, T^i_ja = C^i_ja, T^a_ji = Ω^a_ji,
    T^a_bi = ∂_b N^a_i − L^a_bi, T^a_bc = C^a_bc − C^a_cb
    """
    return dict(
        Thhh=Lhh - np.swapaxes(Lhh, -1, -2),
        Thhv=Chh,
        Tvhh=omega,
        Tvvh=np.moveaxis(dyN, -3, -1) - Lvv,
        Tvvv=Cvv - np.swapaxes(Cvv, -1, -2),
    )


def d_torsion(M: DMetric, D: DConnectionEval, p: ChartPoint) -> TorsionEval:
    p = M.point(p)
    ev = Evaluator.at(p)
    blocks = torsion_blocks(
        ev.array(nconnection_curvature_field(M.N)),
        ev.array(vertical_gradient_field(M.N)),
        D.Lhh,
        D.Lvv,
        D.Chh,
        D.Cvv,
    )
    return TorsionEval(at=p, **blocks)
