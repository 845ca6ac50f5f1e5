from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, validate_arguments

from anholo.schemas.fields import DMetric
from anholo.schemas.geometry import ChartPoint
from anholo.schemas.output import InvariantCheck
from anholo.models.nodes.expression.evaluator import Evaluator
from anholo.models.components.geometry.nconnection import (
    anholonomy,
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
from anholo.models.components.geometry.curvature import d_curvature, ricci_and_scalar
from anholo.utils.globals import DEFAULT_TOLERANCES
from anholo.utils.logging import LOGGER
from anholo.utils.progress_bar import progress_bar as pb


Block = Tuple[Dict[str, Any], List[InvariantCheck]]


def _max_abs(*arrays) -> float:
    return max((float(np.max(np.abs(a), initial=0.0)) for a in arrays), default=0.0)


class GeometryModelConf(BaseModel):
    """
    Evaluation points and invariant tolerances of a d-metric run
    """

    probes: List[ChartPoint]
    tolerances: Dict[str, float] = dict(DEFAULT_TOLERANCES)
    assembled: Optional[List[List[float]]] = None


class GeometryModel:
    """
    Evaluates the N-connection, d-connection, torsion and curvature tower of a
    d-metric at each evaluation point, one block per task tag
    """

    TASKS = (
        "nconnection_curvature",
        "anholonomy",
        "assemble_metric",
        "split_metric",
        "dconnection",
        "levi_civita",
        "torsion",
        "curvature",
        "ricci",
    )

    def __init__(self, config: GeometryModelConf):
        self.config = config

    def _check(self, name: str, residual: float, key: str, where) -> InvariantCheck:
        return InvariantCheck.of(name, residual, self.config.tolerances[key], where)

    def nconnection_curvature_block(self, M: DMetric, p: ChartPoint) -> Block:
        omega = nconnection_curvature(M.N, p)
        antisymmetry = _max_abs(omega + np.swapaxes(omega, -1, -2))
        return {"at": p.to_json(), "Omega": omega}, [
            self._check("omega_antisymmetric", antisymmetry, "symmetry", p.to_json())
        ]

    def anholonomy_block(self, M: DMetric, p: ChartPoint) -> Block:
        table = anholonomy(M.N, p)
        frame = frame_eval(M.N, p)
        identity = _max_abs(frame.E @ frame.Einv - np.eye(M.dims.total))
        return {
            "at": p.to_json(),
            "labels": [M.dims.label(alpha) for alpha in range(M.dims.total)],
            "W": table.W,
            "E": frame.E,
            "Einv": frame.Einv,
        }, [self._check("frame_dual", identity, "frame", p.to_json())]

    def assemble_metric_block(self, M: DMetric, p: ChartPoint) -> Block:
        G = assemble_offdiagonal(M, p)
        split = split_to_dmetric(G, M.dims)
        ev = Evaluator.at(p)
        recovered = _max_abs(
            split.g - ev.array(M.g), split.h - ev.array(M.h), split.N - ev.array(M.N.N)
        )
        check = self._check(
            "split_recovers_blocks", recovered, "compatibility", p.to_json()
        )
        return {"at": p.to_json(), "G": G}, [check]

    def split_metric_block(self, M: DMetric, p: ChartPoint) -> Block:
        if self.config.assembled is not None:
            G = np.asarray(self.config.assembled, dtype=float)
        else:
            G = assemble_offdiagonal(M, p)
        split = split_to_dmetric(G, M.dims)
        E = split.frame.E
        blocks = np.zeros_like(G, dtype=float)
        n = M.dims.n
        blocks[:n, :n], blocks[n:, n:] = split.g, split.h
        residual = _max_abs(E @ G @ E.T - blocks)
        return {"at": p.to_json(), "g": split.g, "h": split.h, "N": split.N}, [
            self._check("frame_diagonalizes", residual, "compatibility", p.to_json())
        ]

    def dconnection_block(self, M: DMetric, p: ChartPoint) -> Block:
        D = canonical_dconnection(M, p)
        compatibility = metric_compatibility(M, p)
        return {
            "at": p.to_json(),
            "Lhh": D.Lhh,
            "Lvv": D.Lvv,
            "Chh": D.Chh,
            "Cvv": D.Cvv,
        }, [
            self._check(
                "metric_compatible",
                compatibility.max_residual,
                "compatibility",
                p.to_json(),
            )
        ]

    def levi_civita_block(self, M: DMetric, p: ChartPoint) -> Block:
        lc = levi_civita(M, p)
        return {
            "at": p.to_json(),
            "coefficients": lc.coefficients,
            "distortion": lc.distortion,
            "mixed": lc.mixed,
        }, [self._check("distortion_matches", lc.residual, "distortion", p.to_json())]

    def torsion_block(self, M: DMetric, p: ChartPoint) -> Block:
        T = d_torsion(M, canonical_dconnection(M, p), p)
        return {
            "at": p.to_json(),
            "Thhv": T.Thhv,
            "Tvhh": T.Tvhh,
            "Tvvh": T.Tvvh,
        }, [
            self._check("pure_torsion_h", _max_abs(T.Thhh), "torsion", p.to_json()),
            self._check("pure_torsion_v", _max_abs(T.Tvvv), "torsion", p.to_json()),
        ]

    def curvature_block(self, M: DMetric, p: ChartPoint) -> Block:
        R = d_curvature(M, canonical_dconnection_field(M), p)
        blocks = {k: getattr(R, k) for k in ("R_hhhh", "R_vvhh", "R_hhvv", "R_vvvv")}
        antisymmetry = _max_abs(*(b + np.swapaxes(b, -1, -2) for b in blocks.values()))
        check = self._check(
            "curvature_antisymmetric", antisymmetry, "symmetry", p.to_json()
        )
        return dict(at=p.to_json(), R_hhhv=R.R_hhhv, R_vvhv=R.R_vvhv, **blocks), [
            check
        ]

    def ricci_block(self, M: DMetric, p: ChartPoint) -> Block:
        ricci = ricci_and_scalar(M, canonical_dconnection_field(M), p)
        return {
            "at": p.to_json(),
            "Rij": ricci.Rij,
            "Ria": ricci.Ria,
            "Rai": ricci.Rai,
            "Rab": ricci.Rab,
            "scalar": ricci.scalar,
            "h_scalar": ricci.h_scalar,
            "v_scalar": ricci.v_scalar,
        }, []

    def task(self, tag: str, M: DMetric) -> Block:
        if tag not in self.TASKS:
            raise ValueError(f"Invalid geometry task {tag}")
        method = getattr(self, f"{tag}_block")
        blocks, checks = [], []
        for p in self.config.probes:
            block, found = method(M, M.point(p))
            blocks.append(block)
            checks += found
        return {"probes": blocks}, checks

    @validate_arguments(config=dict(arbitrary_types_allowed=True))
    def run(
        self, M: DMetric, tasks: List[str], progress_bar: bool = False
    ) -> Dict[str, Block]:
        LOGGER.info("Starting Geometry Model")
        tasks = pb(tasks, "geometry tasks") if progress_bar else tasks
        return {tag: self.task(tag, M) for tag in tasks}
