from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, validate_arguments

from anholo.schemas.clifford import GridSpec
from anholo.schemas.fields import DMetric
from anholo.schemas.geometry import ChartPoint
from anholo.schemas.output import InvariantCheck
from anholo.models.components.clifford.gamma import build_gamma, distinguished_gamma
from anholo.models.components.clifford.spin import (
    dirac_symbol,
    frame_gamma,
    spin_dconnection,
)
from anholo.models.components.clifford.dirac import (
    assemble_dirac,
    dirac_spectrum,
    lichnerowicz_residual,
)
from anholo.utils.globals import DEFAULT_SEED, DEFAULT_TOLERANCES
from anholo.utils.logging import LOGGER
from anholo.utils.progress_bar import progress_bar as pb


Block = Tuple[Dict[str, Any], List[InvariantCheck]]


class CliffordModelConf(BaseModel):
    """
    Evaluation points, lattice and knobs of a spin geometry run
    """

    probes: List[ChartPoint] = []
    grid: Optional[GridSpec] = None
    tolerances: Dict[str, float] = dict(DEFAULT_TOLERANCES)
    symbol_covector: Optional[List[float]] = None
    spectrum_count: int = 8
    lichnerowicz_max_mode: int = 1
    seed: int = DEFAULT_SEED


class CliffordModel:
    """
    Gamma algebras, spin d-connection and the lattice Dirac d-operator of a
    positive definite d-metric
    """

    POINT_TASKS = ("frame_gamma", "spin_connection", "dirac_symbol")
    GRID_TASKS = ("dirac_spectrum", "lichnerowicz")

    def __init__(self, config: CliffordModelConf):
        self.config = config
        self.rng = np.random.default_rng(config.seed)

    def _check(self, name: str, residual: float, key: str, where) -> InvariantCheck:
        return InvariantCheck.of(name, residual, self.config.tolerances[key], where)

    def _grid(self) -> GridSpec:
        if self.config.grid is None:
            raise ValueError("Lattice tasks need a grid")
        return self.config.grid

    def covector(self, D: int) -> np.ndarray:
        if self.config.symbol_covector is not None:
            return np.asarray(self.config.symbol_covector, dtype=float)
        return self.rng.normal(size=D)

    def gamma_block(self, M: DMetric) -> Block:
        couple = distinguished_gamma(M.dims)
        reps = {"h": couple.h_rep, "couple": couple.couple}
        if couple.v_rep is not None:
            reps["v"] = couple.v_rep
        block = {
            "n": M.dims.n,
            "m": M.dims.m,
            "k": {name: rep.k for name, rep in reps.items()},
        }
        checks = []
        for name, rep in reps.items():
            where = {"rep": name, "dim": rep.dim}
            checks.append(
                self._check(
                    f"clifford_relation_{name}",
                    rep.anticommutator_residual(),
                    "clifford",
                    where,
                )
            )
            checks.append(
                self._check(
                    f"self_adjoint_{name}",
                    rep.hermiticity_residual(),
                    "clifford",
                    where,
                )
            )
        return block, checks

    def frame_gamma_block(self, M: DMetric, p: ChartPoint) -> Block:
        frame = frame_gamma(build_gamma(M.dims.total), M, p)
        return {
            "at": p.to_json(),
            "gammas": frame.gammas,
            "vielbein": frame.vielbein,
        }, [
            self._check(
                "frame_clifford_relation",
                frame.anticommutator_residual,
                "symbol",
                p.to_json(),
            )
        ]

    def spin_connection_block(self, M: DMetric, p: ChartPoint) -> Block:
        spin = spin_dconnection(M, build_gamma(M.dims.total), p)
        return {
            "at": p.to_json(),
            "rho": spin.rho,
            "rho_h": spin.rho_h,
            "rho_v": spin.rho_v,
        }, [
            self._check(
                "spin_connection_anti_hermitian",
                spin.anti_hermitian_residual,
                "anti_hermitian",
                p.to_json(),
            )
        ]

    def dirac_symbol_block(self, M: DMetric, p: ChartPoint) -> Block:
        symbol = dirac_symbol(M, p, self.covector(M.dims.total))
        block = {
            "at": p.to_json(),
            "k": symbol.k,
            "sigma": symbol.sigma,
            "norm_squared": symbol.norm_squared,
            "inverse_norm": symbol.inverse_norm,
        }
        if symbol.inverse_norm is not None:
            block["ellipticity_margin"] = symbol.inverse_norm * np.sqrt(
                symbol.norm_squared
            )
        return block, [
            self._check("symbol_square", symbol.square_residual, "symbol", p.to_json())
        ]

    def dirac_spectrum_block(self, M: DMetric) -> Block:
        grid = self._grid()
        op = assemble_dirac(M, grid)
        spectrum = dirac_spectrum(op, self.config.spectrum_count)
        block = {
            "grid": spectrum.grid,
            "dimension": op.dimension,
            "eigenvalues": spectrum.eigenvalues,
            "symmetry_residual": spectrum.symmetry_residual,
        }
        return block, [
            self._check(
                "dirac_self_adjoint",
                spectrum.self_adjoint_residual,
                "anti_hermitian",
                spectrum.grid,
            )
        ]

    def lichnerowicz_block(self, M: DMetric) -> Block:
        report = lichnerowicz_residual(
            M, self._grid(), max_mode=self.config.lichnerowicz_max_mode
        )
        return report.dict(), [
            self._check("lichnerowicz", report.residual, "lichnerowicz", report.grid),
            self._check(
                "lichnerowicz_nconnection",
                report.residual_nconnection,
                "lichnerowicz",
                report.grid,
            ),
        ]

    def task(self, tag: str, M: DMetric) -> Block:
        if tag == "gamma":
            return self.gamma_block(M)
        if tag in self.GRID_TASKS:
            return getattr(self, f"{tag}_block")(M)
        if tag not in self.POINT_TASKS:
            raise ValueError(f"Invalid spin task {tag}")
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
        LOGGER.info("Starting Clifford Model")
        tasks = pb(tasks, "spin tasks") if progress_bar else tasks
        return {tag: self.task(tag, M) for tag in tasks}
