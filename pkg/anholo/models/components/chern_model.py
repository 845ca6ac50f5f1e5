from math import factorial
from typing import Any, Dict, Optional, Union

import numpy as np
from pydantic import BaseModel, validate_arguments

from anholo.schemas.chern import (
    ChernCharacter,
    ChernFormField,
    CurvatureFormField,
    IndexPairingReport,
)
from anholo.schemas.clifford import GridSpec
from anholo.schemas.fields import DMetric
from anholo.models.nodes.expression.evaluator import Evaluator
from anholo.models.nodes.forms.form_field import FormField
from anholo.models.nodes.lattice.periodic_grid import PeriodicLattice
from anholo.models.components.geometry.curvature import curvature_tables
from anholo.models.components.geometry.dconnection import (
    canonical_dconnection_field,
)
from anholo.utils.errors import EnvelopeError, FormDegreeError
from anholo.utils.globals import DEFAULT_TOLERANCES
from anholo.utils.logging import LOGGER
from anholo.utils.progress_bar import progress_bar as pb


def _lattice(grid: GridSpec, dim: int) -> PeriodicLattice:
    lattice = PeriodicLattice(grid)
    if lattice.dimension != dim:
        raise ValueError(f"Grid has {lattice.dimension} directions, expected {dim}")
    return lattice


def curvature_form_from_dconnection(
    M: DMetric, grid: GridSpec, source: str = "dconnection"
) -> CurvatureFormField:
    """
    R(e_μ, e_ν) as (n+m)×(n+m) matrices over the full frame, block diagonal in
    (h, v) and assembled from the six d-curvature families
    """
    n, D = M.dims.n, M.dims.total
    nodes = _lattice(grid, D).nodes()
    LOGGER.info(f"Evaluating {source} curvature on {grid.grid_id}")
    ev = Evaluator.on_nodes(nodes[:, :n], nodes[:, n:])
    tables = curvature_tables(M, canonical_dconnection_field(M), ev)
    R = np.zeros((len(nodes), D, D, D, D))
    R[:, :n, :n, :n, :n] = np.einsum("vihnm->vmnih", tables["R_hhhh"])
    R[:, :n, :n, n:, n:] = np.einsum("vabnm->vmnab", tables["R_vvhh"])
    R[:, :n, n:, :n, :n] = -np.einsum("vijka->vkaij", tables["R_hhhv"])
    R[:, :n, n:, n:, n:] = -np.einsum("vcbka->vkacb", tables["R_vvhv"])
    R[:, n:, :n] = -np.swapaxes(R[:, :n, n:], 1, 2)
    R[:, n:, n:, :n, :n] = np.einsum("vijcb->vbcij", tables["R_hhvv"])
    R[:, n:, n:, n:, n:] = np.einsum("vabdc->vcdab", tables["R_vvvv"])
    return CurvatureFormField(rank=D, R=R, grid=grid.grid_id, source=source)


def curvature_form_from_nconnection(M: DMetric, grid: GridSpec) -> CurvatureFormField:
    """
    R^[N]: the same pipeline fed with g = I, h = I so only N and its
    derivatives remain
    """
    return curvature_form_from_dconnection(M.euclidean_blocks(), grid, "nconnection")


def decode_curvature(raw: Any) -> np.ndarray:
    """
    Nested real lists, or a mapping with "real" and "imag" arrays of one shape
    """
    if isinstance(raw, dict):
        real = np.asarray(raw["real"], dtype=float)
        imag = np.asarray(raw.get("imag", np.zeros_like(real)), dtype=float)
        if real.shape != imag.shape:
            raise ValueError(f"Curvature parts differ: {real.shape} vs {imag.shape}")
        return real + 1j * imag
    return np.asarray(raw, dtype=complex)


def curvature_form_from_synthetic(values, grid: GridSpec) -> CurvatureFormField:
    """
    :param values: (V, D, D, r, r) per node, or (D, D, r, r) held constant
    """
    lattice = PeriodicLattice(grid)
    R = np.asarray(values, dtype=complex)
    if R.ndim == 4:
        R = np.broadcast_to(R, (lattice.volume,) + R.shape).copy()
    if R.ndim != 5 or R.shape[0] != lattice.volume:
        raise ValueError(f"Synthetic curvature shape {R.shape} does not fit the grid")
    if R.shape[1] != lattice.dimension:
        raise ValueError(f"Synthetic curvature has {R.shape[1]} form directions")
    return CurvatureFormField(
        rank=R.shape[-1], R=R, grid=grid.grid_id, source="synthetic"
    )


def monopole_curvature(q: int, grid: GridSpec) -> CurvatureFormField:
    """
    Rank-1 constant curvature F_12 = −2πi q/(L_1 L_2) on a 2-torus
    """
    if len(grid.sizes) != 2:
        raise ValueError("Monopole curvature lives on a 2-torus grid")
    area = float(np.prod(grid.lengths))
    F = np.zeros((2, 2, 1, 1), dtype=complex)
    F[0, 1, 0, 0] = -2j * np.pi * q / area
    F[1, 0, 0, 0] = -F[0, 1, 0, 0]
    return curvature_form_from_synthetic(F, grid)


def _normalized(F: CurvatureFormField) -> FormField:
    return F.form().scale(1j / (2.0 * np.pi))


def _check_degree(F: CurvatureFormField, k: int):
    if k < 1 or 2 * k > F.dim:
        raise EnvelopeError(f"Chern degree 2·{k} outside 2..{F.dim}")


def chern_form(F: CurvatureFormField, k: int) -> ChernFormField:
    """
    Tr((i/2π R)^k), the k-fold wedge power traced
    """
    _check_degree(F, k)
    form = _normalized(F).power(k).trace()
    return ChernFormField(degree=2 * k, form=form, grid=F.grid, label=f"tr(X^{k})")


def chern_class_form(F: CurvatureFormField, k: int) -> ChernFormField:
    """
    c_k from det(I + X), X = (i/2π) R, through the Newton identities:
    c_1 = Tr X, c_2 = ½ (Tr X ∧ Tr X − Tr(X ∧ X))
    """
    _check_degree(F, k)
    X = _normalized(F)
    c1 = X.trace()
    if k == 1:
        form = c1
    elif k == 2:
        form = (c1.wedge(c1) - X.power(2).trace()).scale(0.5)
    else:
        raise EnvelopeError("Chern classes are expanded up to c_2")
    return ChernFormField(degree=2 * k, form=form, grid=F.grid, label=f"c{k}")


def chern_character(
    F: CurvatureFormField, max_k: Optional[int] = None
) -> ChernCharacter:
    """
    ch = Σ_k Tr(X^k)/k! truncated at the chart dimension, including the rank
    """
    top = F.dim // 2 if max_k is None else min(max_k, F.dim // 2)
    batch = (F.R.shape[0],)
    parts = {
        0: ChernFormField(
            degree=0,
            form=FormField.constant(F.dim, float(F.rank), batch),
            grid=F.grid,
            label="rank",
        )
    }
    for k in range(1, top + 1):
        trace = chern_form(F, k)
        parts[2 * k] = ChernFormField(
            degree=2 * k,
            form=trace.form.scale(1.0 / factorial(k)),
            grid=F.grid,
            label=f"ch{k}",
        )
    return ChernCharacter(rank=F.rank, parts=parts, grid=F.grid, source=F.source)


def integrate_form(f: Union[ChernFormField, FormField], grid: GridSpec) -> float:
    """
    Riemann sum of the top-degree coefficient times the cell volume, real part
    """
    form = f.form if isinstance(f, ChernFormField) else f
    lattice = _lattice(grid, form.dim)
    if form.degree != form.dim:
        raise FormDegreeError(
            f"Only top-degree forms integrate, got degree {form.degree} of {form.dim}"
        )
    top = form.top()
    if top.shape != (lattice.volume,):
        raise ValueError(f"Form has {top.shape} values, grid has {lattice.volume}")
    return float(np.real(np.sum(top)) * lattice.cell_volume)


def unit_class(grid: GridSpec) -> ChernFormField:
    lattice = PeriodicLattice(grid)
    form = FormField.constant(lattice.dimension, 1.0, (lattice.volume,))
    return ChernFormField(degree=0, form=form, grid=grid.grid_id, label="1")


def volume_class(grid: GridSpec) -> ChernFormField:
    """
    Volume form normalized to total integral 1
    """
    lattice = PeriodicLattice(grid)
    total = float(np.prod(lattice.lengths))
    form = FormField.volume(lattice.dimension, (lattice.volume,), 1.0 / total)
    return ChernFormField(
        degree=lattice.dimension, form=form, grid=grid.grid_id, label="vol"
    )


def index_pairing(
    ch: Union[ChernCharacter, ChernFormField], t: ChernFormField, grid: GridSpec
) -> float:
    """
    ∫ ch ∧ t; for a full character the part of complementary degree is used
    """
    target = len(grid.sizes) - t.degree
    if isinstance(ch, ChernCharacter):
        part = ch.part(target)
        if part is None:
            raise FormDegreeError(f"Character has no degree {target} part")
    else:
        part = ch
    if part.degree != target:
        raise FormDegreeError(
            f"Degrees {part.degree} + {t.degree} do not fill {len(grid.sizes)}"
        )
    return integrate_form(part.form.wedge(t.form), grid)


def index_pairings(M: DMetric, t: ChernFormField, grid: GridSpec) -> IndexPairingReport:
    """
    The pairing for the d-connection curvature and for R^[N], side by side
    """
    values, imaginary = [], []
    for F in (
        curvature_form_from_dconnection(M, grid),
        curvature_form_from_nconnection(M, grid),
    ):
        ch = chern_character(F)
        values.append(index_pairing(ch, t, grid))
        imaginary.append(max(p.imaginary_residual for p in ch.parts.values()))
    return IndexPairingReport(
        dconnection=values[0],
        nconnection=values[1],
        t_degree=t.degree,
        t_label=t.label,
        grid=grid.grid_id,
        imaginary=imaginary,
    )


def character_block(ch: ChernCharacter, grid: GridSpec) -> Dict[str, Any]:
    block: Dict[str, Any] = {"grid": ch.grid, "source": ch.source, "rank": ch.rank}
    for degree, part in sorted(ch.parts.items()):
        entry = {
            "label": part.label,
            "max_abs": part.form.max_abs(),
            "imaginary_residual": part.imaginary_residual,
            "real": part.imaginary_residual <= DEFAULT_TOLERANCES["chern_real"],
        }
        if degree == len(grid.sizes):
            entry["integral"] = integrate_form(part, grid)
        block[f"degree_{degree}"] = entry
    return block


class ChernModelConf(BaseModel):
    """
    Truncation of the character and the integrality tolerance
    """

    max_k: Optional[int] = None
    integrality_tolerance: float = DEFAULT_TOLERANCES["integrality"]


class ChernModel:
    """
    Chern character, c_1 and c_2 of curvature sources on one periodic grid
    """

    def __init__(self, config: ChernModelConf):
        self.config = config

    def curvature_block(self, F: CurvatureFormField, grid: GridSpec) -> Dict[str, Any]:
        block = character_block(chern_character(F, self.config.max_k), grid)
        for k in (1, 2):
            if 2 * k > F.dim:
                continue
            c = chern_class_form(F, k)
            entry = {"max_abs": c.form.max_abs(), "grid": F.grid}
            if c.degree == F.dim:
                integral = integrate_form(c, grid)
                entry["integral"] = integral
                entry["integral_defect"] = abs(integral - round(integral))
                entry["integral_near_integer"] = (
                    entry["integral_defect"] <= self.config.integrality_tolerance
                )
            block[f"c{k}"] = entry
        return block

    @validate_arguments(config=dict(arbitrary_types_allowed=True))
    def run(
        self,
        grid: GridSpec,
        metric: Optional[DMetric] = None,
        synthetic: Optional[CurvatureFormField] = None,
        progress_bar: bool = False,
    ) -> Dict[str, Any]:
        LOGGER.info("Starting Chern Model")
        sources = []
        if metric is not None:
            sources += [
                ("dconnection", lambda: curvature_form_from_dconnection(metric, grid)),
                ("nconnection", lambda: curvature_form_from_nconnection(metric, grid)),
            ]
        if synthetic is not None:
            sources.append(("synthetic", lambda: synthetic))
        report = {}
        sources = pb(sources, "curvature sources") if progress_bar else sources
        for name, build in sources:
            report[name] = self.curvature_block(build(), grid)
        return report
