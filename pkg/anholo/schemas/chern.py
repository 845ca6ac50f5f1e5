from typing import Dict, List, Optional

import numpy as np
from pydantic import validator

from anholo.schemas.geometry import EvaluatedModel
from anholo.models.nodes.forms.form_field import FormField


class CurvatureFormField(EvaluatedModel):
    """
    R[v, μ, ν] is the r×r curvature matrix R(e_μ, e_ν) at node v of the grid,
    antisymmetric in (μ, ν)
    """

    rank: int
    R: np.ndarray
    grid: str
    source: str

    @validator("R")
    def must_be_antisymmetric(cls, v):
        if v.ndim != 5 or v.shape[1] != v.shape[2] or v.shape[3] != v.shape[4]:
            raise ValueError(f"Curvature field needs shape (V, D, D, r, r), {v.shape}")
        residual = np.max(np.abs(v + np.swapaxes(v, 1, 2)), initial=0.0)
        if residual > 1e-12 * max(1.0, np.max(np.abs(v), initial=0.0)):
            raise ValueError(f"Curvature field is not antisymmetric ({residual:.3e})")
        return v

    @property
    def dim(self) -> int:
        return self.R.shape[1]

    def form(self) -> FormField:
        return FormField.from_antisymmetric(self.R)


class ChernFormField(EvaluatedModel):
    """
    Scalar form of even degree per node, e.g. c_k, ch_k or a supplied class t
    """

    degree: int
    form: FormField
    grid: str
    label: str

    @validator("form")
    def degree_matches(cls, v, values):
        if "degree" in values and v.degree != values["degree"]:
            raise ValueError(f"Form has degree {v.degree}, expected {values['degree']}")
        if v.value_shape:
            raise ValueError("Chern forms are scalar-valued")
        return v

    @property
    def imaginary_residual(self) -> float:
        return self.form.imaginary_residual()


class ChernCharacter(EvaluatedModel):
    """
    parts[2k] = Tr((i/2π R)^k)/k!, parts[0] the rank
    """

    rank: int
    parts: Dict[int, ChernFormField]
    grid: str
    source: str

    def part(self, degree: int) -> Optional[ChernFormField]:
        return self.parts.get(degree)


class IndexPairingReport(EvaluatedModel):
    """
    ∫ ch ∧ t for the d-connection curvature and for R^[N]
    """

    dconnection: float
    nconnection: float
    t_degree: int
    t_label: str
    grid: str
    imaginary: List[float]
