from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, root_validator, validator

from anholo.utils.errors import EnvelopeError
from anholo.utils.globals import MAX_TOTAL_DIMENSION


class Dimensions(BaseModel):
    """
    h-dimension n and v-dimension m of the chart (x^1..x^n, y^1..y^m).
    allow_empty_fiber admits m = 0, used only by degenerate lattice checks.
    """

    n: int
    m: int
    allow_empty_fiber: bool = False

    class Config:
        frozen = True

    @validator("n")
    def must_have_base(cls, v):
        if v < 1:
            raise ValueError("n must be at least 1")
        return v

    @root_validator(skip_on_failure=True)
    def must_fit_envelope(cls, values):
        m = values["m"]
        if m < 0 or (m == 0 and not values.get("allow_empty_fiber")):
            raise ValueError("m must be at least 1")
        if values["n"] + m > MAX_TOTAL_DIMENSION:
            raise EnvelopeError(f"n+m must not exceed {MAX_TOTAL_DIMENSION}")
        return values

    @property
    def total(self) -> int:
        return self.n + self.m

    def label(self, alpha: int) -> str:
        """
        Report label of a 0-based full index, v-indices offset by n
        """
        return f"x{alpha + 1}" if alpha < self.n else f"y{alpha - self.n + 1}"


class ChartPoint(BaseModel):

    x: List[float]
    y: List[float]

    def check(self, dims: Dimensions) -> "ChartPoint":
        if len(self.x) != dims.n or len(self.y) != dims.m:
            raise ValueError(
                f"Chart point ({len(self.x)}, {len(self.y)}) does not match "
                f"dims ({dims.n}, {dims.m})"
            )
        return self

    @property
    def u(self) -> np.ndarray:
        return np.array(self.x + self.y, dtype=float)

    @staticmethod
    def from_u(u, dims: Dimensions) -> "ChartPoint":
        u = [float(v) for v in u]
        return ChartPoint(x=u[: dims.n], y=u[dims.n :])

    def to_json(self) -> Dict:
        return {"x": list(self.x), "y": list(self.y)}


class EvaluatedModel(BaseModel):
    class Config:
        arbitrary_types_allowed = True


class FrameEval(EvaluatedModel):
    """
    Adapted frame at a point: rows of E are the frame vectors
    e_i = ∂_i − N^a_i ∂_a and e_a = ∂_a in the coordinate basis,
    Einv is the dual coframe matrix.
    """

    E: np.ndarray
    Einv: np.ndarray
    at: Optional[ChartPoint] = None


class AnholonomyEval(EvaluatedModel):
    """
    W[γ, α, β] with [e_α, e_β] = W^γ_αβ e_γ over the full 0-based index
    """

    W: np.ndarray
    W_v_hv: np.ndarray  # W^b_ia = ∂_a N^b_i, indexed [b, i, a]
    W_v_hh: np.ndarray  # W^a_ij = Ω^a_ij, indexed [a, i, j]
    at: ChartPoint


class SplitMetric(EvaluatedModel):

    g: np.ndarray
    h: np.ndarray
    N: np.ndarray  # [i, a] = N^a_i
    frame: FrameEval


class DConnectionEval(EvaluatedModel):

    Lhh: np.ndarray  # [i, j, k] = L^i_jk
    Lvv: np.ndarray  # [a, b, k] = L^a_bk
    Chh: np.ndarray  # [i, j, c] = C^i_jc
    Cvv: np.ndarray  # [a, b, c] = C^a_bc
    at: ChartPoint

    def full(self) -> np.ndarray:
        """
        Γ[α, β, μ] = (D_{e_μ} e_β)^α over the full index, zero off the blocks
        """
        n, m = self.Lhh.shape[0], self.Cvv.shape[0]
        gamma = np.zeros((n + m, n + m, n + m))
        gamma[:n, :n, :n] = self.Lhh
        gamma[n:, n:, :n] = self.Lvv
        gamma[:n, :n, n:] = self.Chh
        gamma[n:, n:, n:] = self.Cvv
        return gamma


class LeviCivitaEval(EvaluatedModel):
    """
    coefficients[γ, α, β] = (∇_{e_α} e_β)^γ in the adapted frame.
    Distortion blocks compare the canonical d-connection with the matching
    Levi-Civita components.
    """

    coefficients: np.ndarray
    distortion: Dict[str, np.ndarray]
    predicted: Dict[str, np.ndarray]
    residual: float
    mixed: Dict[str, np.ndarray]
    at: ChartPoint


class TorsionEval(EvaluatedModel):

    Thhh: np.ndarray  # [i, j, k] = T^i_jk
    Thhv: np.ndarray  # [i, j, a] = T^i_ja
    Tvhh: np.ndarray  # [a, j, i] = T^a_ji
    Tvvh: np.ndarray  # [a, b, i] = T^a_bi
    Tvvv: np.ndarray  # [a, b, c] = T^a_bc
    at: ChartPoint


class CurvatureEval(EvaluatedModel):

    R_hhhh: np.ndarray  # [i, h, j, k] = R^i_hjk
    R_vvhh: np.ndarray  # [a, b, j, k] = R^a_bjk
    R_hhhv: np.ndarray  # [i, j, k, a] = R^i_jka
    R_vvhv: np.ndarray  # [c, b, k, a] = R^c_bka
    R_hhvv: np.ndarray  # [i, j, b, c] = R^i_jbc
    R_vvvv: np.ndarray  # [a, b, c, d] = R^a_bcd
    at: Any = None


class RicciEval(EvaluatedModel):

    Rij: np.ndarray
    Ria: np.ndarray
    Rai: np.ndarray
    Rab: np.ndarray
    scalar: Any
    h_scalar: Any
    v_scalar: Any
    at: Any = None


class CompatibilityEval(EvaluatedModel):
    """
    Residuals of D̂g = 0: g along k, h along k, g along c, h along c
    """

    g_h: np.ndarray
    h_h: np.ndarray
    g_v: np.ndarray
    h_v: np.ndarray
    at: ChartPoint

    @property
    def max_residual(self) -> float:
        return float(
            max(np.max(np.abs(r), initial=0.0) for r in self.blocks().values())
        )

    def blocks(self):
        return {"g_h": self.g_h, "h_h": self.h_h, "g_v": self.g_v, "h_v": self.h_v}
