from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, validator, root_validator

from anholo.schemas.geometry import ChartPoint, EvaluatedModel


class GammaRep(EvaluatedModel):
    """
    d self-adjoint k×k matrices with γ^â γ^b̂ + γ^b̂ γ^â = 2 δ^âb̂ I,
    k = 2^⌊d/2⌋, stored as gammas[â]
    """

    dim: int
    k: int
    gammas: np.ndarray

    def anticommutator_residual(self) -> float:
        identity = np.eye(self.k)
        residual = 0.0
        for a in range(self.dim):
            for b in range(self.dim):
                ga, gb = self.gammas[a], self.gammas[b]
                anti = ga @ gb + gb @ ga
                target = 2.0 * identity if a == b else 0.0 * identity
                residual = max(residual, float(np.max(np.abs(anti - target))))
        return residual

    def hermiticity_residual(self) -> float:
        return float(
            max(
                (np.max(np.abs(g - g.conj().T)) for g in self.gammas),
                default=0.0,
            )
        )


class DistinguishedGamma(EvaluatedModel):
    """
    h-rep on the base, v-rep on the fiber and the couple γ^α = (γ^i, γ^a)
    taken from one rep of dimension n+m
    """

    h_rep: GammaRep
    v_rep: Optional[GammaRep] = None
    couple: GammaRep
    n: int
    m: int

    @property
    def horizontal(self) -> np.ndarray:
        return self.couple.gammas[: self.n]

    @property
    def vertical(self) -> np.ndarray:
        return self.couple.gammas[self.n :]


class FrameGammaEval(EvaluatedModel):
    """
    gammas[α] = γ^α(u) = A[α, â] γ^â with A = V⁻ᵀ and V the block Cholesky
    vielbein of blockdiag(g, h)
    """

    gammas: np.ndarray
    vielbein: np.ndarray
    anticommutator_residual: float
    at: ChartPoint


class SpinDConnectionEval(EvaluatedModel):
    """
    rho[μ] acts on K-spinors; rho = rho_h + rho_v with the parts built from
    the h- and v-blocks of the d-connection
    """

    rho: np.ndarray
    rho_h: np.ndarray
    rho_v: np.ndarray
    omega: np.ndarray  # [â, b̂, μ] in the orthonormal frame
    anti_hermitian_residual: float
    at: ChartPoint


class DiracSymbolEval(EvaluatedModel):

    sigma: np.ndarray
    k: List[float]
    norm_squared: float  # g^αβ k_α k_β
    square_residual: float
    inverse_norm: Optional[float] = None
    at: ChartPoint


class GridSpec(BaseModel):
    """
    Periodic box [0, L_μ) over the full chart coordinates (x, y) with
    sizes[μ] nodes per direction
    """

    sizes: List[int]
    lengths: List[float]

    @validator("lengths", each_item=True)
    def must_be_positive(cls, v):
        if v <= 0:
            raise ValueError("Box lengths must be positive")
        return v

    @root_validator(skip_on_failure=True)
    def must_match(cls, values):
        if len(values["sizes"]) != len(values["lengths"]):
            raise ValueError("sizes and lengths must have the same length")
        return values

    @property
    def grid_id(self) -> str:
        sizes = "x".join(str(s) for s in self.sizes)
        lengths = "x".join(f"{v:g}" for v in self.lengths)
        return f"{sizes}@{lengths}"


class LatticeDirac(EvaluatedModel):
    """
    Sparse Dirac d-operator on a periodic grid, global index node·K + spin.
    horizontal + vertical = matrix.
    """

    grid: GridSpec
    K: int
    matrix: Any
    horizontal: Any
    vertical: Any
    metric: Any
    covariant: List[Any] = []  # ∇_α = e_α + ρ_α on spinor fields
    inverse_metric: Any = None  # blockdiag(g⁻¹, h⁻¹) per node
    connection: Any = None  # Γ[V, α, β, μ] per node

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


class SpinorField(EvaluatedModel):

    values: np.ndarray  # (V, K) complex

    @validator("values")
    def must_be_finite(cls, v):
        if not np.all(np.isfinite(v)):
            raise ValueError("Spinor field has non-finite entries")
        return v

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)


class DiracSpectrum(EvaluatedModel):

    eigenvalues: np.ndarray  # lowest |λ| first
    symmetry_residual: float
    self_adjoint_residual: float
    grid: str


class LichnerowiczReport(BaseModel):

    residual: float
    residual_nconnection: float
    scalar_range: List[float]
    basis_columns: int
    grid: str
    details: Dict[str, float] = {}
