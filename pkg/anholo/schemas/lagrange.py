from typing import Any, List, Optional

import numpy as np
from pydantic import BaseModel, PrivateAttr, validator

from anholo.schemas.geometry import ChartPoint, Dimensions, EvaluatedModel
from anholo.models.nodes.expression.tree import Expression
from anholo.models.nodes.expression.parser import parse


class Lagrangian(BaseModel):
    """
    Regular Lagrangian L(x, y) on the tangent bundle, so m = n
    """

    dims: Dimensions
    L: Any
    _cache: dict = PrivateAttr(default_factory=dict)

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator("dims")
    def must_be_tangent_bundle(cls, v):
        if v.m != v.n:
            raise ValueError(f"Lagrangian needs m = n, got n={v.n}, m={v.m}")
        return v

    @validator("L")
    def must_be_expression(cls, v):
        if not isinstance(v, Expression):
            raise ValueError(f"L must be an Expression, got {type(v).__name__}")
        return v

    @staticmethod
    def from_text(text: str, n: int) -> "Lagrangian":
        dims = Dimensions(n=n, m=n)
        return Lagrangian(dims=dims, L=parse(text, dims))


class Semispray(BaseModel):
    """
    Coefficients G^i(x, y) of S = y^i ∂/∂x^i − 2 G^i ∂/∂y^i
    """

    dims: Dimensions
    G: Any

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False


class Trajectory(EvaluatedModel):
    """
    RK4 samples of a geodesic: tau (steps+1,), x and y (steps+1, n)
    """

    tau: np.ndarray
    x: np.ndarray
    y: np.ndarray

    @property
    def end(self) -> ChartPoint:
        return ChartPoint(x=self.x[-1].tolist(), y=self.y[-1].tolist())


class AlmostComplexEval(EvaluatedModel):
    """
    F in the adapted frame and conjugated to the coordinate basis, with the
    residuals of F² = −I and of g-compatibility with the Sasaki lift
    """

    F: np.ndarray
    F_coordinate: np.ndarray
    square_residual: float
    compatibility_residual: float
    at: ChartPoint


class FinslerReport(BaseModel):

    testable: bool
    is_finsler: Optional[bool] = None
    max_deviation: Optional[float] = None
    lambdas: List[float] = []
    reason: Optional[str] = None
    at: ChartPoint
