from typing import Any, List, Optional, Union

import numpy as np
from pydantic import BaseModel, PrivateAttr, validator, root_validator

from anholo.schemas.geometry import ChartPoint, Dimensions
from anholo.models.nodes.expression.tree import (
    Expression,
    symbolic_array,
    to_symbolic_array,
)
from anholo.models.nodes.expression.parser import parse


ExpressionGrid = Union[np.ndarray, List[List[Any]]]


def _as_matrix(values, shape, name: str) -> np.ndarray:
    if int(np.prod(shape)) == 0:
        return np.empty(shape, dtype=object)
    matrix = values if isinstance(values, np.ndarray) else to_symbolic_array(values)
    if matrix.dtype != object:
        matrix = to_symbolic_array(matrix.tolist())
    if matrix.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {matrix.shape}")
    return matrix


class NConnectionField(BaseModel):
    """
    Coefficients N^a_i(u) of N = N^a_i dx^i ⊗ ∂_a, stored as N[i, a].
    """

    dims: Dimensions
    N: Any
    _cache: dict = PrivateAttr(default_factory=dict)

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator("N", pre=True)
    def must_be_expression_grid(cls, v, values):
        dims = values.get("dims")
        if dims is None:
            return v
        return _as_matrix(v, (dims.n, dims.m), "N")

    @staticmethod
    def zero(dims: Dimensions) -> "NConnectionField":
        return NConnectionField(dims=dims, N=symbolic_array((dims.n, dims.m)))

    @staticmethod
    def from_text(rows: List[List[str]], dims: Dimensions) -> "NConnectionField":
        """
        :param rows: n rows of m strings, rows[i][a] is N^{a}_{i}
        """
        return NConnectionField(dims=dims, N=parse_grid(rows, dims))


def parse_grid(rows, dims: Dimensions) -> np.ndarray:
    raw = np.array(rows, dtype=object)
    out = np.empty(raw.shape, dtype=object)
    for idx in np.ndindex(raw.shape):
        entry = raw[idx]
        out[idx] = entry if isinstance(entry, Expression) else parse(str(entry), dims)
    return out


class DMetric(BaseModel):
    """
    d-metric g_ij(u) dx^i dx^j + h_ab(u) e^a e^b with e^a = dy^a + N^a_i dx^i.
    g and h must be symmetric as expressions; nondegeneracy is checked where
    they are evaluated.
    """

    dims: Dimensions
    g: Any
    h: Any
    N: NConnectionField
    _cache: dict = PrivateAttr(default_factory=dict)

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator("g", pre=True)
    def g_must_be_grid(cls, v, values):
        dims = values.get("dims")
        return v if dims is None else _as_matrix(v, (dims.n, dims.n), "g")

    @validator("h", pre=True)
    def h_must_be_grid(cls, v, values):
        dims = values.get("dims")
        return v if dims is None else _as_matrix(v, (dims.m, dims.m), "h")

    @validator("g", "h")
    def must_be_symmetric(cls, v, field):
        for r in range(v.shape[0]):
            for c in range(r):
                if v[r, c] is not v[c, r] and v[r, c] != v[c, r]:
                    raise ValueError(f"{field.name} is not symmetric at ({r}, {c})")
        return v

    @root_validator(skip_on_failure=True)
    def must_share_dims(cls, values):
        if values["N"].dims != values["dims"]:
            raise ValueError("N-connection and d-metric dimensions differ")
        return values

    @staticmethod
    def from_text(g, h, N, dims: Dimensions) -> "DMetric":
        return DMetric(
            dims=dims,
            g=parse_grid(g, dims),
            h=parse_grid(h, dims),
            N=NConnectionField.from_text(N, dims),
        )

    @staticmethod
    def flat(dims: Dimensions, N: Optional[NConnectionField] = None) -> "DMetric":
        return DMetric(
            dims=dims,
            g=to_symbolic_array(np.eye(dims.n).tolist()),
            h=to_symbolic_array(np.eye(dims.m).tolist()),
            N=N or NConnectionField.zero(dims),
        )

    def euclidean_blocks(self) -> "DMetric":
        """
        Same N-connection with g = I and h = I, the source of R^[N]
        """
        return DMetric.flat(self.dims, self.N)

    def point(self, p: ChartPoint) -> ChartPoint:
        return p.check(self.dims)
