from itertools import combinations
from typing import Dict, Optional, Tuple

import numpy as np

from anholo.utils.errors import FormDegreeError


MultiIndex = Tuple[int, ...]


def _sorted_sign(indices: MultiIndex) -> Tuple[Optional[MultiIndex], int]:
    """
    Increasing rearrangement of a multi-index and the sign of the permutation,
    (None, 0) when an index repeats
    """
    if len(set(indices)) != len(indices):
        return None, 0
    inversions = sum(
        1 for i, j in combinations(range(len(indices)), 2) if indices[i] > indices[j]
    )
    return tuple(sorted(indices)), -1 if inversions % 2 else 1


def _multiply(a: np.ndarray, b: np.ndarray, sa: tuple, sb: tuple) -> np.ndarray:
    if len(sa) == 2 and len(sb) == 2:
        return a @ b
    if not sa:
        return a.reshape(a.shape + (1,) * len(sb)) * b
    return a * b.reshape(b.shape + (1,) * len(sa))


class FormField:
    """
    Differential form over a batch of grid nodes in the adapted coframe.
    components[I] holds the coefficient of e^I for increasing multi-indices I,
    with shape batch_shape + value_shape (value_shape () for scalar forms,
    (r, r) for matrix-valued ones). Missing components are zero.
    """

    def __init__(
        self,
        dim: int,
        degree: int,
        components: Dict[MultiIndex, np.ndarray],
        batch_shape: tuple,
        value_shape: tuple = (),
    ):
        if not 0 <= degree <= dim:
            raise FormDegreeError(f"Degree {degree} form on a {dim}-direction chart")
        for key in components:
            if len(key) != degree or list(key) != sorted(set(key)):
                raise FormDegreeError(
                    f"Component {key} is not an increasing {degree}-index"
                )
            if key and not 0 <= key[-1] < dim:
                raise FormDegreeError(f"Component {key} outside {dim} directions")
        self.dim = dim
        self.degree = degree
        self.batch_shape = tuple(batch_shape)
        self.value_shape = tuple(value_shape)
        self.components = {
            k: np.broadcast_to(v, self.batch_shape + self.value_shape)
            for k, v in components.items()
        }

    @staticmethod
    def constant(dim: int, value, batch_shape: tuple) -> "FormField":
        value = np.asarray(value)
        components = {(): np.broadcast_to(value, batch_shape + value.shape)}
        return FormField(dim, 0, components, batch_shape, value.shape)

    @staticmethod
    def volume(dim: int, batch_shape: tuple, scale: float = 1.0) -> "FormField":
        """
        scale · e^0 ∧ … ∧ e^(dim−1)
        """
        components = {tuple(range(dim)): np.full(batch_shape, float(scale))}
        return FormField(dim, dim, components, batch_shape)

    @staticmethod
    def from_antisymmetric(
        coefficients: np.ndarray, batch_ndim: int = 1
    ) -> "FormField":
        """
        2-form from F[..., μ, ν, *value] with F antisymmetric in (μ, ν)
        """
        batch_shape = coefficients.shape[:batch_ndim]
        dim = coefficients.shape[batch_ndim]
        value_shape = coefficients.shape[batch_ndim + 2 :]
        moved = np.moveaxis(coefficients, (batch_ndim, batch_ndim + 1), (0, 1))
        pairs = combinations(range(dim), 2)
        components = {(mu, nu): moved[mu, nu] for mu, nu in pairs}
        return FormField(dim, 2, components, batch_shape, value_shape)

    def zero_component(self) -> np.ndarray:
        return np.zeros(self.batch_shape + self.value_shape)

    def __getitem__(self, indices: MultiIndex) -> np.ndarray:
        key, sign = _sorted_sign(tuple(indices))
        if key is None or key not in self.components:
            return self.zero_component()
        return sign * self.components[key]

    def _check_compatible(self, other: "FormField"):
        if (self.dim, self.degree) != (other.dim, other.degree):
            raise FormDegreeError(
                f"Cannot add degree {other.degree} to degree {self.degree} forms"
            )

    def __add__(self, other: "FormField") -> "FormField":
        self._check_compatible(other)
        components = dict(self.components)
        for k, v in other.components.items():
            components[k] = components[k] + v if k in components else v
        return FormField(
            self.dim, self.degree, components, self.batch_shape, self.value_shape
        )

    def __sub__(self, other: "FormField") -> "FormField":
        return self + other.scale(-1.0)

    def scale(self, factor) -> "FormField":
        return FormField(
            self.dim,
            self.degree,
            {k: factor * v for k, v in self.components.items()},
            self.batch_shape,
            self.value_shape,
        )

    def wedge(self, other: "FormField") -> "FormField":
        """
        (α ∧ β)_K = Σ sign(I, J) α_I β_J over disjoint I, J merging to K;
        matrix values multiply as matrices in the given order
        """
        if self.dim != other.dim:
            raise FormDegreeError("Forms live on charts of different dimensions")
        degree = self.degree + other.degree
        if degree > self.dim:
            raise FormDegreeError(f"Wedge of degree {degree} exceeds {self.dim}")
        components: Dict[MultiIndex, np.ndarray] = {}
        for I, a in self.components.items():
            for J, b in other.components.items():
                key, sign = _sorted_sign(I + J)
                if key is None:
                    continue
                term = sign * _multiply(a, b, self.value_shape, other.value_shape)
                components[key] = components.get(key, 0) + term
        value_shape = self.value_shape if not other.value_shape else other.value_shape
        return FormField(self.dim, degree, components, self.batch_shape, value_shape)

    def power(self, k: int) -> "FormField":
        out = self
        for _ in range(k - 1):
            out = out.wedge(self)
        return out

    def trace(self) -> "FormField":
        if len(self.value_shape) != 2:
            raise ValueError("Trace needs a matrix-valued form")
        return FormField(
            self.dim,
            self.degree,
            {k: np.trace(v, axis1=-2, axis2=-1) for k, v in self.components.items()},
            self.batch_shape,
        )

    def top(self) -> np.ndarray:
        if self.degree != self.dim:
            raise FormDegreeError(
                f"Degree {self.degree} form is not top degree on {self.dim} directions"
            )
        return self[tuple(range(self.dim))]

    def max_abs(self) -> float:
        return max(
            (float(np.max(np.abs(v), initial=0.0)) for v in self.components.values()),
            default=0.0,
        )

    def imaginary_residual(self) -> float:
        return max(
            (
                float(np.max(np.abs(np.imag(v)), initial=0.0))
                for v in self.components.values()
            ),
            default=0.0,
        )
