from typing import Any

import numpy as np
from scipy.spatial.transform import Rotation

from anholo.schemas.cech import GroupSpec
from anholo.utils.errors import CochainError
from anholo.utils.globals import ORTHOGONALITY_TOLERANCE, QUATERNION_SIGN_TOLERANCE


class Group:
    """
    Coefficient group of a cochain: identity, product, inverse, and the
    JSON encoding of its elements
    """

    abelian = True

    def identity(self) -> Any:
        raise NotImplementedError

    def multiply(self, a, b) -> Any:
        raise NotImplementedError

    def inverse(self, a) -> Any:
        raise NotImplementedError

    def decode(self, raw) -> Any:
        return raw

    def encode(self, value) -> Any:
        return value

    def distance(self, a, b) -> float:
        return float(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b))))

    def product(self, *elements) -> Any:
        out = self.identity()
        for e in elements:
            out = self.multiply(out, e)
        return out

    def act(self, g, vector: np.ndarray) -> np.ndarray:
        raise CochainError(f"{type(self).__name__} has no action on vectors")


class Z2Group(Group):
    """
    {+1, −1} under multiplication
    """

    def identity(self):
        return 1

    def multiply(self, a, b):
        return a * b

    def inverse(self, a):
        return a

    def act(self, g, vector):
        return g * vector

    def decode(self, raw):
        value = int(raw)
        if value not in (1, -1):
            raise CochainError(f"Z/2 values are encoded as ±1, got {raw}")
        return value


class CyclicGroup(Group):
    """
    Z/k written additively
    """

    def __init__(self, order: int):
        self.order = order

    def identity(self):
        return 0

    def multiply(self, a, b):
        return (a + b) % self.order

    def inverse(self, a):
        return (-a) % self.order

    def decode(self, raw):
        return int(raw) % self.order


class OrthogonalGroup(Group):
    """
    O(d) as real d×d matrices, rows encoded row-major
    """

    abelian = False

    def __init__(self, dim: int):
        self.dim = dim

    def identity(self):
        return np.eye(self.dim)

    def multiply(self, a, b):
        return a @ b

    def inverse(self, a):
        return a.T

    def act(self, g, vector):
        return g @ vector

    def decode(self, raw):
        matrix = np.asarray(raw, dtype=float).reshape(self.dim, self.dim)
        deviation = np.max(np.abs(matrix.T @ matrix - np.eye(self.dim)))
        if deviation > ORTHOGONALITY_TOLERANCE:
            raise CochainError(f"Matrix is not orthogonal (deviation {deviation:.3e})")
        return matrix

    def encode(self, value):
        return np.asarray(value).tolist()


class QuaternionGroup(Group):
    """
    Unit quaternions (w, x, y, z) under the Hamilton product
    """

    abelian = False

    def identity(self):
        return np.array([1.0, 0.0, 0.0, 0.0])

    def multiply(self, a, b):
        return hamilton(a, b)

    def inverse(self, a):
        return conjugate(a)

    def act(self, g, vector):
        return quaternion_rotation(g) @ vector

    def decode(self, raw):
        q = np.asarray(raw, dtype=float).reshape(4)
        norm = np.linalg.norm(q)
        if abs(norm - 1.0) > ORTHOGONALITY_TOLERANCE:
            raise CochainError(f"Quaternion is not a unit quaternion (|q| = {norm})")
        return q

    def encode(self, value):
        return np.asarray(value).tolist()


def hamilton(a, b) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def conjugate(q) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def canonical_sign(q) -> np.ndarray:
    """
    Deterministic lift: the first component with |c| > tolerance is nonnegative
    """
    q = np.asarray(q, dtype=float)
    for c in q:
        if abs(c) > QUATERNION_SIGN_TOLERANCE:
            return q if c > 0 else -q
    return q


def rotation_lift(matrix) -> np.ndarray:
    """
    Unit quaternion (w, x, y, z) over a rotation matrix, sign canonicalized
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape != (3, 3):
        raise CochainError("Spin lifts are defined for 3×3 rotations only")
    deviation = np.max(np.abs(matrix.T @ matrix - np.eye(3)))
    if deviation > ORTHOGONALITY_TOLERANCE or np.linalg.det(matrix) < 0:
        raise CochainError(f"Not a rotation (orthogonality deviation {deviation:.3e})")
    x, y, z, w = Rotation.from_matrix(matrix).as_quat()
    return canonical_sign([w, x, y, z])


def quaternion_rotation(q) -> np.ndarray:
    w, x, y, z = q
    return Rotation.from_quat([x, y, z, w]).as_matrix()


def build_group(spec: GroupSpec) -> Group:
    if spec.kind == "z2":
        return Z2Group()
    if spec.kind == "zk":
        return CyclicGroup(spec.order)
    if spec.kind == "orthogonal":
        return OrthogonalGroup(spec.dim)
    if spec.kind == "quaternion":
        return QuaternionGroup()
    raise ValueError(f"Invalid group kind {spec.kind}")
