from functools import lru_cache, reduce

import numpy as np

from anholo.schemas.clifford import DistinguishedGamma, GammaRep
from anholo.schemas.geometry import Dimensions
from anholo.utils.errors import EnvelopeError
from anholo.utils.globals import MAX_GAMMA_DIMENSION


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@lru_cache(maxsize=None)
def _gammas(d: int):
    """
    Tensor-product recursion: even d = 2p adds σx ⊗ I and σy ⊗ I in front of
    σz ⊗ γ(d − 2); odd d = 2p + 1 appends (−i)^p γ1…γ2p to γ(2p).
    """
    if d == 0:
        return ()
    if d == 1:
        return (np.ones((1, 1), dtype=complex),)
    if d % 2 == 0:
        inner = _gammas(d - 2)
        size = inner[0].shape[0] if inner else 1
        identity = np.eye(size, dtype=complex)
        head = (np.kron(PAULI_X, identity), np.kron(PAULI_Y, identity))
        return head + tuple(np.kron(PAULI_Z, g) for g in inner)
    p = (d - 1) // 2
    even = _gammas(d - 1)
    chirality = (-1j) ** p * reduce(np.matmul, even)
    return even + (chirality,)


def build_gamma(d: int) -> GammaRep:
    """
    Self-adjoint generators of the Euclidean Clifford algebra in dimension d
    :param d: 1 ≤ d ≤ MAX_GAMMA_DIMENSION
    """
    if not 1 <= d <= MAX_GAMMA_DIMENSION:
        raise EnvelopeError(f"Gamma dimension must be in 1..{MAX_GAMMA_DIMENSION}")
    gammas = np.array(_gammas(d))
    gammas.setflags(write=False)
    return GammaRep(dim=d, k=gammas.shape[-1], gammas=gammas)


def distinguished_gamma(dims: Dimensions) -> DistinguishedGamma:
    """
    h-rep of dimension n, v-rep of dimension m and the couple γ^α = (γ^i, γ^a)
    as the first n and last m generators of the (n+m)-dimensional rep
    """
    return DistinguishedGamma(
        h_rep=build_gamma(dims.n),
        v_rep=build_gamma(dims.m) if dims.m else None,
        couple=build_gamma(dims.total),
        n=dims.n,
        m=dims.m,
    )
