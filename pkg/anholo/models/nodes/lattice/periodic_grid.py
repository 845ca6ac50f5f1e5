from functools import reduce
from itertools import product
from typing import List

import numpy as np
import scipy.sparse as sp

from anholo.schemas.clifford import GridSpec
from anholo.utils.errors import EnvelopeError
from anholo.utils.globals import MIN_GRID_SIZE


class PeriodicLattice:
    """
    Nodes of a periodic box in C order (last direction fastest) and the
    second-order central-difference stencils acting on nodal functions
    """

    def __init__(self, grid: GridSpec):
        if any(s < MIN_GRID_SIZE for s in grid.sizes):
            raise EnvelopeError(f"Grid sizes must be at least {MIN_GRID_SIZE}")
        self.grid = grid
        self.sizes = list(grid.sizes)
        self.lengths = np.asarray(grid.lengths, dtype=float)
        self.spacings = self.lengths / np.asarray(self.sizes)
        self.volume = int(np.prod(self.sizes))

    @property
    def dimension(self) -> int:
        return len(self.sizes)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    def axes(self) -> List[np.ndarray]:
        return [np.arange(s) * h for s, h in zip(self.sizes, self.spacings)]

    def nodes(self) -> np.ndarray:
        """
        :return: array (V, D) of node coordinates
        """
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([c.reshape(-1) for c in mesh], axis=-1)

    def _central_1d(self, direction: int) -> sp.csr_matrix:
        size, h = self.sizes[direction], self.spacings[direction]
        forward = sp.diags([1.0, 1.0], [1, -(size - 1)], shape=(size, size))
        return ((forward - forward.T) / (2.0 * h)).tocsr()

    def derivative(self, direction: int) -> sp.csr_matrix:
        """
        Central difference along one direction, (V, V)
        """
        factors = [
            self._central_1d(mu) if mu == direction else sp.identity(s, format="csr")
            for mu, s in enumerate(self.sizes)
        ]
        return reduce(lambda a, b: sp.kron(a, b, format="csr"), factors)

    def wavenumbers(self, modes) -> np.ndarray:
        return 2.0 * np.pi * np.asarray(modes, dtype=float) / self.lengths

    def plane_wave(self, modes) -> np.ndarray:
        """
        exp(i k·u) sampled on the nodes for integer mode numbers
        """
        return np.exp(1j * self.nodes() @ self.wavenumbers(modes))

    def low_modes(self, max_mode: int = 1):
        """
        Integer mode vectors with every component in [−max_mode, max_mode]
        """
        return list(product(range(-max_mode, max_mode + 1), repeat=self.dimension))

    def smooth_basis(self, K: int, max_mode: int = 1) -> np.ndarray:
        """
        Smooth test subspace: low plane waves times the spinor basis,
        columns laid out node·K + spin
        """
        columns = []
        for modes in self.low_modes(max_mode):
            wave = self.plane_wave(modes)
            for s in range(K):
                column = np.zeros((self.volume, K), dtype=complex)
                column[:, s] = wave
                columns.append(column.reshape(-1))
        return np.stack(columns, axis=-1)


def spinor_lift(operator: sp.spmatrix, K: int) -> sp.csr_matrix:
    """
    Scalar nodal operator acting diagonally on the spinor index
    """
    return sp.kron(operator, sp.identity(K, format="csr"), format="csr")


def nodal_diagonal(values: np.ndarray, K: int) -> sp.csr_matrix:
    """
    Multiplication by a scalar nodal function on spinor fields
    """
    return sp.diags(np.repeat(np.asarray(values), K)).tocsr()


def block_diagonal(blocks: np.ndarray) -> sp.bsr_matrix:
    """
    Per-node K×K matrices (V, K, K) as one sparse block-diagonal operator
    """
    volume = blocks.shape[0]
    indices = np.arange(volume)
    indptr = np.arange(volume + 1)
    return sp.bsr_matrix(
        (np.ascontiguousarray(blocks, dtype=complex), indices, indptr),
        shape=(volume * blocks.shape[1], volume * blocks.shape[2]),
    )
