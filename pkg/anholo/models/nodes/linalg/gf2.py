from typing import List, Optional, Tuple

import numpy as np
from sympy import GF
from sympy.polys.matrices import DomainMatrix


FIELD = GF(2)


def gf2_matrix(a) -> DomainMatrix:
    """
    :param a: 2-d integer array, reduced mod 2
    """
    a = np.asarray(a, dtype=int) % 2
    rows = [[FIELD(int(v)) for v in row] for row in a]
    return DomainMatrix(rows, a.shape, FIELD)


def to_numpy(m: DomainMatrix) -> np.ndarray:
    rows, cols = m.shape
    entries = m.to_Matrix()
    return np.array(
        [[int(entries[r, c]) % 2 for c in range(cols)] for r in range(rows)],
        dtype=int,
    ).reshape(rows, cols)


def gf2_rank(a) -> int:
    a = np.asarray(a, dtype=int)
    if a.size == 0:
        return 0
    return int(gf2_matrix(a).rank())


def gf2_rref(a) -> Tuple[np.ndarray, Tuple[int, ...]]:
    """
    :return: (reduced row echelon form mod 2, pivot columns)
    """
    a = np.asarray(a, dtype=int)
    if a.size == 0:
        return a.reshape(a.shape) % 2, ()
    reduced, pivots = gf2_matrix(a).rref()
    return to_numpy(reduced), tuple(pivots)


def gf2_nullspace(a) -> List[np.ndarray]:
    """
    Basis of {x : a x = 0} over GF(2)
    """
    a = np.asarray(a, dtype=int)
    cols = a.shape[1]
    if a.shape[0] == 0:
        return [np.eye(cols, dtype=int)[c] for c in range(cols)]
    reduced, pivots = gf2_rref(a)
    basis = []
    for free in (c for c in range(cols) if c not in pivots):
        x = np.zeros(cols, dtype=int)
        x[free] = 1
        for row, pivot in enumerate(pivots):
            x[pivot] = reduced[row, free] % 2
        basis.append(x)
    return basis


def gf2_solve(a, b) -> Optional[np.ndarray]:
    """
    One solution of a x = b over GF(2), None when the system is inconsistent
    """
    a = np.asarray(a, dtype=int) % 2
    b = np.asarray(b, dtype=int).reshape(-1) % 2
    cols = a.shape[1]
    if a.shape[0] == 0:
        return np.zeros(cols, dtype=int)
    reduced, pivots = gf2_rref(np.column_stack([a, b]))
    if cols in pivots:
        return None
    x = np.zeros(cols, dtype=int)
    for row, pivot in enumerate(pivots):
        x[pivot] = reduced[row, cols] % 2
    return x
