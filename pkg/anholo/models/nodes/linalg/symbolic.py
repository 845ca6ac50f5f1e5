from functools import lru_cache
from typing import Tuple

import numpy as np

from anholo.models.nodes.expression.tree import (
    ONE,
    Expression,
    add_all,
    div,
    mul,
    neg,
    symbolic_array,
)


def symbolic_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    rows, inner = a.shape
    cols = b.shape[1]
    out = symbolic_array((rows, cols))
    for r in range(rows):
        for c in range(cols):
            out[r, c] = add_all(mul(a[r, k], b[k, c]) for k in range(inner))
    return out


def symbolic_transpose(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a.T)


def symbolic_symmetric(a: np.ndarray) -> np.ndarray:
    """
    Mirrors the upper triangle so the result is symmetric node for node
    """
    out = a.copy()
    for r in range(a.shape[0]):
        for c in range(r):
            out[r, c] = a[c, r]
    return out


def _cofactor_sign(r: int, c: int) -> int:
    return -1 if (r + c) % 2 else 1


def symbolic_determinant_and_adjugate(a: np.ndarray) -> Tuple[Expression, np.ndarray]:
    """
    Determinant by Laplace expansion with memoized minors, and the
    adjugate built from the same minors.
    :param a: square object array of expressions
    :return: (det, adj) with a · adj = det · I
    """
    size = a.shape[0]
    if size == 0:
        return ONE, symbolic_array((0, 0))

    @lru_cache(maxsize=None)
    def minor(rows: Tuple[int, ...], cols: Tuple[int, ...]) -> Expression:
        if len(rows) == 1:
            return a[rows[0], cols[0]]
        r0, rest = rows[0], rows[1:]
        terms = []
        for pos, c in enumerate(cols):
            term = mul(a[r0, c], minor(rest, cols[:pos] + cols[pos + 1 :]))
            terms.append(neg(term) if pos % 2 else term)
        return add_all(terms)

    everything = tuple(range(size))
    det = minor(everything, everything)
    adj = symbolic_array((size, size))
    if size == 1:
        adj[0, 0] = ONE
        return det, adj
    for r in range(size):
        for c in range(size):
            rows = tuple(k for k in everything if k != c)
            cols = tuple(k for k in everything if k != r)
            cofactor = minor(rows, cols)
            adj[r, c] = neg(cofactor) if _cofactor_sign(r, c) < 0 else cofactor
    return det, adj


def symbolic_inverse(a: np.ndarray) -> Tuple[np.ndarray, Expression]:
    """
    :return: (inverse, determinant); entries share the determinant node
    """
    det, adj = symbolic_determinant_and_adjugate(a)
    inverse = symbolic_array(a.shape)
    for idx in np.ndindex(a.shape):
        inverse[idx] = div(adj[idx], det)
    return inverse, det
