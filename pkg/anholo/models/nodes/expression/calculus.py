from typing import Tuple, Union

import numpy as np

from anholo.models.nodes.expression.tree import (
    ONE,
    ZERO,
    Binary,
    Constant,
    Expression,
    Power,
    Unary,
    Variable,
    add,
    add_all,
    const,
    div,
    mul,
    neg,
    power,
    sub,
    apply,
    x_var,
    y_var,
)


VariableRef = Union[Variable, Tuple[str, int], str]


def variable_key(v: VariableRef) -> Tuple[str, int]:
    if isinstance(v, Variable):
        return v.key
    if isinstance(v, str):
        return (v[0], int(v[1:]))
    return (v[0], int(v[1]))


def _derived(node: Expression, key) -> Expression:
    return node._derivatives[key]


def _derive(node: Expression, key) -> Expression:
    if isinstance(node, Constant):
        return ZERO
    if isinstance(node, Variable):
        return ONE if node.key == key else ZERO
    if isinstance(node, Unary):
        u = node.operand
        du = _derived(u, key)
        if du is ZERO or (isinstance(du, Constant) and du.value == 0.0):
            return ZERO
        if node.op == "neg":
            return neg(du)
        if node.op == "sin":
            return mul(du, apply("cos", u))
        if node.op == "cos":
            return neg(mul(du, apply("sin", u)))
        if node.op == "exp":
            return mul(du, node)
        if node.op == "ln":
            return div(du, u)
        if node.op == "sqrt":
            return div(du, mul(const(2.0), node))
        raise ValueError(f"Unknown unary operator {node.op}")
    if isinstance(node, Binary):
        left, right = node.left, node.right
        dl, dr = _derived(left, key), _derived(right, key)
        if node.op == "+":
            return add(dl, dr)
        if node.op == "-":
            return sub(dl, dr)
        if node.op == "*":
            return add(mul(dl, right), mul(left, dr))
        if node.op == "/":
            return sub(div(dl, right), div(mul(left, dr), power(right, 2.0)))
        raise ValueError(f"Unknown binary operator {node.op}")
    if isinstance(node, Power):
        db = _derived(node.base, key)
        c = node.exponent
        return mul(mul(const(c), power(node.base, c - 1.0)), db)
    raise TypeError(f"Cannot differentiate {type(node)}")


def differentiate(e: Expression, v: VariableRef) -> Expression:
    """
    Exact partial derivative of e with respect to one chart coordinate.
    Derivatives are cached on the nodes, so repeated and mixed partials of
    a shared DAG stay linear in its size.
    :param e: expression to differentiate
    :param v: Variable, ("x"|"y", 1-based index) or a name such as "y2"
    :return: the derivative, constant folded
    """
    key = variable_key(v)
    if key in e._derivatives:
        return e._derivatives[key]
    stack = [(e, False)]
    while stack:
        node, expanded = stack.pop()
        if key in node._derivatives:
            continue
        if expanded:
            node._derivatives[key] = _derive(node, key)
        else:
            stack.append((node, True))
            for child in node.children:
                if key not in child._derivatives:
                    stack.append((child, False))
    return e._derivatives[key]


def d_x(e: Expression, i: int) -> Expression:
    """
    ∂/∂x for a 0-based h-index
    """
    return differentiate(e, ("x", i + 1))


def d_y(e: Expression, a: int) -> Expression:
    """
    ∂/∂y for a 0-based v-index
    """
    return differentiate(e, ("y", a + 1))


def adapted_derivative(e: Expression, N, i: int) -> Expression:
    """
    e_i(f) = ∂_i f − N^a_i ∂_a f
    :param e: the function f
    :param N: NConnectionField or an (n, m) object array of N^a_i
    :param i: 0-based h-index
    """
    coefficients = getattr(N, "N", N)
    m = coefficients.shape[1]
    return sub(
        d_x(e, i),
        add_all(mul(coefficients[i, a], d_y(e, a)) for a in range(m)),
    )


def frame_derivative(e: Expression, N, alpha: int) -> Expression:
    """
    Derivative along the adapted frame vector e_alpha, alpha over 0..n+m-1;
    the v-directions are plain partials.
    """
    coefficients = getattr(N, "N", N)
    n = coefficients.shape[0]
    if alpha < n:
        return adapted_derivative(e, coefficients, alpha)
    return d_y(e, alpha - n)


def coordinate_derivative(e: Expression, n: int, mu: int) -> Expression:
    """
    Plain partial along the full coordinate index mu over (x, y)
    """
    return d_x(e, mu) if mu < n else d_y(e, mu - n)


def map_array(function, exprs: np.ndarray) -> np.ndarray:
    out = np.empty(exprs.shape, dtype=object)
    for idx in np.ndindex(exprs.shape):
        out[idx] = function(exprs[idx])
    return out


def frame_gradient(exprs: np.ndarray, N) -> np.ndarray:
    """
    Adapted-frame derivatives of every entry of an object array
    :return: object array of shape exprs.shape + (n+m,)
    """
    coefficients = getattr(N, "N", N)
    total = sum(coefficients.shape)
    out = np.empty(exprs.shape + (total,), dtype=object)
    for idx in np.ndindex(exprs.shape):
        for alpha in range(total):
            out[idx + (alpha,)] = frame_derivative(exprs[idx], coefficients, alpha)
    return out


def coordinate_gradient(exprs: np.ndarray, n: int, m: int) -> np.ndarray:
    """
    Coordinate partials of every entry, last axis over (x1..xn, y1..ym)
    """
    out = np.empty(exprs.shape + (n + m,), dtype=object)
    for idx in np.ndindex(exprs.shape):
        for mu in range(n + m):
            out[idx + (mu,)] = coordinate_derivative(exprs[idx], n, mu)
    return out


def coordinates(n: int, m: int):
    return [x_var(i) for i in range(n)] + [y_var(a) for a in range(m)]
