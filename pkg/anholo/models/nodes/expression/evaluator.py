from typing import Sequence

import numpy as np

from anholo.schemas.geometry import ChartPoint
from anholo.utils.errors import ExpressionDomainError
from anholo.models.nodes.expression.tree import (
    Binary,
    Constant,
    Expression,
    Power,
    Unary,
    Variable,
)


class Evaluator:
    """
    Evaluates expressions at one chart point or, with array coordinates,
    at a batch of points at once.
    Results are memoized per node for the lifetime of the evaluator so the
    many coefficient expressions of a geometric object share their common
    subexpressions.
    """

    def __init__(self, x: Sequence, y: Sequence):
        self.x = [np.asarray(v, dtype=float) for v in x]
        self.y = [np.asarray(v, dtype=float) for v in y]
        coordinates = self.x + self.y
        self.batch_shape = np.broadcast(*coordinates).shape if coordinates else ()
        # id -> (node, value); holding the node keeps the id from being reused
        self._memo = {}

    @staticmethod
    def at(point: ChartPoint) -> "Evaluator":
        return Evaluator(point.x, point.y)

    @staticmethod
    def on_nodes(x_nodes: np.ndarray, y_nodes: np.ndarray) -> "Evaluator":
        """
        :param x_nodes: array (V, n) of h-coordinates
        :param y_nodes: array (V, m) of v-coordinates
        """
        return Evaluator(list(np.asarray(x_nodes).T), list(np.asarray(y_nodes).T))

    def _variable(self, node: Variable):
        values = self.x if node.kind == "x" else self.y
        if not 1 <= node.index <= len(values):
            raise ValueError(f"Variable {node.name} is outside the evaluation point")
        return values[node.index - 1]

    def _unary(self, node: Unary, v):
        op = node.op
        if op == "neg":
            return -v
        if op == "sin":
            return np.sin(v)
        if op == "cos":
            return np.cos(v)
        if op == "exp":
            with np.errstate(over="ignore"):
                out = np.exp(v)
            if not np.all(np.isfinite(out)):
                raise ExpressionDomainError("exp overflow", node.offset)
            return out
        if op == "ln":
            if np.any(v <= 0):
                raise ExpressionDomainError(
                    "ln of a non-positive value", node.offset
                )
            return np.log(v)
        if op == "sqrt":
            if np.any(v < 0):
                raise ExpressionDomainError("sqrt of a negative value", node.offset)
            return np.sqrt(v)
        raise ValueError(f"Unknown unary operator {op}")

    def _binary(self, node: Binary, left, right):
        op = node.op
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if np.any(right == 0):
            raise ExpressionDomainError("division by zero", node.offset)
        return left / right

    def _power(self, node: Power, base):
        exponent = node.exponent
        if not float(exponent).is_integer() and np.any(base < 0):
            raise ExpressionDomainError(
                "fractional power of a negative value", node.offset
            )
        if exponent < 0 and np.any(base == 0):
            raise ExpressionDomainError("negative power of zero", node.offset)
        with np.errstate(over="ignore"):
            out = np.power(base, exponent)
        if not np.all(np.isfinite(out)):
            raise ExpressionDomainError("power overflow", node.offset)
        return out

    def _value(self, node: Expression):
        return self._memo[id(node)][1]

    def _compute(self, node: Expression):
        if isinstance(node, Constant):
            return node.value
        if isinstance(node, Variable):
            return self._variable(node)
        if isinstance(node, Unary):
            return self._unary(node, self._value(node.operand))
        if isinstance(node, Binary):
            return self._binary(node, self._value(node.left), self._value(node.right))
        if isinstance(node, Power):
            return self._power(node, self._value(node.base))
        raise TypeError(f"Cannot evaluate {type(node)}")

    def __call__(self, root: Expression):
        memo = self._memo
        if id(root) in memo:
            return memo[id(root)][1]
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if id(node) in memo:
                continue
            if expanded:
                memo[id(node)] = (node, self._compute(node))
            else:
                stack.append((node, True))
                for child in node.children:
                    if id(child) not in memo:
                        stack.append((child, False))
        return memo[id(root)][1]

    def scalar(self, root: Expression) -> float:
        return float(self(root))

    def array(self, exprs) -> np.ndarray:
        """
        Evaluates an object array of expressions
        :return: float array of shape batch_shape + exprs.shape
        """
        exprs = np.asarray(exprs, dtype=object)
        out = np.empty(self.batch_shape + exprs.shape, dtype=float)
        for idx in np.ndindex(exprs.shape):
            out[(Ellipsis,) + idx] = self(exprs[idx])
        return out


def evaluate(e: Expression, p: ChartPoint) -> float:
    return Evaluator.at(p).scalar(e)
