import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Tuple, Union

import numpy as np


UNARY_FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")
UNARY_OPERATORS = ("neg",) + UNARY_FUNCTIONS
BINARY_OPERATORS = ("+", "-", "*", "/")
VARIABLE_KINDS = ("x", "y")

Number = Union[int, float, np.floating, np.integer]


class Expression:
    """
    Base class of the immutable expression DAG.
    Nodes are frozen dataclasses; arithmetic on nodes goes through the
    folding constructors below so formulas can be written with plain operators.
    Structural equality is provided for tests, nodes are never used as dict keys.
    """

    # numpy must defer to the reflected operators below
    __array_ufunc__ = None

    @property
    def children(self) -> Tuple["Expression", ...]:
        return ()

    def __add__(self, other):
        return add(self, as_expression(other))

    def __radd__(self, other):
        return add(as_expression(other), self)

    def __sub__(self, other):
        return sub(self, as_expression(other))

    def __rsub__(self, other):
        return sub(as_expression(other), self)

    def __mul__(self, other):
        return mul(self, as_expression(other))

    def __rmul__(self, other):
        return mul(as_expression(other), self)

    def __truediv__(self, other):
        return div(self, as_expression(other))

    def __rtruediv__(self, other):
        return div(as_expression(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        if isinstance(exponent, Constant):
            exponent = exponent.value
        return power(self, float(exponent))


@dataclass(frozen=True, eq=True)
class Constant(Expression):

    value: float
    offset: Optional[int] = field(default=None, compare=False, repr=False)
    _derivatives: dict = field(
        default_factory=dict, init=False, compare=False, repr=False
    )


@dataclass(frozen=True, eq=True)
class Variable(Expression):
    """
    A chart coordinate: kind "x" (h-index) or "y" (v-index), 1-based index.
    """

    kind: str
    index: int
    offset: Optional[int] = field(default=None, compare=False, repr=False)
    _derivatives: dict = field(
        default_factory=dict, init=False, compare=False, repr=False
    )

    @property
    def key(self) -> Tuple[str, int]:
        return (self.kind, self.index)

    @property
    def name(self) -> str:
        return f"{self.kind}{self.index}"


@dataclass(frozen=True, eq=True)
class Unary(Expression):

    op: str
    operand: Expression
    offset: Optional[int] = field(default=None, compare=False, repr=False)
    _derivatives: dict = field(
        default_factory=dict, init=False, compare=False, repr=False
    )

    @property
    def children(self):
        return (self.operand,)


@dataclass(frozen=True, eq=True)
class Binary(Expression):

    op: str
    left: Expression
    right: Expression
    offset: Optional[int] = field(default=None, compare=False, repr=False)
    _derivatives: dict = field(
        default_factory=dict, init=False, compare=False, repr=False
    )

    @property
    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True, eq=True)
class Power(Expression):
    """
    Power with a constant real exponent.
    """

    base: Expression
    exponent: float
    offset: Optional[int] = field(default=None, compare=False, repr=False)
    _derivatives: dict = field(
        default_factory=dict, init=False, compare=False, repr=False
    )

    @property
    def children(self):
        return (self.base,)


ZERO = Constant(0.0)
ONE = Constant(1.0)


def const(value: Number, offset: Optional[int] = None) -> Constant:
    return Constant(float(value), offset)


def x_var(i: int) -> Variable:
    """
    h-coordinate for a 0-based h-index
    """
    return Variable("x", i + 1)


def y_var(a: int) -> Variable:
    """
    v-coordinate for a 0-based v-index
    """
    return Variable("y", a + 1)


def as_expression(value) -> Expression:
    if isinstance(value, Expression):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return const(value)
    raise TypeError(f"Cannot use {type(value)} as an expression")


def is_constant(e: Expression, value: Optional[float] = None) -> bool:
    if not isinstance(e, Constant):
        return False
    return value is None or e.value == value


def is_zero(e: Expression) -> bool:
    return is_constant(e, 0.0)


def _finite(value: float) -> bool:
    return value is not None and math.isfinite(value)


def _fold_unary(op: str, v: float) -> Optional[float]:
    try:
        if op == "neg":
            return -v
        if op == "sin":
            return math.sin(v)
        if op == "cos":
            return math.cos(v)
        if op == "exp":
            return math.exp(v)
        if op == "ln":
            return math.log(v) if v > 0 else None
        if op == "sqrt":
            return math.sqrt(v) if v >= 0 else None
    except (OverflowError, ValueError):
        return None
    raise ValueError(f"Unknown unary operator {op}")


def _fold_power(base: float, exponent: float) -> Optional[float]:
    if base < 0 and not float(exponent).is_integer():
        return None
    if base == 0 and exponent < 0:
        return None
    try:
        return math.pow(base, exponent)
    except (OverflowError, ValueError):
        return None


def apply(op: str, operand: Expression, offset: Optional[int] = None) -> Expression:
    if op not in UNARY_OPERATORS:
        raise ValueError(f"Unknown unary operator {op}")
    if isinstance(operand, Constant):
        folded = _fold_unary(op, operand.value)
        if _finite(folded):
            return const(folded, offset)
    if op == "neg" and isinstance(operand, Unary) and operand.op == "neg":
        return operand.operand
    return Unary(op, operand, offset)


def neg(e: Expression, offset: Optional[int] = None) -> Expression:
    return apply("neg", e, offset)


def add(left: Expression, right: Expression, offset: Optional[int] = None):
    if isinstance(left, Constant) and isinstance(right, Constant):
        return const(left.value + right.value, offset)
    if is_zero(left):
        return right
    if is_zero(right):
        return left
    return Binary("+", left, right, offset)


def sub(left: Expression, right: Expression, offset: Optional[int] = None):
    if isinstance(left, Constant) and isinstance(right, Constant):
        return const(left.value - right.value, offset)
    if is_zero(right):
        return left
    if is_zero(left):
        return neg(right, offset)
    return Binary("-", left, right, offset)


def mul(left: Expression, right: Expression, offset: Optional[int] = None):
    if isinstance(left, Constant) and isinstance(right, Constant):
        return const(left.value * right.value, offset)
    if is_zero(left) or is_zero(right):
        return ZERO
    if is_constant(left, 1.0):
        return right
    if is_constant(right, 1.0):
        return left
    return Binary("*", left, right, offset)


def div(left: Expression, right: Expression, offset: Optional[int] = None):
    if isinstance(left, Constant) and isinstance(right, Constant):
        if right.value != 0.0:
            return const(left.value / right.value, offset)
    if is_constant(right, 1.0):
        return left
    if is_zero(left) and not is_zero(right):
        return ZERO
    return Binary("/", left, right, offset)


def power(base: Expression, exponent: float, offset: Optional[int] = None):
    exponent = float(exponent)
    if exponent == 0.0:
        return ONE
    if exponent == 1.0:
        return base
    if isinstance(base, Constant):
        folded = _fold_power(base.value, exponent)
        if _finite(folded):
            return const(folded, offset)
    return Power(base, exponent, offset)


def binary(op: str, left: Expression, right: Expression, offset=None) -> Expression:
    if op == "+":
        return add(left, right, offset)
    if op == "-":
        return sub(left, right, offset)
    if op == "*":
        return mul(left, right, offset)
    if op == "/":
        return div(left, right, offset)
    raise ValueError(f"Unknown binary operator {op}")


def add_all(terms: Iterable[Expression]) -> Expression:
    """
    Sums terms pairwise so long sums stay shallow, zero terms are dropped
    :param terms: expressions to add
    :return: the balanced sum, ZERO for an empty sum
    """
    level = [t for t in terms if not is_zero(t)]
    if not level:
        return ZERO
    while len(level) > 1:
        paired = [add(level[k], level[k + 1]) for k in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            paired.append(level[-1])
        level = paired
    return level[0]


def symbolic_array(shape) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    out.fill(ZERO)
    return out


def to_symbolic_array(values) -> np.ndarray:
    """
    Converts nested lists of expressions or numbers into an object array
    """
    raw = np.array(values, dtype=object)
    out = np.empty(raw.shape, dtype=object)
    for idx in np.ndindex(raw.shape):
        out[idx] = as_expression(raw[idx])
    return out


def iter_nodes(root: Expression):
    """
    Yields every distinct node of the DAG below root once, children first.
    """
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in seen:
            continue
        if expanded:
            seen.add(id(node))
            yield node
        else:
            stack.append((node, True))
            for child in node.children:
                if id(child) not in seen:
                    stack.append((child, False))


def variables_of(root: Expression):
    return sorted(
        {n.key for n in iter_nodes(root) if isinstance(n, Variable)},
    )
