from anholo.models.nodes.expression.tree import (
    Binary,
    Constant,
    Expression,
    Power,
    Unary,
    Variable,
)


PRECEDENCE_SUM = 1
PRECEDENCE_PRODUCT = 2
PRECEDENCE_PREFIX = 3
PRECEDENCE_POWER = 4
PRECEDENCE_ATOM = 5


def format_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _precedence(e: Expression) -> int:
    if isinstance(e, Binary):
        return PRECEDENCE_SUM if e.op in "+-" else PRECEDENCE_PRODUCT
    if isinstance(e, Power):
        return PRECEDENCE_POWER
    if isinstance(e, Unary) and e.op == "neg":
        return PRECEDENCE_PREFIX
    if isinstance(e, Constant) and e.value < 0:
        return PRECEDENCE_PREFIX
    return PRECEDENCE_ATOM


def _wrap(e: Expression, needs_parens: bool) -> str:
    text = to_text(e)
    return f"({text})" if needs_parens else text


def to_text(e: Expression) -> str:
    """
    Canonical printer: the output parses back to an equal tree.
    Binary operators are left associative, so right operands of equal
    precedence are parenthesized.
    """
    if isinstance(e, Constant):
        return format_number(e.value)
    if isinstance(e, Variable):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            return "-" + _wrap(e.operand, _precedence(e.operand) < PRECEDENCE_PREFIX)
        return f"{e.op}({to_text(e.operand)})"
    if isinstance(e, Power):
        base = _wrap(e.base, _precedence(e.base) < PRECEDENCE_ATOM)
        return f"{base}^{format_number(e.exponent)}"
    if isinstance(e, Binary):
        own = _precedence(e)
        left = _wrap(e.left, _precedence(e.left) < own)
        right = _wrap(e.right, _precedence(e.right) <= own)
        if own == PRECEDENCE_SUM:
            return f"{left} {e.op} {right}"
        return f"{left}{e.op}{right}"
    raise TypeError(f"Cannot print {type(e)}")
