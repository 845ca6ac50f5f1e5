import numpy as np
import pytest

from anholo.schemas.fields import NConnectionField
from anholo.schemas.geometry import ChartPoint, Dimensions
from anholo.models.nodes.expression.parser import parse, parse_constant
from anholo.models.nodes.expression.printer import to_text
from anholo.models.nodes.expression.calculus import adapted_derivative, d_x, d_y
from anholo.models.nodes.expression.evaluator import Evaluator, evaluate
from anholo.utils.errors import (
    ExpressionDomainError,
    ExpressionSyntaxError,
    UnknownIdentifierError,
    VariableIndexError,
)
from tests.oracles import finite_difference

DIMS = Dimensions(n=2, m=2)
POINT = ChartPoint(x=[0.4, -0.3], y=[0.7, 1.2])

CORPUS = [
    "x1",
    "-x1",
    "2.5*y2 - x1/3",
    "x1 - (y1 - y2)",
    "x1/(y1*y2)",
    "(x1 + y1)^2",
    "y1^-0.5",
    "-(x2 + 1)^3",
    "sin(x1*y1) + exp(x2)*y1^2",
    "sqrt(1 + y2^2) - ln(2 + cos(x2))",
    "pi*x1",
    "1e-3*y1",
]


@pytest.mark.parametrize("text", CORPUS)
def test_parse_print_round_trip(text):
    tree = parse(text, DIMS)
    assert parse(to_text(tree), DIMS) == tree


@pytest.mark.parametrize("text", CORPUS)
def test_derivative_matches_finite_difference(text):
    tree = parse(text, DIMS)
    u = POINT.u

    def value(v):
        return np.array(Evaluator(v[:2], v[2:]).scalar(tree))

    numeric = finite_difference(value, u)
    symbolic = [evaluate(d_x(tree, i), POINT) for i in range(2)]
    symbolic += [evaluate(d_y(tree, a), POINT) for a in range(2)]
    np.testing.assert_allclose(symbolic, numeric, rtol=1e-6, atol=1e-7)


def test_second_derivative_of_sine():
    tree = parse("sin(x1)", DIMS)
    second = d_x(d_x(tree, 0), 0)
    assert evaluate(second, POINT) == pytest.approx(-np.sin(0.4), abs=1e-14)


def test_mixed_partials_commute():
    tree = parse("sin(x1*y1) + exp(x2)*y1^2*y2", DIMS)
    for i in range(2):
        for a in range(2):
            first = evaluate(d_x(d_y(tree, a), i), POINT)
            second = evaluate(d_y(d_x(tree, i), a), POINT)
            assert first == pytest.approx(second, abs=1e-12)


def test_adapted_derivative_example():
    dims = Dimensions(n=2, m=1)
    N = NConnectionField.from_text([["y1"], ["0"]], dims)
    e1 = adapted_derivative(parse("x1*y1", dims), N, 0)
    value = evaluate(e1, ChartPoint(x=[0.4, 0.1], y=[0.7]))
    assert value == pytest.approx(0.7 - 0.7 * 0.4, abs=1e-14)


def test_evaluate_sum_of_squares():
    tree = parse("y1^2+y2^2", DIMS)
    assert evaluate(tree, ChartPoint(x=[0, 0], y=[3, 4])) == 25.0


def test_parse_constant():
    assert parse_constant("pi/4") == pytest.approx(np.pi / 4, abs=1e-15)
    assert parse_constant(2) == 2.0
    with pytest.raises(ValueError):
        parse_constant("x1 + 1")


def test_syntax_error_carries_offset():
    with pytest.raises(ExpressionSyntaxError) as error:
        parse("x1 +* y1", DIMS)
    assert error.value.offset == 4


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError):
        parse("z1 + x1", DIMS)


def test_variable_index_out_of_range():
    with pytest.raises(VariableIndexError):
        parse("x3", DIMS)


@pytest.mark.parametrize(
    "text, x1", [("sqrt(x1)", -1.0), ("ln(x1)", 0.0), ("1/x1", 0.0)]
)
def test_domain_errors(text, x1):
    tree = parse(text, DIMS)
    with pytest.raises(ExpressionDomainError):
        evaluate(tree, ChartPoint(x=[x1, 0], y=[0, 0]))


def test_batch_evaluation_matches_points(rng):
    tree = parse("sin(x1*y1) + x2^2/(1 + y2^2)", DIMS)
    x = rng.uniform(-1, 1, size=(2, 5))
    y = rng.uniform(-1, 1, size=(2, 5))
    batch = Evaluator(list(x), list(y))(tree)
    single = [Evaluator(x[:, k], y[:, k]).scalar(tree) for k in range(5)]
    np.testing.assert_allclose(batch, single, rtol=1e-14)
