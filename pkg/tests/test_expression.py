import jax
import numpy as np
import pytest
import sympy

from pyfinsub.errors import ExpressionError
from pyfinsub.math.expression import Expression, environment, evaluate_vector, parse_matrix, parse_vector


def test_evaluate():
    e = Expression("x1 + 2*x2 - sin(x3)")
    assert e.symbols == {'x1', 'x2', 'x3'}
    assert float(e.evaluate(environment(x=[1.0, 2.0, 0.0]))) == 5.0


def test_number_source_is_kept():
    assert Expression(0.5).source == '0.5'
    assert str(Expression(" (sin(x1)*sin(x1) + 1)/4 ")) == "(sin(x1)*sin(x1) + 1)/4"


def test_two_argument_functions():
    assert float(Expression("pow(x1, 3)").evaluate({'x1': 2.0})) == 8.0
    assert np.isclose(float(Expression("atan2(x2, x1)").evaluate({'x1': 0.0, 'x2': 1.0})), np.pi / 2)


@pytest.mark.parametrize("source", ["x1 ** 2", "foo(x1)", "y1", "x0", "True", "'a'", "pow(x1)", "x1 if x2 else x3",
                                    "sin(x1, x2)", "x1 % 2", "not x1"])
def test_rejected(source):
    with pytest.raises(ExpressionError):
        Expression(source)


def test_parsed_by_sympy():
    e = Expression("x1/3 + 1/3")
    assert e.sympy == sympy.Symbol('x1') / 3 + sympy.Rational(1, 3)
    assert float(e.evaluate({'x1': 2.0})) == 1.0
    grad = jax.grad(lambda x: Expression("sin(x1)*x1").evaluate({'x1': x}))(0.5)
    assert float(grad) == pytest.approx(np.cos(0.5) * 0.5 + np.sin(0.5))


@pytest.mark.parametrize("source", ["1/0", "sqrt(-1)", "open(x1)", "__import__(x1)"])
def test_rejected_values(source):
    with pytest.raises(ExpressionError):
        Expression(source)


def test_missing_symbol():
    with pytest.raises(ExpressionError):
        Expression("x1 * c1").evaluate({'x1': 1.0})


def test_vectors_and_matrices():
    v = evaluate_vector(parse_vector(["x1", "2", "-x2"]), environment(x=[3.0, 4.0]))
    assert np.allclose(np.asarray(v), [3.0, 2.0, -4.0])
    with pytest.raises(ExpressionError):
        parse_matrix([["1", "0"], ["0"]])
    with pytest.raises(ExpressionError):
        parse_vector("x1")
