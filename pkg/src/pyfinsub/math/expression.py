"""Arithmetic expressions used in scenario files.

An expression is parsed by sympy with a closed namespace: numeric literals,
the symbols ``x1..xn`` (chart coordinates), ``s1..sk`` (fiber parameters)
and ``c1..cm`` (level values), the operators ``+ - * /`` and the functions
in ``FUNCTIONS``. The parsed expression is lambdified to ``jax.numpy`` so
it can be traced and differentiated.
"""

import re

import jax.numpy as jnp
import sympy as sp
from sympy.parsing.sympy_parser import auto_number, parse_expr

from ..errors import ExpressionError

FUNCTIONS = {
    'sin': sp.sin,
    'cos': sp.cos,
    'tan': sp.tan,
    'exp': sp.exp,
    'log': sp.log,
    'sqrt': sp.sqrt,
    'pow': sp.Pow,
    'atan2': sp.atan2,
}

SYMBOL = re.compile(r'^([xsc])([1-9][0-9]*)$')

_CHARACTERS = re.compile(r'^[\w\s.+\-*/(),]*$')
_NAME = re.compile(r'(?<![\w.])[A-Za-z_]\w*')


class Expression:
    """A parsed arithmetic expression.

    The source text is kept verbatim, so writing an expression back to a
    scenario file reproduces every numeric literal bit for bit.

    Parameters
    ----------
    source : str or float
        The expression text, or a plain number.

    Raises
    ------
    ExpressionError
        If the text is not in the grammar.
    """

    def __init__(self, source):
        if isinstance(source, (int, float)) and not isinstance(source, bool):
            source = repr(float(source))
        if not isinstance(source, str):
            raise ExpressionError(f"expression must be a string or number, got {source!r}")
        self._source = source.strip()
        self._expr = self._parse(self._source)
        self._names = sorted(str(s) for s in self._expr.free_symbols)
        self._func = sp.lambdify([sp.Symbol(n) for n in self._names], self._expr, modules='jax')

    def __str__(self) -> str:
        return self._source

    def __repr__(self) -> str:
        return f"Expression({self._source!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Expression) and other._source == self._source

    def __hash__(self) -> int:
        return hash(self._source)

    @property
    def source(self) -> str:
        return self._source

    @property
    def sympy(self) -> sp.Expr:
        return self._expr

    @property
    def symbols(self) -> frozenset:
        """Names of the symbols the expression refers to."""
        return frozenset(self._names)

    @staticmethod
    def _parse(source: str) -> sp.Expr:
        if not _CHARACTERS.match(source) or '**' in source:
            raise ExpressionError(f"unsupported syntax in '{source}'")
        local = {}
        for name in _NAME.findall(source):
            if SYMBOL.match(name):
                local[name] = sp.Symbol(name)
            elif name not in FUNCTIONS:
                raise ExpressionError(f"unknown symbol '{name}' in '{source}'")
        namespace = dict(FUNCTIONS, Integer=sp.Integer, Float=sp.Float, __builtins__={})
        try:
            expr = parse_expr(source, local_dict=local, global_dict=namespace, transformations=(auto_number,))
        except (SyntaxError, TypeError, ValueError, NameError, ZeroDivisionError, sp.SympifyError) as e:
            raise ExpressionError(f"cannot parse expression '{source}': {e}")
        if not isinstance(expr, sp.Expr) or expr.is_real is False or expr.has(sp.zoo, sp.nan, sp.oo):
            raise ExpressionError(f"'{source}' is not a real arithmetic expression")
        return expr

    def evaluate(self, env: dict):
        """Evaluate with symbol values taken from ``env``.

        Parameters
        ----------
        env : dict
            Maps symbol names (``'x1'``, ``'s1'`` ...) to scalars or traced
            JAX values.

        Returns
        -------
        scalar
            The value, a JAX scalar when any input is traced.
        """

        missing = set(self._names) - set(env)
        if missing:
            raise ExpressionError(f"no value for {sorted(missing)} in '{self._source}'")
        return self._func(*(env[n] for n in self._names))


def environment(x=None, s=None, c=None) -> dict:
    """Build an evaluation environment from coordinate arrays.

    Parameters
    ----------
    x, s, c : array-like, optional
        Chart coordinates, fiber parameters and level values. Entry ``i``
        becomes symbol ``x{i+1}`` (resp. ``s``, ``c``).

    Returns
    -------
    dict
        Symbol name to value.
    """

    env = {}
    for prefix, values in (('x', x), ('s', s), ('c', c)):
        if values is None:
            continue
        for i in range(len(values)):
            env[f"{prefix}{i + 1}"] = values[i]
    return env


def parse_vector(items) -> list:
    """Parse a list of expressions (strings or numbers)."""
    if not isinstance(items, (list, tuple)):
        raise ExpressionError(f"expected a list of expressions, got {items!r}")
    return [Expression(item) for item in items]


def parse_matrix(rows) -> list:
    """Parse a square matrix of expressions given as a list of rows."""
    if not isinstance(rows, (list, tuple)) or not rows:
        raise ExpressionError(f"expected a list of rows, got {rows!r}")
    matrix = [parse_vector(row) for row in rows]
    if any(len(row) != len(matrix) for row in matrix):
        raise ExpressionError("matrix expression must be square")
    return matrix


def evaluate_vector(exprs: list, env: dict):
    """Evaluate a list of expressions into a JAX vector."""
    return jnp.stack([jnp.asarray(e.evaluate(env), dtype=float) for e in exprs])


def evaluate_matrix(rows: list, env: dict):
    """Evaluate a matrix of expressions into a JAX array."""
    return jnp.stack([evaluate_vector(row, env) for row in rows])
