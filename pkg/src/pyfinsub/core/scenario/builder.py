import logging

import jax.numpy as jnp
import numpy as np

from ...errors import ConfigError, ExpressionError
from ...math import expression
from ..metric import FinslerMetric, ZermeloData, randers_from_zermelo, riemannian
from ..submersion import FiberFamily, SubmersionSpec
from .scenario import Scenario
from .source import ScenarioSource

logger = logging.getLogger(__name__)


class Builder():
    """
    Build the objects of a scenario.

    The Builder is responsible for turning scenario records (parsed JSON)
    into metrics, submersions and whole scenarios. Metric blocks look like
    ``{"kind": "zermelo", "h": "euclidean", "W": ["0.5", "0"]}`` or
    ``{"kind": "riemannian", "h": [["1", "0"], ["0", "sin(x1)*sin(x1)"]]}``;
    submersion blocks give ``pi``, the fiber parametrization in the
    symbols s (fiber parameter) and c (level), an optional ``base_metric``
    and an optional ``singular`` locus.
    """

    def metric(self, block: dict, dim: int, name: str = "F", points=None) -> FinslerMetric:
        """Build a metric block.

        Parameters
        ----------
        block : dict
            The metric block.
        dim : int
            Dimension of the chart.
        name : str
            Label of the metric.
        points : array-like, optional
            Points where the admissibility of Zermelo data is checked.

        Returns
        -------
        FinslerMetric
            The metric.

        Raises
        ------
        ConfigError
            If the block is malformed.
        WindTooStrong
            If a wind has h(W, W) >= 1 at a checked point.
        """

        kind = block.get('kind')
        h = self._matrix_field(block.get('h', 'euclidean'), dim)
        if kind == 'riemannian':
            return riemannian(dim, h, name)
        if kind == 'zermelo':
            if 'W' not in block:
                raise ConfigError(f"zermelo block of {name} has no wind 'W'")
            wind = self.vector_field(block['W'], dim, 'W')
            z = ZermeloData(dim, wind, h, source=block)
            return randers_from_zermelo(z, points, name, check=block.get('check', True))
        raise ConfigError(f"unknown metric kind {kind!r} in {name}")

    def submersion(self, block: dict, dim: int, name: str = "pi", points=None) -> SubmersionSpec:
        """Build a submersion block.

        Raises
        ------
        ConfigError
            If the block is malformed.
        """

        if 'pi' not in block:
            raise ConfigError(f"submersion block of {name} has no 'pi'")
        pi_exprs = self._parse(expression.parse_vector, block['pi'], 'pi')
        self._require_symbols(pi_exprs, 'x', dim, 'pi')
        base_dim = len(pi_exprs)
        pi = lambda x: expression.evaluate_vector(pi_exprs, expression.environment(x=x))

        fibers = None
        if 'fibers' in block:
            fibers = self._fibers(block['fibers'], dim, base_dim, name)

        base_metric = None
        if 'base_metric' in block:
            base_points = None if points is None else np.array([np.asarray(pi(jnp.asarray(p))) for p in points])
            base_metric = self.metric(block['base_metric'], base_dim, name + "_base", base_points)

        singular = None
        if 'singular' in block:
            sing_exprs = self._parse(expression.parse_vector, block['singular'], 'singular')
            singular = lambda x: expression.evaluate_vector(sing_exprs, expression.environment(x=x))

        return SubmersionSpec(dim, base_dim, pi, fibers, base_metric, singular, name)

    def scenario(self, record: dict) -> Scenario:
        """Build a whole scenario record."""
        for key in ('name', 'dim', 'metric', 'submersion', 'region'):
            if key not in record:
                raise ConfigError(f"scenario record {record.get('name', '?')} has no '{key}'")
        name = record['name']
        dim = int(record['dim'])
        region = np.asarray(record['region'], dtype=float)
        if region.shape != (dim, 2) or np.any(region[:, 0] >= region[:, 1]):
            raise ConfigError(f"region of {name} must be {dim} increasing intervals, got {record['region']}")
        ball = record.get('ball')
        points = self._admissibility_points(region, ball)
        metric = self.metric(record['metric'], dim, name, points)
        spec = self.submersion(record['submersion'], dim, "pi_" + name, points)
        expect = dict(record.get('expect', {}))
        for check, outcome in expect.items():
            if outcome not in ('pass', 'fail'):
                raise ConfigError(f"expectation of {name}.{check} must be 'pass' or 'fail', got {outcome!r}")
        sc = Scenario(name, metric, spec, region, float(record.get('tube_radius', 1.0)),
                      record.get('provenance', ''), None if ball is None else float(ball),
                      expect, dict(record.get('checks', {})), record)
        logger.debug("built scenario %s: %s, %s", name, metric, spec)
        return sc

    def scenarios(self, source: ScenarioSource) -> list:
        """Build every scenario of a source."""
        return [self.scenario(source.record(i)) for i in range(len(source))]

    def _fibers(self, block: dict, dim: int, base_dim: int, name: str) -> FiberFamily:
        if 'param' not in block or 'dim' not in block:
            raise ConfigError(f"fiber block of {name} needs 'param' and 'dim'")
        exprs = self._parse(expression.parse_vector, block['param'], 'fibers')
        if len(exprs) != dim:
            raise ConfigError(f"fiber parametrization of {name} has {len(exprs)} components, expected {dim}")
        k = int(block['dim'])
        self._require_symbols(exprs, 's', k, 'fibers')
        self._require_symbols(exprs, 'c', base_dim, 'fibers')

        def param(s, c):
            return expression.evaluate_vector(exprs, expression.environment(s=s, c=c))

        return FiberFamily(param, k, dim, block.get('box'), "fibers_" + name)

    def _matrix_field(self, spec, dim: int):
        if spec == 'euclidean':
            return None
        rows = self._parse(expression.parse_matrix, spec, 'h')
        if len(rows) != dim:
            raise ConfigError(f"matrix field must be {dim} x {dim}, got {len(rows)} rows")
        for row in rows:
            self._require_symbols(row, 'x', dim, 'h')
        return lambda x: expression.evaluate_matrix(rows, expression.environment(x=x))

    def vector_field(self, items, dim: int, label: str = "V"):
        """A vector field on the chart from a list of expressions in x1..xn.

        Raises
        ------
        ConfigError
            If an entry does not parse, the length is not ``dim`` or a
            symbol other than x1..xn is used.
        """

        exprs = self._parse(expression.parse_vector, items, label)
        if len(exprs) != dim:
            raise ConfigError(f"{label} must have {dim} components, got {len(exprs)}")
        self._require_symbols(exprs, 'x', dim, label)
        return lambda x: expression.evaluate_vector(exprs, expression.environment(x=x))

    @staticmethod
    def _parse(parser, value, label: str):
        try:
            return parser(value)
        except ExpressionError as e:
            raise ConfigError(f"in '{label}': {e}")

    @staticmethod
    def _require_symbols(exprs, prefix: str, count: int, label: str):
        """Symbols with ``prefix`` must be numbered 1..count; other prefixes are checked by their owner."""
        for e in exprs:
            for symbol in e.symbols:
                m = expression.SYMBOL.match(symbol)
                if m.group(1) == prefix and int(m.group(2)) > count:
                    raise ConfigError(f"'{label}' refers to {symbol} but only {prefix}1..{prefix}{count} exist")
                if m.group(1) not in (prefix, 'c', 's') or (label != 'fibers' and m.group(1) != prefix):
                    raise ConfigError(f"'{label}' may not refer to {symbol}")

    @staticmethod
    def _admissibility_points(region: np.ndarray, ball) -> np.ndarray:
        """Corners and a 5-point grid of the region, clipped to the ball."""
        axes = [np.linspace(lo, hi, 5) for lo, hi in region]
        grid = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, len(region))
        if ball is not None:
            grid = grid[np.linalg.norm(grid, axis=1) <= float(ball)]
        return grid
