import dataclasses
from typing import Optional

import numpy as np

from ...errors import ConfigError
from ..geometry.patch import SubmanifoldPatch
from ..metric import FinslerMetric
from ..submersion import SubmersionSpec

SUMMARY_CHECKS = ('fiber', 'equidistance', 'horizontal', 'wilking', 'geodesic_field')


@dataclasses.dataclass
class Scenario:
    """A metric with a candidate submersion, the input of the verifier.

    Built from a scenario record by the Builder.

    Attributes
    ----------
    name : str
        Identifier, e.g. 'FIG1'.
    metric : FinslerMetric
        Metric of the total space.
    spec : SubmersionSpec
        The map pi with its fibers.
    region : np.ndarray
        n x 2 box the scenario lives in.
    tube_radius : float
        Largest geodesic parameter used by the checks.
    provenance : str
        Where the data comes from.
    ball : float, optional
        Radius of a ball about the origin further restricting the region.
    expect : dict
        Check name to 'pass' or 'fail'; missing checks are expected to pass.
    checks : dict
        Parameters of the checks, as read from the record.
    record : dict
        The record the scenario was built from.
    """

    name: str
    metric: FinslerMetric
    spec: SubmersionSpec
    region: np.ndarray
    tube_radius: float
    provenance: str = ""
    ball: Optional[float] = None
    expect: dict = dataclasses.field(default_factory=dict)
    checks: dict = dataclasses.field(default_factory=dict)
    record: dict = dataclasses.field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.metric.dim

    def expected(self, check: str) -> str:
        return self.expect.get(check, 'pass')

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        inside = bool(np.all(x >= self.region[:, 0]) and np.all(x <= self.region[:, 1]))
        if self.ball is not None:
            inside = inside and float(np.linalg.norm(x)) <= self.ball
        return inside

    def sample_points(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """``count`` uniform points of the region (rejection sampling inside the ball)."""
        lo, hi = self.region[:, 0], self.region[:, 1]
        points = []
        while len(points) < count:
            batch = lo + (hi - lo) * rng.random((count, self.dim))
            points.extend(p for p in batch if self.contains(p))
        return np.array(points[:count])

    def leaf(self, block: dict) -> SubmanifoldPatch:
        """The plaque described by a check block.

        ``{"c": [...], "box": [...]}`` is the fiber over the level c,
        ``{"point": [...]}`` a zero-dimensional leaf.
        """

        if 'point' in block:
            x = np.asarray(block['point'], dtype=float)
            label = "{}[{}]".format(self.name, ", ".join(f"{v:.6g}" for v in x))
            return SubmanifoldPatch.point(x, name=label)
        if self.spec.fibers is None:
            raise ConfigError(f"scenario {self.name} has no fiber parametrization")
        if 'c' not in block:
            raise ConfigError(f"leaf block needs 'c' or 'point', got {block!r}")
        return self.spec.fibers.plaque(block['c'], block.get('box'))

    def summary(self) -> dict:
        return {
            'name': self.name,
            'dim': self.dim,
            'base_dim': self.spec.base_dim,
            'metric': self.metric.kind.value,
            'declared_base': self.spec.base_metric is not None,
            'checks': sorted(k for k in self.checks if k in SUMMARY_CHECKS),
            'expect': dict(sorted(self.expect.items())),
            'provenance': self.provenance,
        }
