import dataclasses
import json
import os
from typing import Optional

from .errors import ConfigError

RESOURCES_DIR = os.path.join(os.path.dirname(__file__), 'resources')


@dataclasses.dataclass(frozen=True)
class Tolerances:
    """Numeric constants shared by every algorithm.

    Defaults are read from ``resources/defaults.json``. Every algorithm takes
    an optional ``tol`` argument; pass ``Tolerances.load().replace(...)`` to
    override individual values.

    Attributes
    ----------
    cone_delta : float
        Smoothness guard, a direction v is usable when F(v) > cone_delta * max(1, |v|_inf).
    rtol, atol : float
        Relative and absolute tolerance of the adaptive integrator.
    max_step_underflow : float
        Smallest admissible step before the integration is declared failed.
    condition_max : float
        Largest admissible condition number of the fundamental tensor.
    orthogonality : float
        Relative tolerance of the orthogonality test g_v(v, u) = 0.
    newton_max_iter : int
        Iteration cap of every Newton solve.
    newton_tol : float
        Residual at which Newton solves stop.
    singular_ratio : float
        Singular value ratio below which d(pi) is rank deficient.
    rank_ratio : float
        Singular value ratio below which a direction does not count for rank.
    focal_xtol : float
        Bisection resolution of focal and conjugate instants.
    focal_samples : int
        Number of samples of a determinant trace.
    variation_step : float
        Step of the variation-field central difference.
    rank_step : float
        Step of the endpoint-map central difference.
    degeneracy_halfwidth : float
        Half-width of the window around a degeneracy instant where the
        rescaled Wilking basis is used.
    degeneracy_ratio : float
        Singular value ratio that marks a degeneracy instant of V(t).
    focal_band : float
        Half-width of the exclusion band around focal instants in r-grids.
    selfadjoint : float
        Admissible self-adjointness defect of a Jacobi basis.
    containment, transnormality, equidistance, constancy, submersion : float
        Pass thresholds of the verifier checks.
    osculating : float
        Admissible gap between F and the osculating metric of a geodesic
        field along one of its integral curves.
    distance_xtol : float
        Landing tolerance of the distance shooting.
    homogeneity, symmetry, euler : float
        Pass thresholds of metric validation (relative homogeneity defect,
        Cartan slot-permutation defect, Euler identity defects).
    """

    cone_delta: float = 1e-6
    rtol: float = 1e-9
    atol: float = 1e-12
    max_step_underflow: float = 1e-12
    condition_max: float = 1e12
    orthogonality: float = 1e-8
    newton_max_iter: int = 50
    newton_tol: float = 1e-13
    singular_ratio: float = 1e-8
    rank_ratio: float = 1e-6
    focal_xtol: float = 1e-9
    focal_samples: int = 400
    variation_step: float = 1e-4
    rank_step: float = 1e-5
    degeneracy_halfwidth: float = 1e-4
    degeneracy_ratio: float = 1e-6
    focal_band: float = 1e-3
    selfadjoint: float = 1e-7
    containment: float = 1e-6
    transnormality: float = 1e-6
    equidistance: float = 1e-6
    distance_xtol: float = 1e-7
    constancy: float = 1e-8
    submersion: float = 1e-8
    osculating: float = 1e-6
    homogeneity: float = 1e-12
    symmetry: float = 1e-10
    euler: float = 1e-10

    def __post_init__(self):
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            if not value > 0:
                raise ConfigError(f"tolerance '{field.name}' must be positive, got {value}")

    @classmethod
    def load(cls, path: Optional[str] = None) -> "Tolerances":
        """Read the tolerances from a JSON file.

        Parameters
        ----------
        path : str, optional
            JSON file with a subset of the fields. Defaults to the packaged
            ``defaults.json``.

        Returns
        -------
        Tolerances
            The tolerances.
        """

        if path is None:
            path = os.path.join(RESOURCES_DIR, 'defaults.json')
        with open(path, 'r') as f:
            values = json.load(f)
        return cls().replace(**values)

    def replace(self, **overrides) -> "Tolerances":
        """A copy with some fields overridden.

        Raises
        ------
        ConfigError
            If a field is unknown or a value is not positive.
        """

        names = {f.name for f in dataclasses.fields(self)}
        unknown = set(overrides) - names
        if unknown:
            raise ConfigError(f"unknown tolerance(s): {sorted(unknown)}")
        cast = {}
        for key, value in overrides.items():
            kind = type(getattr(self, key))
            try:
                cast[key] = kind(value)
            except (TypeError, ValueError):
                raise ConfigError(f"tolerance '{key}' is not a number: {value!r}")
        return dataclasses.replace(self, **cast)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


DEFAULT_TOLERANCES = Tolerances.load()


def resolve(tol: Optional[Tolerances]) -> Tolerances:
    """Return ``tol`` or the packaged defaults."""
    return DEFAULT_TOLERANCES if tol is None else tol
