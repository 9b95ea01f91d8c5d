"""Scenario-level checks: level-set containment, constant rank, equidistance
and horizontality through singular leaves.

The checks sample finitely many fiber points, radii and targets; none of
them raise on a failed check, the outcome is recorded in the report.
"""

import dataclasses
import logging
import os

import jax.numpy as jnp
import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from ..config import Tolerances, resolve
from ..errors import FinslerError, NotReached, WindowDegenerate
from ..math import linalg
from .geodesic import EndpointMap, integrate_geodesic, integrate_geodesics, normal_cone_sample
from .geometry.patch import SubmanifoldPatch
from .jacobi import detect_focal_points, l_jacobi_basis
from .metric import FinslerMetric, legendre_inverse, osculating_riemannian
from .scenario.builder import Builder
from .scenario.scenario import Scenario
from .scenario.source import JSONScenarioSource, builtin_source
from .submersion import (BasicField, TransnormalityReport, basic_field_along_fiber, check_submersion,
                         check_transnormality)

logger = logging.getLogger(__name__)

CHECKS = ('containment', 'rank', 'equidistance', 'horizontal', 'submersion')

DIRECTIONS = ('forward', 'backward')


def builtin_scenarios() -> list:
    """FIG1, FIG2, XY, EUCLID, SPHERE and the tilted control TILTED."""
    return Builder().scenarios(builtin_source())


def load_scenario(name: str) -> Scenario:
    """A built-in scenario by name, or a scenario JSON file by path.

    Raises
    ------
    ConfigError
        If the name is unknown or the file is malformed.
    """

    if os.path.isfile(name):
        return Builder().scenario(JSONScenarioSource([name]).record(0))
    return Builder().scenario(builtin_source().find(name))


def normal_field(sc: Scenario, plaque: SubmanifoldPatch, s0, xi=None, seed=None,
                 tol: Tolerances = None) -> BasicField:
    """The unit basic normal field along a fiber through a normal at plaque(s0).

    Parameters
    ----------
    xi : array-like, optional
        The normal at plaque(s0), rescaled to F = 1. When absent a normal is
        found from ``seed`` by :func:`normal_cone_sample`.

    Raises
    ------
    ValueError
        If ``xi`` is not orthogonal to the fiber.
    """

    s0 = np.asarray(s0, dtype=float).reshape(plaque.dim)
    p = plaque(s0)
    if xi is None:
        xi = normal_cone_sample(sc.metric, p, plaque.tangent_basis(s0), seed, tol)
    xi = np.asarray(xi, dtype=float)
    xi = xi / float(sc.metric.F(p, xi))
    field, _ = basic_field_along_fiber(sc.metric, sc.spec, plaque, s0, xi, [s0], tol, unit=True)
    return field


@dataclasses.dataclass
class ContainmentReport:
    """Spread of pi over the endpoint images of a fiber, per radius.

    Attributes
    ----------
    fiber : str
        The fiber.
    r_grid : np.ndarray
        Radii.
    spread : np.ndarray
        Largest pairwise distance of pi(eta^r(p)) over the sampled p.
    verdict : bool
        True iff every spread is below tolerance.
    """

    fiber: str
    r_grid: np.ndarray
    spread: np.ndarray
    verdict: bool

    @property
    def max_defect(self) -> float:
        return float(np.max(self.spread)) if self.spread.size else 0.0

    def to_dict(self) -> dict:
        return {
            'fiber': self.fiber,
            'verdict': self.verdict,
            'max_defect': self.max_defect,
            'r': [float(r) for r in self.r_grid],
            'spread': [float(s) for s in self.spread],
        }


def check_level_set_containment(sc: Scenario, fiber: SubmanifoldPatch, xi, r_grid, params=None,
                                tol: Tolerances = None) -> ContainmentReport:
    """Whether the endpoint map of a basic normal sends a fiber into one level set.

    Parameters
    ----------
    fiber : SubmanifoldPatch
        A regular fiber.
    xi : callable
        The unit normal field over fiber parameters.
    r_grid : array-like
        Non-negative radii.
    params : array-like, optional
        Fiber parameters, an 8-point grid by default.

    Returns
    -------
    ContainmentReport
        Never raises on a failed check.
    """

    tol = resolve(tol)
    r_grid = np.asarray(r_grid, dtype=float)
    params = fiber.grid(8) if params is None else np.asarray(params, dtype=float).reshape(-1, fiber.dim)
    emap = EndpointMap(sc.metric, fiber, xi, float(np.max(r_grid)), tol=tol)
    paths = emap.paths(params)
    spread = np.array([linalg.spread(np.array([sc.spec.pi(p.position(r)) for p in paths])) for r in r_grid])
    report = ContainmentReport(fiber.name, r_grid, spread, bool(np.all(spread < tol.containment)))
    logger.info("containment on %s: max spread %.3g over %d radii (%s)", fiber.name, report.max_defect,
                len(r_grid), "pass" if report.verdict else "fail")
    return report


def _endpoint_ranks(sc: Scenario, fiber: SubmanifoldPatch, xi, r_values, params, step: float,
                    tol: Tolerances) -> np.ndarray:
    """Ranks of d(eta^r) at every (r, parameter), shape (len(r_values), len(params)).

    The differential is a central difference in the fiber parameters; all
    shifted geodesics are one stacked integration read at every r. Singular
    values count when above rank_ratio times the larger of the differential's
    and the fiber's own largest singular value.
    """

    k = fiber.dim
    params = np.asarray(params, dtype=float).reshape(-1, k)
    if k == 0:
        return np.zeros((len(r_values), len(params)), dtype=int)
    shifted = []
    for s in params:
        for a in range(k):
            e = np.zeros(k)
            e[a] = step
            shifted.extend([s + e, s - e])
    paths = EndpointMap(sc.metric, fiber, xi, float(np.max(r_values)), tol=tol).paths(shifted)
    floors = [linalg.singular_values(fiber.tangent_basis(s))[0] for s in params]
    ranks = np.zeros((len(r_values), len(params)), dtype=int)
    for i, r in enumerate(r_values):
        for j in range(len(params)):
            cols = [(paths[2 * (j * k + a)].position(r) - paths[2 * (j * k + a) + 1].position(r)) / (2 * step)
                    for a in range(k)]
            d = np.column_stack(cols)
            scale = max(linalg.singular_values(d)[0], floors[j])
            ranks[i, j] = linalg.numerical_rank(d, tol.rank_ratio, scale)
    return ranks


@dataclasses.dataclass
class RankReport:
    """Rank of the endpoint map at one radius.

    Attributes
    ----------
    r : float
        The radius.
    ranks : list
        Rank at each sampled fiber parameter.
    stable : bool
        Halving the difference step changes no rank.
    verdict : bool
        The ranks are all equal.
    """

    r: float
    ranks: list
    stable: bool
    verdict: bool

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def rank_of_endpoint_map(sc: Scenario, fiber: SubmanifoldPatch, xi, r: float, sample_params,
                         tol: Tolerances = None) -> RankReport:
    """Rank of d(eta^r_xi) across fiber points, by central differences."""
    tol = resolve(tol)
    ranks = _endpoint_ranks(sc, fiber, xi, [r], sample_params, tol.rank_step, tol)[0]
    refined = _endpoint_ranks(sc, fiber, xi, [r], sample_params, tol.rank_step / 2, tol)[0]
    report = RankReport(float(r), [int(v) for v in ranks], bool(np.array_equal(ranks, refined)),
                        len(set(ranks.tolist())) == 1)
    logger.info("rank of eta^%g on %s: %s", r, fiber.name, sorted(set(report.ranks)))
    return report


@dataclasses.dataclass
class EquifocalityReport:
    """Containment and rank constancy of the endpoint maps of one fiber.

    Attributes
    ----------
    fiber : str
        The fiber.
    xi : list
        The normal at the reference point.
    r_grid : np.ndarray
        Radii checked with the regular step.
    containment : np.ndarray, optional
        Level-set spread per radius.
    contained : bool
        Every spread is below the containment tolerance (True when not
        checked).
    ranks : np.ndarray
        Ranks, shape (len(r_grid), samples).
    focal : list
        Focal instants of the reference geodesic inside the grid range.
    focal_ranks : np.ndarray
        Ranks at the focal instants, taken with a tenfold smaller step.
    stable : bool
        Halving the step changes no regular rank.
    """

    fiber: str
    xi: list
    r_grid: np.ndarray
    containment: np.ndarray
    ranks: np.ndarray
    focal: list
    focal_ranks: np.ndarray
    stable: bool
    contained: bool = True

    @property
    def constant(self) -> bool:
        rows = list(self.ranks) + list(self.focal_ranks)
        return all(len(set(np.asarray(row).tolist())) <= 1 for row in rows)

    @property
    def verdict(self) -> bool:
        return self.constant and self.stable and self.contained

    def to_dict(self) -> dict:
        return {
            'fiber': self.fiber,
            'xi': [float(v) for v in self.xi],
            'r': [float(r) for r in self.r_grid],
            'containment': None if self.containment is None else [float(s) for s in self.containment],
            'ranks': np.asarray(self.ranks).tolist(),
            'focal': [[float(t), int(m)] for t, m in self.focal],
            'focal_ranks': np.asarray(self.focal_ranks).tolist(),
            'stable': self.stable,
            'contained': self.contained,
            'constant': self.constant,
            'verdict': self.verdict,
        }


def check_equifocality(sc: Scenario, fiber: SubmanifoldPatch, xi, r_grid, sample_params, s0=None,
                       containment: bool = True, tol: Tolerances = None) -> EquifocalityReport:
    """Rank constancy of eta^r_xi over a fiber for a grid of radii.

    Radii within the focal band of a focal instant of the geodesic from
    fiber(s0) are taken out of the regular grid; the rank at the focal
    instant itself is checked with a tenfold smaller difference step.

    Returns
    -------
    EquifocalityReport
        Never raises on a failed check.
    """

    tol = resolve(tol)
    r_grid = np.asarray(r_grid, dtype=float)
    s0 = fiber.centre() if s0 is None else np.asarray(s0, dtype=float).reshape(fiber.dim)
    r_max = float(np.max(r_grid))
    focal = []
    if fiber.dim > 0:
        geo = integrate_geodesic(sc.metric, fiber(s0), xi(s0), (0.0, r_max + 2 * tol.focal_band), tol)
        try:
            space = l_jacobi_basis(sc.metric, fiber, s0, geo, tol)
            focal = detect_focal_points(space, (0.0, r_max + 2 * tol.focal_band), tol).instants
        except WindowDegenerate:
            logger.warning("focal detection on %s degenerate, rank sampled on the plain grid", fiber.name)
    focal = [(t, m) for t, m in focal if t <= r_max + tol.focal_band]

    keep = np.array([all(abs(r - t) > tol.focal_band for t, _ in focal) for r in r_grid], dtype=bool)
    if not np.all(keep):
        logger.warning("radii %s within %g of focal instants %s, sampled at the focal instants instead",
                       r_grid[~keep].tolist(), tol.focal_band, [t for t, _ in focal])
    regular = r_grid[keep]
    ranks = _endpoint_ranks(sc, fiber, xi, regular, sample_params, tol.rank_step, tol)
    refined = _endpoint_ranks(sc, fiber, xi, regular, sample_params, tol.rank_step / 2, tol)
    focal_r = [t for t, _ in focal]
    focal_ranks = (_endpoint_ranks(sc, fiber, xi, focal_r, sample_params, tol.rank_step / 10, tol)
                   if focal_r else np.zeros((0, len(np.atleast_2d(sample_params))), dtype=int))
    spread, contained = None, True
    if containment:
        held = check_level_set_containment(sc, fiber, xi, r_grid, sample_params, tol)
        spread, contained = held.spread, held.verdict
    report = EquifocalityReport(fiber.name, list(xi(s0)), regular, spread, ranks, focal, focal_ranks,
                                bool(np.array_equal(ranks, refined)), contained)
    logger.info("equifocality of %s: ranks %s, focal instants %s (%s)", fiber.name,
                sorted(set(ranks.ravel().tolist())), [round(t, 9) for t in focal_r],
                "constant" if report.constant else "varying")
    return report


def _sphere_directions(m: int, count: int) -> np.ndarray:
    """Roughly uniform unit vectors of R^m, rows."""
    if m == 1:
        return np.array([[1.0], [-1.0]])
    if m == 2:
        a = 2 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(a), np.sin(a)])
    # golden spiral on S^2, random normals above
    if m == 3:
        i = np.arange(count) + 0.5
        z = 1 - 2 * i / count
        phi = np.pi * (1 + 5 ** 0.5) * i
        r = np.sqrt(1 - z * z)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    u = np.random.default_rng(0).normal(size=(count, m))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


class _Shooting:
    """Normal geodesics of a plaque parametrized by z = (s, psi, t).

    The initial velocity is the Legendre preimage, rescaled to F = 1, of the
    covector P(s) psi, with P(s) the Euclidean projection onto the
    complement of the tangent space at s. The gauge of psi is fixed by the
    residual rows |psi|^2 = 1 and T(s)^T psi = 0.
    """

    def __init__(self, metric: FinslerMetric, plaque: SubmanifoldPatch, tol: Tolerances):
        self.metric = metric
        self.plaque = plaque
        self.tol = tol
        self.k = plaque.dim
        self.n = metric.dim

    def split(self, z) -> tuple:
        return z[:self.k], z[self.k:self.k + self.n], z[-1]

    def initial(self, z) -> tuple:
        s, psi, _ = self.split(z)
        x = self.plaque(s)
        basis = self.plaque.tangent_basis(s)
        covector = psi - linalg.projector(np.eye(self.n), basis) @ psi
        v = legendre_inverse(self.metric, x, covector, self.tol)
        return x, v / float(self.metric.F(x, v))

    def fan(self, params, count: int, t: float) -> list:
        """z for every parameter and ``count`` directions of its normal space."""
        zs = []
        for s in params:
            normals = linalg.complement(self.plaque.tangent_basis(s), self.n)
            for u in _sphere_directions(self.n - self.k, count):
                zs.append(np.concatenate([s, normals @ u, [t]]))
        return zs

    def paths(self, zs, t_end: float) -> list:
        starts = [self.initial(z) for z in zs]
        return integrate_geodesics(self.metric, np.array([x for x, _ in starts]),
                                   np.array([v for _, v in starts]), (0.0, t_end), self.tol)

    def residuals(self, zs, target: np.ndarray) -> np.ndarray:
        """Landing miss and gauge rows of a batch, one stacked integration."""
        t_end = max(float(z[-1]) for z in zs)
        if t_end > 0:
            ends = [p.position(z[-1]) for p, z in zip(self.paths(zs, t_end), zs)]
        else:
            ends = [self.plaque(self.split(z)[0]) for z in zs]
        rows = []
        for z, end in zip(zs, ends):
            s, psi, _ = self.split(z)
            gauge = self.plaque.tangent_basis(s).T @ psi
            rows.append(np.concatenate([end - target, [psi @ psi - 1.0], gauge]))
        return np.array(rows)


def _land(shoot: _Shooting, z0: np.ndarray, target: np.ndarray, t_max: float):
    """least_squares on the landing condition from z0 with 0 <= t <= t_max; returns (z, miss) or None."""
    step = 1e-6

    def residual(z):
        return shoot.residuals([z], target)[0]

    def jacobian(z):
        hs = step * np.maximum(1.0, np.abs(z))
        shifted = []
        for i in range(len(z)):
            for sign in (1.0, -1.0):
                zz = z.copy()
                zz[i] += sign * hs[i]
                shifted.append(zz)
        res = shoot.residuals(shifted, target)
        return np.column_stack([(res[2 * i] - res[2 * i + 1]) / (2 * hs[i]) for i in range(len(z))])

    lower = np.full(len(z0), -np.inf)
    lower[-1] = 0.0
    upper = np.full(len(z0), np.inf)
    upper[-1] = t_max
    try:
        res = least_squares(residual, z0, jac=jacobian, bounds=(lower, upper), method='trf',
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
    except (ValueError, np.linalg.LinAlgError, FinslerError) as e:
        logger.debug("shooting from %s failed: %s", z0, e)
        return None
    return res.x, float(np.max(np.abs(res.fun)))


def _closest(shoot: _Shooting, zs: list, target: np.ndarray, t_max: float, samples: int) -> list:
    """(gap, z) per fan member with t set to its closest approach, sorted by gap."""
    ts = np.linspace(0.0, t_max, samples)
    found = []
    for z, path in zip(zs, shoot.paths(zs, t_max)):
        gaps = np.linalg.norm(path.position(ts).T - target, axis=1)
        i = int(np.argmin(gaps))
        zz = z.copy()
        zz[-1] = ts[i]
        found.append((float(gaps[i]), zz, path, i))
    found.sort(key=lambda item: item[0])
    return found


def _directed(metric: FinslerMetric, direction: str) -> FinslerMetric:
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got '{direction}'")
    return metric if direction == 'forward' else metric.reverse()


def fan_distance(sc: Scenario, plaque: SubmanifoldPatch, target, direction: str = 'forward',
                 params=None, directions: int = 24, t_max: float = None, tol: Tolerances = None) -> tuple:
    """Closest approach of a fan of unit normal geodesics to a target.

    The closest fan member is refined in t alone by bounded scalar
    minimization of its distance to the target.

    Returns
    -------
    tuple
        (t, miss, z) of the fan member passing closest, z = (s, psi, t).
    """

    tol = resolve(tol)
    shoot = _Shooting(_directed(sc.metric, direction), plaque, tol)
    target = np.asarray(target, dtype=float)
    t_max = sc.tube_radius if t_max is None else float(t_max)
    params = plaque.grid(8) if params is None else np.asarray(params, dtype=float).reshape(-1, plaque.dim)
    ts = np.linspace(0.0, t_max, 400)
    best = None
    for _, z, path, i in _closest(shoot, shoot.fan(params, directions, t_max), target, t_max, len(ts))[:4]:
        lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, len(ts) - 1)]
        res = minimize_scalar(lambda t: float(np.linalg.norm(path.position(t) - target)), bounds=(lo, hi),
                              method='bounded', options={'xatol': 1e-12})
        if best is None or res.fun < best[1]:
            z = z.copy()
            z[-1] = res.x
            best = (float(res.x), float(res.fun), z)
    return best


def fiber_distance(sc: Scenario, plaque: SubmanifoldPatch, target, direction: str = 'forward',
                   params=None, seeds: int = 4, tol: Tolerances = None) -> float:
    """Finsler distance between a plaque and a point.

    Forward: d(P, x), the least parameter at which a unit geodesic leaving P
    orthogonally reaches x. Backward: d(x, P), the same shooting for the
    reverse metric. Shots are seeded from the closest members of a geodesic
    fan and solved by least squares in (fiber parameter, normal covector,
    time).

    Parameters
    ----------
    plaque : SubmanifoldPatch
        The plaque P.
    target : array-like
        The point x, inside the scenario region.
    direction : str
        'forward' or 'backward'.
    params : array-like, optional
        Fiber parameters of the fan, an 8-point grid by default.
    seeds : int
        Number of fan members refined.

    Raises
    ------
    ValueError
        If the target is outside the region.
    NotReached
        If no shot lands within the distance tolerance.
    """

    tol = resolve(tol)
    shoot = _Shooting(_directed(sc.metric, direction), plaque, tol)
    target = np.asarray(target, dtype=float)
    if not sc.contains(target):
        raise ValueError(f"target {target} outside the region of {sc.name}")
    params = plaque.grid(8) if params is None else np.asarray(params, dtype=float).reshape(-1, plaque.dim)
    landing = tol.distance_xtol * max(1.0, float(np.max(np.abs(target))))
    if min(float(np.max(np.abs(plaque(s) - target))) for s in params) <= landing:
        return 0.0

    t_max = sc.tube_radius
    found = []
    for _, z0, _, _ in _closest(shoot, shoot.fan(params, 24, t_max), target, t_max, 200)[:seeds]:
        out = _land(shoot, z0, target, t_max)
        if out is not None and out[1] <= landing:
            found.append(float(out[0][-1]))
    if not found:
        raise NotReached(f"no normal geodesic of {plaque.name} reaches {target} within "
                         f"t <= {t_max:g} ({direction})")
    distance = min(found)
    logger.debug("%s distance from %s to %s: %.12g", direction, plaque.name, target, distance)
    return distance


@dataclasses.dataclass
class CylinderReport:
    """Distances from a plaque to sample points of another plaque.

    Attributes
    ----------
    plaque : str
        The plaque P.
    comparison : str
        The plaque sampled.
    radius : float
        The expected distance.
    direction : str
        'forward' for d(P, x), 'backward' for d(x, P).
    points : np.ndarray
        Sample points, rows.
    distances : np.ndarray
        Distance per sample.
    """

    plaque: str
    comparison: str
    radius: float
    direction: str
    points: np.ndarray
    distances: np.ndarray
    passed: bool = False

    @property
    def residuals(self) -> np.ndarray:
        return np.abs(self.distances - self.radius)

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals))

    def to_dict(self) -> dict:
        return {
            'plaque': self.plaque,
            'comparison': self.comparison,
            'radius': self.radius,
            'direction': self.direction,
            'verdict': self.passed,
            'max_residual': self.max_residual,
            'residuals': [float(r) for r in self.residuals],
        }


def check_equidistance(sc: Scenario, base: SubmanifoldPatch, r: float, comparison: SubmanifoldPatch,
                       direction: str = 'forward', samples: int = 5, tol: Tolerances = None) -> CylinderReport:
    """Whether a plaque lies on the cylinder of radius r about another.

    Raises
    ------
    NotReached
        If a sample point cannot be reached.
    """

    tol = resolve(tol)
    points = np.array([comparison(s) for s in comparison.grid(samples)])
    distances = np.array([fiber_distance(sc, base, x, direction, tol=tol) for x in points])
    report = CylinderReport(base.name, comparison.name, float(r), direction, points, distances)
    report.passed = report.max_residual < tol.equidistance
    logger.info("%s cylinder of radius %g about %s through %s: max residual %.3g (%s)", direction, r, base.name,
                comparison.name, report.max_residual, "pass" if report.passed else "fail")
    return report


def check_horizontality_through_singular(sc: Scenario, fiber: SubmanifoldPatch, s0, xi, window,
                                         samples: int = 101, tol: Tolerances = None) -> TransnormalityReport:
    """Orthogonality to the fibers of the geodesic from fiber(s0) along xi.

    The geodesic may cross the declared singular locus; instants on it are
    skipped and every regular instant on either side is checked.
    """

    s0 = np.asarray(s0, dtype=float).reshape(fiber.dim)
    xi = np.asarray(xi, dtype=float)
    geo = integrate_geodesic(sc.metric, fiber(s0), xi, tuple(window), tol)
    return check_transnormality(sc.metric, sc.spec, geo, samples, tol)


@dataclasses.dataclass
class OsculatingReport:
    """F against the osculating Riemannian metric g_V of a geodesic field V.

    Along an integral curve of a geodesic field the geodesics of F and g_V
    coincide, and so do their Jacobi operators in the direction V.

    Attributes
    ----------
    start : np.ndarray
        First point of the integral curve.
    ts : np.ndarray
        Sample instants.
    field_gap : float
        Largest |gamma'(t) - V(gamma(t))| along the F-geodesic tangent to V.
    geodesic_gap : float
        Largest distance between the F- and g_V-geodesics with the same data.
    operator_gap : float
        Largest entry of R_F - R_{g_V}, relative to max(1, max |R_F|).
    verdict : bool
        True iff every gap is below tolerance.
    """

    start: np.ndarray
    ts: np.ndarray
    field_gap: float
    geodesic_gap: float
    operator_gap: float
    verdict: bool

    @property
    def max_defect(self) -> float:
        return max(self.field_gap, self.geodesic_gap, self.operator_gap)

    def to_dict(self) -> dict:
        return {
            'start': [float(x) for x in self.start],
            't1': float(self.ts[-1]),
            'field_gap': self.field_gap,
            'geodesic_gap': self.geodesic_gap,
            'operator_gap': self.operator_gap,
            'verdict': self.verdict,
        }


def check_osculating(metric: FinslerMetric, field, x0, t1: float, samples: int = 11,
                     tol: Tolerances = None) -> OsculatingReport:
    """Compare ``metric`` with ``osculating_riemannian(metric, field)`` along one integral curve.

    Parameters
    ----------
    field : callable
        ``field(x)`` returning V(x), a geodesic field of ``metric``.
    x0 : array-like
        Start of the integral curve.
    t1 : float
        Length of the compared stretch.
    """

    tol = resolve(tol)
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(field(jnp.asarray(x0)), dtype=float)
    g_V = osculating_riemannian(metric, field)
    geo = integrate_geodesic(metric, x0, v0, (0.0, t1), tol)
    geo_V = integrate_geodesic(g_V, x0, v0, (0.0, t1), tol)
    ts = np.linspace(0.0, t1, samples)
    field_gap = geodesic_gap = operator_gap = 0.0
    for t in ts:
        x, v = geo.value_and_rate(t)
        field_gap = max(field_gap, float(np.linalg.norm(v - np.asarray(field(jnp.asarray(x))))))
        geodesic_gap = max(geodesic_gap, float(np.linalg.norm(x - geo_V.position(t))))
        r = np.asarray(metric.jacobi_operator(x, v))
        r_V = np.asarray(g_V.jacobi_operator(x, v))
        operator_gap = max(operator_gap, float(np.max(np.abs(r - r_V)) / max(1.0, np.max(np.abs(r)))))
    verdict = max(field_gap, geodesic_gap, operator_gap) < tol.osculating
    logger.info("osculating metric of %s from %s: field %.3g, geodesic %.3g, operator %.3g (%s)", metric.name, x0,
                field_gap, geodesic_gap, operator_gap, "pass" if verdict else "fail")
    return OsculatingReport(x0, ts, field_gap, geodesic_gap, operator_gap, verdict)


def scenario_osculating(sc: Scenario, tol: Tolerances = None):
    """Run :func:`check_osculating` on the scenario's declared geodesic field.

    The field is read from ``checks.geodesic_field`` as
    ``{"V": [...], "start": [...], "t1": ...}``.

    Returns
    -------
    OsculatingReport or None
        None when the scenario declares no geodesic field.
    """

    block = sc.checks.get('geodesic_field')
    if block is None:
        return None
    field = Builder().vector_field(block['V'], sc.dim, 'geodesic_field')
    return check_osculating(sc.metric, field, block['start'], float(block['t1']), tol=tol)


@dataclasses.dataclass
class CheckResult:
    """Outcome of one named check of a scenario.

    Attributes
    ----------
    scenario : str
        The scenario.
    check : str
        One of CHECKS.
    expected : str
        'pass' or 'fail'.
    passed : bool
        The check held.
    defect : float
        Largest residual of the check (0 or 1 for rank constancy).
    details : list
        ``to_dict`` of every report the check produced.
    """

    scenario: str
    check: str
    expected: str
    passed: bool
    defect: float
    details: list

    @property
    def status(self) -> str:
        if self.expected == 'pass':
            return 'pass' if self.passed else 'FAIL'
        return 'expected-fail' if not self.passed else 'unexpected-pass'

    @property
    def failed(self) -> bool:
        """A check expected to hold did not."""
        return self.expected == 'pass' and not self.passed

    def to_dict(self) -> dict:
        return {
            'scenario': self.scenario,
            'check': self.check,
            'expected': self.expected,
            'passed': self.passed,
            'status': self.status,
            'defect': self.defect,
            'details': self.details,
        }


def _r_grid(sc: Scenario) -> np.ndarray:
    if 'r_grid' in sc.checks:
        return np.asarray(sc.checks['r_grid'], dtype=float)
    return np.linspace(0.0, sc.tube_radius, 6)[1:]


def _equidistance(sc: Scenario, samples: int, tol: Tolerances) -> tuple:
    details, worst, passed = [], 0.0, True
    for entry in sc.checks.get('equidistance', []):
        base, comparison = sc.leaf(entry['base']), sc.leaf(entry['comparison'])
        for direction in DIRECTIONS:
            if direction not in entry:
                continue
            try:
                report = check_equidistance(sc, base, float(entry[direction]), comparison, direction, samples, tol)
            except NotReached as e:
                logger.warning("%s: %s", sc.name, e)
                details.append({'plaque': base.name, 'comparison': comparison.name, 'direction': direction,
                                'verdict': False, 'error': str(e)})
                worst, passed = float('inf'), False
                continue
            details.append(report.to_dict())
            worst = max(worst, report.max_residual)
            passed = passed and report.passed
    return passed, worst, details


def run_checks(sc: Scenario, checks=None, samples: int = 5, seed: int = 0,
               tol: Tolerances = None) -> list:
    """Run the configured checks of a scenario.

    The fiber, normal, radii and plaque pairs are read from the scenario's
    ``checks`` block; checks without parameters there are skipped.

    Parameters
    ----------
    checks : iterable of str, optional
        Subset of CHECKS. By default the scenario's ``run`` list, or all.
    samples : int
        Fiber points per check and sample points per cylinder.
    seed : int
        Seed of the submersion sampler.

    Returns
    -------
    list of CheckResult
        In the order of ``checks``.
    """

    tol = resolve(tol)
    checks = tuple(sc.checks.get('run', CHECKS)) if checks is None else tuple(checks)
    unknown = set(checks) - set(CHECKS)
    if unknown:
        raise ValueError(f"unknown check(s) {sorted(unknown)}, expected some of {CHECKS}")
    conf = sc.checks
    fiber = s0 = field = None
    if 'fiber' in conf and ({'containment', 'rank', 'horizontal'} & set(checks)):
        fiber = sc.leaf(conf['fiber'])
        s0 = np.asarray(conf['fiber'].get('s0', fiber.centre()), dtype=float).reshape(fiber.dim)
        field = normal_field(sc, fiber, s0, conf.get('xi'), conf.get('xi_seed'), tol)

    results = []
    for check in checks:
        expected = sc.expected(check)
        if check == 'submersion':
            report = check_submersion(sc.metric, sc.spec, sc.region, 4 * samples, seed, tol)
            results.append(CheckResult(sc.name, check, expected, report.passed, report.max_defect,
                                       [report.to_dict()]))
        elif check == 'equidistance':
            if not conf.get('equidistance'):
                logger.info("%s has no plaque pairs, equidistance skipped", sc.name)
                continue
            passed, worst, details = _equidistance(sc, samples, tol)
            results.append(CheckResult(sc.name, check, expected, passed, worst, details))
        elif fiber is None:
            logger.info("%s has no reference fiber, %s skipped", sc.name, check)
            continue
        elif check == 'containment':
            report = check_level_set_containment(sc, fiber, field, _r_grid(sc), fiber.grid(samples), tol)
            results.append(CheckResult(sc.name, check, expected, report.verdict, report.max_defect,
                                       [report.to_dict()]))
        elif check == 'rank':
            report = check_equifocality(sc, fiber, field, _r_grid(sc), fiber.grid(samples), s0,
                                        containment=False, tol=tol)
            results.append(CheckResult(sc.name, check, expected, report.verdict, float(not report.verdict),
                                       [report.to_dict()]))
        elif check == 'horizontal':
            if 'horizontal' not in conf:
                logger.info("%s has no horizontal window, horizontality skipped", sc.name)
                continue
            report = check_horizontality_through_singular(sc, fiber, s0, field(s0), conf['horizontal']['window'],
                                                          tol=tol)
            results.append(CheckResult(sc.name, check, expected, report.verdict, report.max_residual,
                                       [report.to_dict()]))
    for r in results:
        log = logger.warning if r.failed else logger.info
        log("%s %s: %s (defect %.3g)", sc.name, r.check, r.status, r.defect)
    return results
