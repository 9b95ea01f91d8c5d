"""Jacobi fields, shape operators, L-Jacobi bases and focal points."""

import dataclasses
import logging
from functools import lru_cache
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np

from ..config import Tolerances, resolve
from ..errors import WindowDegenerate
from ..math import linalg, ode, roots
from .geodesic import GeodesicPath, NormalExtension, integrate_geodesics, is_orthogonal
from .geometry.patch import SubmanifoldPatch
from .geometry.point import TangentSample
from .metric import FinslerMetric

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class JacobiOperatorValue:
    """R with R[i, k] w^k = R_{gamma'(t)}(w)^i."""

    t: float
    at: TangentSample
    R: np.ndarray


def jacobi_operator(metric: FinslerMetric, geo: GeodesicPath, t: float, tol: Tolerances = None) -> JacobiOperatorValue:
    """The Jacobi operator of the geodesic at ``t``, from the spray curvature.

    Raises
    ------
    ValueError
        If t is outside the geodesic's span.
    ConeViolation
        If the velocity is inside the smoothness guard.
    """

    if not geo.contains(t):
        raise ValueError(f"t = {t} outside geodesic span {geo.t_span}")
    x, v = geo.value_and_rate(t)
    metric.guard(x, v, tol)
    return JacobiOperatorValue(float(t), TangentSample(x, v), np.asarray(metric.jacobi_operator(x, v)))


class JacobiFlow:
    """Geodesic state co-integrated with m solutions of the Jacobi equation.

    The integration starts at ``t0`` and covers the whole span of ``geo``,
    running backward and forward as needed. Values are read from the dense
    output and cached per instant.
    """

    def __init__(self, metric: FinslerMetric, geo: GeodesicPath, t0: float, j0: np.ndarray, jd0: np.ndarray,
                 tol: Tolerances = None):
        self._metric = metric
        self._geo = geo
        self._t0 = float(t0)
        n = metric.dim
        self._n = n
        self._m = j0.shape[1]
        x0, v0 = geo.value_and_rate(t0)
        y0 = np.concatenate([x0, v0, j0.reshape(-1), jd0.reshape(-1)])
        rhs = metric.jacobi_rhs
        f = lambda t, y: np.asarray(rhs(y))
        self._segments = []
        for end in geo.t_span:
            if end != self._t0:
                self._segments.append((min(self._t0, end), max(self._t0, end), ode.integrate(f, (self._t0, end), y0, tol)))
        if not self._segments:
            self._segments.append((self._t0, self._t0, ode.integrate(f, (self._t0, self._t0), y0, tol)))
        self._at = lru_cache(maxsize=512)(self._evaluate)

    @property
    def geodesic(self) -> GeodesicPath:
        return self._geo

    @property
    def t0(self) -> float:
        return self._t0

    @property
    def size(self) -> int:
        return self._m

    def _evaluate(self, t: float):
        for lo, hi, traj in self._segments:
            if lo - 1e-12 <= t <= hi + 1e-12:
                y = traj(t)
                break
        else:
            raise ValueError(f"t = {t} outside the Jacobi flow span")
        n, m = self._n, self._m
        x, v = y[:n], y[n:2 * n]
        rest = y[2 * n:].reshape(2, n, m)
        nl = np.asarray(self._metric.nonlinear(x, v))
        return x, v, rest[0], rest[1], rest[1] + nl @ rest[0]

    def __call__(self, t: float):
        """(x, v, J, dJ/dt, J') at t; J-type entries have shape (n, m)."""
        return self._at(float(t))


class JacobiField:
    """One Jacobi field along a geodesic.

    Parameters
    ----------
    along : GeodesicPath
        The geodesic.
    sampler : callable
        ``sampler(t)`` returning (J, dJ/dt, J') at t, J' the covariant
        derivative along the geodesic.
    """

    def __init__(self, along: GeodesicPath, sampler: Callable):
        self._along = along
        self._sampler = sampler

    @classmethod
    def from_flow(cls, flow: JacobiFlow, column: int) -> "JacobiField":
        def sampler(t):
            _, _, j, jd, jp = flow(t)
            return j[:, column], jd[:, column], jp[:, column]
        return cls(flow.geodesic, sampler)

    @property
    def along(self) -> GeodesicPath:
        return self._along

    def __call__(self, t) -> np.ndarray:
        return self._sampler(t)[0]

    def rate(self, t) -> np.ndarray:
        """Chart derivative dJ/dt."""
        return self._sampler(t)[1]

    def derivative(self, t) -> np.ndarray:
        """Covariant derivative J' along the geodesic."""
        return self._sampler(t)[2]

    def value_and_rate(self, t):
        j, jd, _ = self._sampler(t)
        return j, jd

    def values(self, ts) -> np.ndarray:
        """J at several instants, shape (len(ts), n)."""
        return np.array([self(t) for t in ts])


def integrate_jacobi_fields(metric: FinslerMetric, geo: GeodesicPath, j0, j0p, t0: float = None,
                            tol: Tolerances = None) -> list:
    """Integrate several Jacobi fields with one shared step sequence.

    Parameters
    ----------
    j0, j0p : array-like
        n x m initial values and covariant initial derivatives.
    t0 : float, optional
        Initial instant, the start of the geodesic by default.

    Returns
    -------
    list of JacobiField
    """

    t0 = geo.t_span[0] if t0 is None else float(t0)
    j0 = np.asarray(j0, dtype=float).reshape(metric.dim, -1)
    j0p = np.asarray(j0p, dtype=float).reshape(metric.dim, -1)
    x0, v0 = geo.value_and_rate(t0)
    jd0 = j0p - np.asarray(metric.nonlinear(x0, v0)) @ j0
    flow = JacobiFlow(metric, geo, t0, j0, jd0, tol)
    return [JacobiField.from_flow(flow, i) for i in range(j0.shape[1])]


def integrate_jacobi(metric: FinslerMetric, geo: GeodesicPath, J0, J0p, t0: float = None,
                     tol: Tolerances = None) -> JacobiField:
    """The Jacobi field with J(t0) = J0 and J'(t0) = J0p.

    J0p is the covariant derivative along the geodesic. The Jacobi equation
    is integrated as the linearization of the geodesic flow, co-evolved
    with the geodesic state.

    Raises
    ------
    StepFailure
        Propagated from the integrator.
    """

    return integrate_jacobi_fields(metric, geo, J0, J0p, t0, tol)[0]


@dataclasses.dataclass(frozen=True)
class ShapeOperatorValue:
    """Shape operator in the tangent basis, S(T_a) = sum_b S[b, a] T_b.

    Attributes
    ----------
    symmetry_defect : float
        max |g_xi(S T_a, T_b) - g_xi(T_a, S T_b)|.
    """

    patch: SubmanifoldPatch
    s: np.ndarray
    xi: np.ndarray
    S: np.ndarray
    symmetry_defect: float

    def apply(self, u: np.ndarray) -> np.ndarray:
        """S applied to a tangent vector given in chart co-ordinates."""
        basis = self.patch.tangent_basis(self.s)
        coeff = np.linalg.lstsq(basis, u, rcond=None)[0]
        return basis @ (self.S @ coeff)


def shape_operator(metric: FinslerMetric, L: SubmanifoldPatch, s, xi, tol: Tolerances = None) -> ShapeOperatorValue:
    """S_xi(u) = tan_xi nabla^xi_u xi~ for the unit normal ``xi`` at ``L(s)``.

    The extension xi~ is the :class:`NormalExtension` through ``xi``; the
    result does not depend on the extension.

    Raises
    ------
    ValueError
        If xi is not a unit normal.
    NoConvergence
        From the normal continuation.
    """

    tol = resolve(tol)
    s = np.asarray(s, dtype=float).reshape(L.dim)
    xi = np.asarray(xi, dtype=float)
    x = L(s)
    basis = L.tangent_basis(s)
    ok, res = is_orthogonal(metric, x, basis, xi, tol=tol)
    f = float(metric.F(x, xi))
    if not ok or abs(f - 1.0) > 1e-8:
        raise ValueError(f"shape_operator needs a unit normal, got F = {f:.12g}, orthogonality residual {res:.3g}")
    if L.dim == 0:
        return ShapeOperatorValue(L, s, xi, np.zeros((0, 0)), 0.0)
    cov = NormalExtension(metric, L, s, xi, tol).covariant(s)
    g = np.asarray(metric.g(x, xi))
    gram = basis.T @ g @ basis
    S = np.linalg.solve(gram, basis.T @ g @ cov)
    pair = gram @ S
    return ShapeOperatorValue(L, s, xi, S, float(np.max(np.abs(pair - pair.T))))


class SelfAdjointSpace:
    """A family of Jacobi fields along one geodesic.

    Parameters
    ----------
    along : GeodesicPath
        The geodesic.
    fields : list of JacobiField
        The basis.
    label : str
        'W' for a full (n - 1)-dimensional space, 'V' for a subspace.
    t0 : float
        The instant the initial data were given at.
    """

    def __init__(self, along: GeodesicPath, fields: list, label: str = 'W', t0: float = None):
        if label not in ('W', 'V'):
            raise ValueError(f"label must be 'W' or 'V', got '{label}'")
        self._along = along
        self._fields = list(fields)
        self._label = label
        self._t0 = along.t_span[0] if t0 is None else float(t0)

    def __len__(self) -> int:
        return len(self._fields)

    def __getitem__(self, i) -> JacobiField:
        return self._fields[i]

    @property
    def along(self) -> GeodesicPath:
        return self._along

    @property
    def metric(self) -> FinslerMetric:
        return self._along.metric

    @property
    def fields(self) -> list:
        return list(self._fields)

    @property
    def label(self) -> str:
        return self._label

    @property
    def t0(self) -> float:
        return self._t0

    @property
    def dim(self) -> int:
        return len(self._fields)

    def subspace(self, indices, label: str = 'V') -> "SelfAdjointSpace":
        return SelfAdjointSpace(self._along, [self._fields[i] for i in indices], label, self._t0)

    def matrix(self, t: float) -> np.ndarray:
        """Columns J_i(t), shape (n, m)."""
        if not self._fields:
            return np.zeros((self._along.dim, 0))
        return np.column_stack([f(t) for f in self._fields])

    def derivative_matrix(self, t: float) -> np.ndarray:
        """Columns J_i'(t), shape (n, m)."""
        if not self._fields:
            return np.zeros((self._along.dim, 0))
        return np.column_stack([f.derivative(t) for f in self._fields])

    def metric_at(self, t: float) -> np.ndarray:
        x, v = self._along.value_and_rate(t)
        return np.asarray(self.metric.g(x, v))

    def pairing(self, t: float) -> np.ndarray:
        """Matrix of g(J_i', J_j) - g(J_i, J_j') at t."""
        g = self.metric_at(t)
        j, jp = self.matrix(t), self.derivative_matrix(t)
        a = jp.T @ g @ j
        return a - a.T

    def defect(self, ts) -> float:
        """Largest self-adjointness defect over the instants ``ts``."""
        return max(float(np.max(np.abs(self.pairing(t)))) if self._fields else 0.0 for t in ts)

    def tangency(self, ts) -> float:
        """Largest |g(J_i, gamma')| over ``ts``."""
        worst = 0.0
        for t in ts:
            x, v = self._along.value_and_rate(t)
            g = np.asarray(self.metric.g(x, v))
            if self._fields:
                worst = max(worst, float(np.max(np.abs(v @ g @ self.matrix(t)))))
        return worst


def l_jacobi_basis(metric: FinslerMetric, L: SubmanifoldPatch, s, geo: GeodesicPath,
                   tol: Tolerances = None) -> SelfAdjointSpace:
    """The L-Jacobi fields along a geodesic leaving L orthogonally.

    With t0 the start of ``geo``, xi the unit normal gamma'(t0)/F and T_a the
    tangent basis of L at s, the basis consists of k fields with J(t0) = T_a,
    J'(t0) = S_{gamma'} T_a and n - 1 - k fields with J(t0) = 0 and J'(t0)
    spanning the g-orthogonal complement of T L + span(gamma'(t0)).

    Raises
    ------
    ValueError
        If the geodesic does not start on L orthogonally.
    """

    tol = resolve(tol)
    s = np.asarray(s, dtype=float).reshape(L.dim)
    t0 = geo.t_span[0]
    x0, v0 = geo.value_and_rate(t0)
    if np.max(np.abs(L(s) - x0)) > 1e-9 * max(1.0, np.max(np.abs(x0))):
        raise ValueError(f"geodesic starts at {x0}, not at L(s) = {L(s)}")
    basis = L.tangent_basis(s)
    ok, res = is_orthogonal(metric, x0, basis, v0, tol=tol)
    if not ok:
        raise ValueError(f"geodesic is not orthogonal to {L.name} (residual {res:.3g})")

    speed = float(metric.F(x0, v0))
    n, k = metric.dim, L.dim
    g = np.asarray(metric.g(x0, v0))
    shape = shape_operator(metric, L, s, v0 / speed, tol)
    j0 = np.zeros((n, n - 1))
    j0p = np.zeros((n, n - 1))
    j0[:, :k] = basis
    j0p[:, :k] = speed * basis @ shape.S
    rest = linalg.null_space(np.column_stack([basis, v0]).T @ g)
    j0p[:, k:] = linalg.g_orthonormalize(g, rest)
    fields = integrate_jacobi_fields(metric, geo, j0, j0p, t0, tol)
    logger.debug("L-Jacobi basis along %s: %d tangential, %d normal fields", geo, k, n - 1 - k)
    return SelfAdjointSpace(geo, fields, 'W', t0)


def variation_initial_data(metric: FinslerMetric, L: SubmanifoldPatch, geo: GeodesicPath, beta: Callable,
                           tol: Tolerances = None) -> tuple:
    """J(t0) and J'(t0) of the variation through the curve ``beta`` in L.

    J(t0) = d/dtau L(beta(tau)) and J'(t0) = nabla_{J(t0)} of the continued
    normal field, both at tau = 0.
    """

    t0 = geo.t_span[0]
    x0, v0 = geo.value_and_rate(t0)
    speed = float(metric.F(x0, v0))
    tau = jnp.asarray(0.0)
    s0, sdot = (np.asarray(a) for a in jax.jvp(lambda u: jnp.atleast_1d(beta(u)), (tau,), (jnp.ones_like(tau),)))
    ext = NormalExtension(metric, L, s0, v0 / speed, tol)
    return L.tangent_basis(s0) @ sdot, speed * ext.covariant(s0) @ sdot


def jacobi_by_variation(metric: FinslerMetric, L: SubmanifoldPatch, geo: GeodesicPath, beta: Callable,
                        tol: Tolerances = None) -> JacobiField:
    """The variation field of the L-orthogonal geodesics over a curve in L.

    Geodesics start at L(beta(tau)) with initial velocity the continued
    normal field, scaled to the speed of ``geo``. The tau-derivative at 0 is
    a central difference with step h and h/2 combined by one Richardson
    extrapolation step; all four neighbours are one stacked integration.

    Parameters
    ----------
    beta : callable
        tau -> parameter of L, traceable by JAX, beta(0) the footpoint of
        ``geo``.

    Raises
    ------
    NoConvergence
        If the normal field cannot be continued along beta.
    """

    tol = resolve(tol)
    t0, t1 = geo.t_span
    x0, v0 = geo.value_and_rate(t0)
    speed = float(metric.F(x0, v0))
    s0 = np.atleast_1d(np.asarray(beta(0.0), dtype=float))
    if np.max(np.abs(L(s0) - x0)) > 1e-9 * max(1.0, np.max(np.abs(x0))):
        raise ValueError(f"beta(0) is not the footpoint of the geodesic: {L(s0)} vs {x0}")
    ext = NormalExtension(metric, L, s0, v0 / speed, tol)

    h = tol.variation_step
    taus = np.array([h, -h, h / 2, -h / 2])
    xs, vs = [], []
    for tau in taus:
        s = np.atleast_1d(np.asarray(beta(float(tau)), dtype=float))
        xs.append(L(s))
        vs.append(speed * ext(s))
    paths = integrate_geodesics(metric, np.array(xs), np.array(vs), (0.0, t1 - t0), tol)

    def combine(values):
        d_h = (values[0] - values[1]) / (2 * h)
        d_half = (values[2] - values[3]) / h
        return (4.0 * d_half - d_h) / 3.0

    def sampler(t):
        u = t - t0
        states = [p.state(u) for p in paths]
        n = metric.dim
        j = combine([y[:n] for y in states])
        jd = combine([y[n:] for y in states])
        x, v = geo.value_and_rate(t)
        return j, jd, jd + np.asarray(metric.nonlinear(x, v)) @ j

    return JacobiField(geo, sampler)


@dataclasses.dataclass
class FocalReport:
    """Focal instants of a self-adjoint space.

    Attributes
    ----------
    instants : list
        (t, multiplicity) pairs in increasing t.
    ts : np.ndarray
        Sample instants of the determinant trace.
    det : np.ndarray
        det[J_1 ... J_{n-1} | gamma'] at ``ts``.
    """

    instants: list
    ts: np.ndarray
    det: np.ndarray

    def to_dict(self) -> dict:
        return {'instants': [[t, m] for t, m in self.instants]}


def _basis_determinant(space: SelfAdjointSpace, t: float) -> float:
    v = space.along.velocity(t)
    return float(np.linalg.det(np.column_stack([space.matrix(t), v])))


def multiplicity(matrix: np.ndarray, ratio: float, scale: float) -> int:
    """Rank deficiency of ``matrix``; ``scale`` is used when it vanishes entirely."""
    s = linalg.singular_values(matrix)
    ref = s[0] if s[0] > ratio * scale else scale
    return int(matrix.shape[1] - np.sum(s > ratio * ref))


def detect_focal_points(space: SelfAdjointSpace, window: tuple = None, tol: Tolerances = None) -> FocalReport:
    """Instants where the fields of a full L-Jacobi basis become dependent.

    Zeros of det[J_1 ... J_{n-1} | gamma'] are bracketed on a uniform sample
    of the window and refined by Brent's method; zeros of even order are
    found as near-zero minima of |det|. The multiplicity is the rank
    deficiency of [J_1 ... J_{n-1}] at the instant. Instants at the window
    ends are not reported.

    Raises
    ------
    ValueError
        If the space does not have n - 1 fields.
    WindowDegenerate
        If the determinant is negligible on the whole window.
    """

    tol = resolve(tol)
    n = space.along.dim
    if space.dim != n - 1:
        raise ValueError(f"focal detection needs n - 1 = {n - 1} fields, got {space.dim}")
    a, b = sorted(space.along.t_span) if window is None else sorted(window)
    ts = np.linspace(a, b, tol.focal_samples)
    f = lambda t: _basis_determinant(space, t)
    det = np.array([f(t) for t in ts])

    norms = np.array([[np.linalg.norm(space[i](t)) for i in range(space.dim)] for t in ts])
    speed = max(np.linalg.norm(space.along.velocity(t)) for t in (a, b))
    scale = float(np.prod(np.max(norms, axis=0)) * speed)
    if scale == 0 or np.max(np.abs(det)) < tol.rank_ratio * scale:
        raise WindowDegenerate(f"determinant negligible on [{a:.6g}, {b:.6g}] (max {np.max(np.abs(det)):.3g})")

    zeros = roots.bisect_zeros(f, ts, det, tol.focal_xtol)
    zeros += roots.touching_zeros(f, ts, det, tol.rank_ratio * scale, tol.focal_xtol)
    edge = 10 * tol.focal_xtol
    zeros = [t for t in roots.merge(zeros, 10 * tol.focal_xtol) if a + edge < t < b - edge]

    col_scale = float(np.max(norms))
    instants = []
    for t in zeros:
        mult = multiplicity(space.matrix(t), tol.rank_ratio, col_scale)
        instants.append((t, max(1, mult)))
    logger.info("focal instants on [%g, %g]: %s", a, b, ", ".join(f"{t:.9g} (x{m})" for t, m in instants) or "none")
    return FocalReport(instants, ts, det)
