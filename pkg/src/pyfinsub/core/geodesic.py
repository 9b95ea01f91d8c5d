"""Geodesics, orthogonality to submanifolds and the endpoint map."""

import logging
from functools import cached_property
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np

from ..config import Tolerances, resolve
from ..errors import NoConvergence
from ..math import linalg, ode
from ..math.autodiff import kernel
from .geometry.patch import SubmanifoldPatch
from .geometry.point import as_sample
from .metric import FinslerMetric

logger = logging.getLogger(__name__)


class GeodesicPath:
    """A densely sampled geodesic.

    Built by :func:`integrate_geodesic` or :func:`integrate_geodesics`;
    several paths may share one trajectory of a stacked system.

    Parameters
    ----------
    metric : FinslerMetric
        The metric the curve is a geodesic of.
    trajectory : ode.Trajectory
        The dense solution.
    index : int
        Which stacked geodesic of the trajectory this is.

    Attributes
    ----------
    tracking_error : float or None
        Set on horizontal lifts: how far the projection strays from the
        base geodesic.
    """

    def __init__(self, metric: FinslerMetric, trajectory: ode.Trajectory, index: int = 0):
        self._metric = metric
        self.tracking_error = None
        self._trajectory = trajectory
        n = metric.dim
        self._rows = slice(2 * n * index, 2 * n * (index + 1))
        self._n = n

    def __str__(self) -> str:
        a, b = self.t_span
        return "geodesic of {} on [{:.6g}, {:.6g}] from {}".format(self._metric.name, a, b, self.position(a))

    @property
    def metric(self) -> FinslerMetric:
        return self._metric

    @property
    def dim(self) -> int:
        return self._n

    @property
    def t_span(self) -> tuple:
        return self._trajectory.t_span

    @property
    def ts(self) -> np.ndarray:
        """Integrator nodes."""
        return self._trajectory.ts

    def contains(self, t: float, slack: float = 1e-12) -> bool:
        a, b = sorted(self.t_span)
        return a - slack <= t <= b + slack

    def state(self, t):
        """(x, v) stacked, shape (2n,) or (2n, len(t))."""
        return self._trajectory(t)[self._rows]

    def position(self, t) -> np.ndarray:
        return self.state(t)[:self._n]

    def velocity(self, t) -> np.ndarray:
        return self.state(t)[self._n:]

    def acceleration(self, t) -> np.ndarray:
        y = self.state(t)
        return -2.0 * np.asarray(self._metric.spray(y[:self._n], y[self._n:]))

    def value_and_rate(self, t):
        y = self.state(t)
        return y[:self._n], y[self._n:]

    @cached_property
    def speed(self) -> float:
        """F of the initial velocity."""
        a = self.t_span[0]
        return float(self._metric.F(self.position(a), self.velocity(a)))

    @cached_property
    def speed_drift(self) -> float:
        """max over nodes of |F(gamma'(t)) - speed|."""
        ys = self._trajectory.ys[:, self._rows]
        f = np.asarray(jax.vmap(self._metric.F)(ys[:, :self._n], ys[:, self._n:]))
        return float(np.max(np.abs(f - self.speed)))

    def samples(self, ts=None) -> np.ndarray:
        """Rows (t, x1..xn, v1..vn, F(v)) at ``ts`` (default: nodes)."""
        ts = self.ts if ts is None else np.asarray(ts, dtype=float)
        y = self.state(ts).T
        f = np.asarray(jax.vmap(self._metric.F)(y[:, :self._n], y[:, self._n:]))
        return np.column_stack([ts, y, f])


def integrate_geodesic(metric: FinslerMetric, x0, v0, t_span: tuple, tol: Tolerances = None) -> GeodesicPath:
    """Solve x'' = -2 G(x, x') from (x0, v0) over ``t_span``.

    Parameters
    ----------
    metric : FinslerMetric
        The metric.
    x0, v0 : array-like
        Initial point and velocity.
    t_span : tuple
        (a, b); b < a integrates backward.
    tol : Tolerances, optional
        Integrator tolerances.

    Returns
    -------
    GeodesicPath
        The dense geodesic.

    Raises
    ------
    ConeViolation
        If v0 is inside the smoothness guard.
    StepFailure
        If the integrator cannot advance.
    """

    s = as_sample(x0, v0)
    metric.guard(s.x, s.v, tol)
    rhs = metric.geodesic_rhs
    traj = ode.integrate(lambda t, y: np.asarray(rhs(y)), t_span, np.concatenate([s.x, s.v]), tol)
    geo = GeodesicPath(metric, traj)
    logger.debug("geodesic from %s: %d steps, speed drift %.3g", s.base, traj.steps, geo.speed_drift)
    return geo


def integrate_geodesics(metric: FinslerMetric, x0s, v0s, t_span: tuple, tol: Tolerances = None) -> list:
    """Integrate several geodesics as one stacked system.

    All geodesics share the adaptive step sequence, so differences between
    neighbouring geodesics are differences of one smooth numerical flow.

    Returns
    -------
    list of GeodesicPath
        One path per row of ``x0s``.
    """

    x0s = np.atleast_2d(np.asarray(x0s, dtype=float))
    v0s = np.atleast_2d(np.asarray(v0s, dtype=float))
    for x, v in zip(x0s, v0s):
        metric.guard(x, v, tol)
    m, n = x0s.shape
    rhs = metric.geodesic_rhs_batch
    y0 = np.concatenate([x0s, v0s], axis=1).reshape(-1)
    traj = ode.integrate(lambda t, y: np.asarray(rhs(y.reshape(m, 2 * n))).reshape(-1), t_span, y0, tol)
    return [GeodesicPath(metric, traj, i) for i in range(m)]


def is_orthogonal(metric: FinslerMetric, s, tangent_basis, v=None, tol: Tolerances = None) -> tuple:
    """Whether v is g_v-orthogonal to the span of ``tangent_basis``.

    Returns
    -------
    tuple
        (bool, residual) with residual = max_u |g_v(v, u)| / (F(v) |u|_g).
    """

    tol = resolve(tol)
    s = as_sample(s, v)
    f = metric.guard(s.x, s.v, tol)
    basis = np.asarray(tangent_basis, dtype=float).reshape(s.dim, -1)
    if basis.shape[1] == 0:
        return True, 0.0
    g = np.asarray(metric.g(s.x, s.v))
    pairing = np.abs(s.v @ g @ basis)
    norms = np.sqrt(np.einsum('ia,ij,ja->a', basis, g, basis))
    residual = float(np.max(pairing / (f * norms)))
    return residual < tol.orthogonality, residual


def normal_cone_sample(metric: FinslerMetric, p, tangent_basis, seed, tol: Tolerances = None) -> np.ndarray:
    """A unit vector of the normal cone of a submanifold, near ``seed``.

    Newton iteration with minimum-norm steps on the system
    g_v(v, u_i) = 0, F(v) = 1, halving the step when the residual grows.

    Parameters
    ----------
    metric : FinslerMetric
        The metric.
    p : array-like
        The footpoint.
    tangent_basis : array-like
        n x k tangent vectors of the submanifold at p.
    seed : array-like
        Starting direction.

    Returns
    -------
    np.ndarray
        v with F(v) = 1 orthogonal to the submanifold.

    Raises
    ------
    NoConvergence
        If the iteration cap is hit.
    """

    tol = resolve(tol)
    p = np.asarray(p, dtype=float)
    basis = np.asarray(tangent_basis, dtype=float).reshape(p.size, -1)
    v = np.asarray(seed, dtype=float)
    v = v / float(metric.F(p, v))

    def residual(v):
        return np.append(np.asarray(metric.dE(p, v)) @ basis, float(metric.F(p, v)) - 1.0)

    res = residual(v)
    for i in range(tol.newton_max_iter):
        err = float(np.max(np.abs(res)))
        if err <= tol.newton_tol:
            logger.debug("normal_cone_sample converged in %d iterations", i)
            return v
        g = np.asarray(metric.g(p, v))
        jac = np.vstack([basis.T @ g, g @ v / float(metric.F(p, v))])
        step = np.linalg.lstsq(jac, res, rcond=None)[0]
        damping = 1.0
        while True:
            trial = v - damping * step
            trial_res = residual(trial)
            trial_err = float(np.max(np.abs(trial_res)))
            if trial_err < err or trial_err <= 10 * tol.newton_tol or damping < 1e-6:
                break
            damping *= 0.5
        v, res = trial, trial_res
    raise NoConvergence(f"normal_cone_sample did not converge at p = {p} from seed {np.asarray(seed)}, "
                        f"residual {np.max(np.abs(res)):.3g}")


class NormalExtension:
    """A unit normal field along a patch continuing a given normal.

    The field is defined implicitly by tan(g_xi(xi, .)) = 0, F(xi) = 1 and
    a fixed component along the Euclidean complement of span(T_L, xi0), so
    it is smooth in the parameter and its derivative follows from the
    implicit function theorem.

    Parameters
    ----------
    metric : FinslerMetric
        The metric.
    patch : SubmanifoldPatch
        The submanifold.
    s0 : array-like
        Parameter of the footpoint.
    xi0 : array-like
        Unit normal at the footpoint.
    """

    def __init__(self, metric: FinslerMetric, patch: SubmanifoldPatch, s0, xi0, tol: Tolerances = None):
        self._metric = metric
        self._patch = patch
        self._tol = resolve(tol)
        self._s0 = np.asarray(s0, dtype=float).reshape(patch.dim)
        self._xi0 = np.asarray(xi0, dtype=float)
        basis = np.column_stack([patch.tangent_basis(self._s0), self._xi0])
        self._complement = linalg.complement(basis, patch.ambient)

    @property
    def patch(self) -> SubmanifoldPatch:
        return self._patch

    @cached_property
    def _system(self):
        param = self._patch.param
        energy = self._metric.energy
        func = self._metric.func
        comp = jnp.asarray(self._complement)
        xi0 = jnp.asarray(self._xi0)

        def phi(s, xi):
            x = param(s)
            tangents = jax.jacfwd(param)(s).reshape(x.size, -1)
            de = jax.grad(energy, argnums=1)(x, xi)
            return jnp.concatenate([de @ tangents, jnp.atleast_1d(func(x, xi) - 1.0), comp.T @ (xi - xi0)])

        return kernel(phi), kernel(jax.jacfwd(phi, argnums=0)), kernel(jax.jacfwd(phi, argnums=1))

    def __call__(self, s, start=None) -> np.ndarray:
        """The unit normal at parameter ``s``.

        Raises
        ------
        NoConvergence
            If Newton's method fails, usually because ``s`` is too far from
            the footpoint.
        """

        phi, _, phi_xi = self._system
        s = jnp.asarray(s, dtype=float).reshape(self._patch.dim)
        xi = self._xi0 if start is None else np.asarray(start, dtype=float)
        for i in range(self._tol.newton_max_iter):
            res = np.asarray(phi(s, xi))
            if np.max(np.abs(res)) <= self._tol.newton_tol:
                return xi
            xi = xi - np.linalg.solve(np.asarray(phi_xi(s, xi)), res)
        raise NoConvergence(f"normal continuation failed at s = {np.asarray(s)}, residual {np.max(np.abs(res)):.3g}")

    def derivative(self, s, xi=None) -> np.ndarray:
        """d xi / d s, shape (n, k)."""
        _, phi_s, phi_xi = self._system
        s = jnp.asarray(s, dtype=float).reshape(self._patch.dim)
        xi = self(s) if xi is None else xi
        return -np.linalg.solve(np.asarray(phi_xi(s, xi)), np.asarray(phi_s(s, xi)).reshape(-1, self._patch.dim))

    def covariant(self, s) -> np.ndarray:
        """Columns nabla^xi_{T_a} xi = d xi/d s_a + N(xi) T_a, shape (n, k)."""
        xi = self(s)
        x = self._patch(s)
        tangents = self._patch.tangent_basis(s)
        return self.derivative(s, xi) + np.asarray(self._metric.nonlinear(x, xi)) @ tangents


class EndpointMap:
    """The endpoint map p -> gamma_{xi_p}(r) of a normal field on a patch.

    Parameters
    ----------
    metric : FinslerMetric
        The metric.
    patch : SubmanifoldPatch
        The submanifold L.
    xi : callable
        ``xi(s)`` the normal field over parameters.
    r : float
        The geodesic parameter; negative r integrates backward.
    normalize : bool
        Rescale xi to F(xi) = 1 before shooting.
    check : bool
        Verify orthogonality of xi at every evaluated parameter.
    """

    def __init__(self, metric: FinslerMetric, patch: SubmanifoldPatch, xi: Callable, r: float,
                 normalize: bool = True, check: bool = True, tol: Tolerances = None):
        self._metric = metric
        self._patch = patch
        self._xi = xi
        self._r = float(r)
        self._normalize = normalize
        self._check = check
        self._tol = resolve(tol)

    @property
    def r(self) -> float:
        return self._r

    def initial(self, s) -> tuple:
        """Footpoint and (normalized) initial velocity at parameter ``s``."""
        x = self._patch(s)
        v = np.asarray(self._xi(s), dtype=float)
        if self._normalize:
            v = v / float(self._metric.F(x, v))
        if self._check:
            ok, res = is_orthogonal(self._metric, x, self._patch.tangent_basis(s), v, tol=self._tol)
            if not ok:
                raise ValueError(f"normal field not orthogonal to {self._patch.name} at s = {np.asarray(s)} "
                                 f"(residual {res:.3g})")
        return x, v

    def __call__(self, s) -> np.ndarray:
        return self.images(np.atleast_2d(np.asarray(s, dtype=float).reshape(1, -1)))[0]

    def paths(self, params, r: float = None) -> list:
        """Stacked geodesics of a batch of parameters (rows) over [0, r].

        One integration serves every r' between 0 and r through dense
        output; ``r`` defaults to the map's own parameter.
        """

        r = self._r if r is None else float(r)
        starts = [self.initial(s) for s in np.asarray(params, dtype=float).reshape(-1, self._patch.dim)]
        xs = np.array([a for a, _ in starts])
        vs = np.array([b for _, b in starts])
        return integrate_geodesics(self._metric, xs, vs, (0.0, r), self._tol)

    def images(self, params) -> np.ndarray:
        """Endpoints of a batch of parameters (rows), shape (m, n)."""
        if self._r == 0.0:
            return np.array([self.initial(s)[0] for s in np.asarray(params, dtype=float).reshape(-1, self._patch.dim)])
        return np.array([p.position(self._r) for p in self.paths(params)])


def endpoint_map(metric: FinslerMetric, patch: SubmanifoldPatch, xi: Callable, r: float,
                 tol: Tolerances = None, normalize: bool = True) -> EndpointMap:
    """The endpoint map eta^r_xi on ``patch``, see :class:`EndpointMap`."""
    return EndpointMap(metric, patch, xi, r, normalize=normalize, tol=tol)
