"""Finsler metrics and the tensors derived from them.

A metric is a scalar function ``F(x, v)`` written with ``jax.numpy``. The
fundamental tensor, the Cartan tensor, the spray and every curvature term
are nested forward-mode derivatives of ``E = F**2 / 2``, compiled once per
metric and reused.
"""

import dataclasses
import itertools
import logging
from enum import Enum
from functools import cached_property
from typing import Callable, Optional

import jax
import jax.numpy as jnp
import numpy as np

from ..config import Tolerances, resolve
from ..errors import ConeViolation, DegenerateTensor, NoConvergence, SingularTensor, WindTooStrong
from ..math.autodiff import derivative, kernel
from .geometry.point import TangentSample, as_sample

logger = logging.getLogger(__name__)


class MetricKind(Enum):
    RIEMANNIAN = 'riemannian'
    RANDERS = 'randers'
    CUSTOM = 'custom'


class FinslerMetric:
    """A chart-local Finsler metric.

    Parameters
    ----------
    dim : int
        Dimension n of the manifold, n >= 2.
    func : callable
        ``func(x, v)`` returning F as a JAX scalar. Must be positively
        1-homogeneous in v and smooth away from v = 0.
    kind : MetricKind
        Tag used for reporting and for shortcuts (reverse of a Randers metric).
    name : str
        Label used in reports.
    zermelo : ZermeloData, optional
        The navigation data of a Randers metric.

    Attributes
    ----------
    dim : int
        Dimension of the manifold.
    kind : MetricKind
        Metric family.
    """

    def __init__(self, dim: int, func: Callable, kind: MetricKind = MetricKind.CUSTOM,
                 name: str = "F", zermelo: "ZermeloData" = None):
        if dim < 2:
            raise ValueError(f"metric dimension must be at least 2, got {dim}")
        self._dim = dim
        self._func = func
        self._kind = kind
        self._name = name
        self._zermelo = zermelo
        self._reverse = None

    def __str__(self) -> str:
        return "{} ({}, dim {})".format(self._name, self._kind.value, self._dim)

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def kind(self) -> MetricKind:
        return self._kind

    @property
    def name(self) -> str:
        return self._name

    @property
    def zermelo(self) -> Optional["ZermeloData"]:
        return self._zermelo

    @property
    def func(self) -> Callable:
        return self._func

    def reverse(self) -> "FinslerMetric":
        """The reverse metric, F~(x, v) = F(x, -v).

        Built once; the reverse of the reverse is the metric itself.
        """

        if self._reverse is None:
            if self._zermelo is not None:
                rev = randers_from_zermelo(self._zermelo.reversed(), name=self._name + "~", check=False)
            else:
                f = self._func
                rev = FinslerMetric(self._dim, lambda x, v: f(x, -v), self._kind, self._name + "~")
            rev._reverse = self
            self._reverse = rev
        return self._reverse

    def energy(self, x, v):
        return 0.5 * self._func(x, v) ** 2

    # compiled kernels, all take (x, v) as float64 arrays

    @cached_property
    def F(self):
        return kernel(self._func)

    @cached_property
    def dE(self):
        return kernel(derivative(self.energy, 'v'))

    @cached_property
    def g(self):
        return kernel(derivative(self.energy, 'vv'))

    @cached_property
    def cartan(self):
        hess3 = derivative(self.energy, 'vvv')
        return kernel(lambda x, v: 0.5 * hess3(x, v))

    @cached_property
    def dg(self):
        """(d g / dx, d g / dv), trailing axis is the differentiation index."""
        gx = derivative(self.energy, 'vvx')
        gv = derivative(self.energy, 'vvv')
        return kernel(lambda x, v: (gx(x, v), gv(x, v)))

    def _spray(self, x, v):
        g = derivative(self.energy, 'vv')(x, v)
        mixed = derivative(self.energy, 'vx')(x, v)
        dx = derivative(self.energy, 'x')(x, v)
        return 0.5 * jnp.linalg.solve(g, mixed @ v - dx)

    def _nonlinear(self, x, v):
        return jax.jacfwd(self._spray, argnums=1)(x, v)

    @cached_property
    def spray(self):
        return kernel(self._spray)

    @cached_property
    def nonlinear(self):
        """N^i_k = d G^i / d v^k."""
        return kernel(self._nonlinear)

    @cached_property
    def spray_x(self):
        return kernel(jax.jacfwd(self._spray, argnums=0))

    @cached_property
    def geodesic_rhs(self):
        """Right-hand side of the first-order geodesic system on y = (x, v)."""
        n = self._dim

        def rhs(y):
            x, v = y[:n], y[n:]
            return jnp.concatenate([v, -2.0 * self._spray(x, v)])

        return kernel(rhs)

    @cached_property
    def geodesic_rhs_batch(self):
        """Geodesic right-hand side on a stack of states, shape (m, 2n)."""
        n = self._dim

        def rhs(y):
            x, v = y[:n], y[n:]
            return jnp.concatenate([v, -2.0 * self._spray(x, v)])

        return kernel(jax.vmap(rhs))

    @cached_property
    def jacobi_rhs(self):
        """Geodesic system co-evolved with its linearization.

        State is (x, v, J, dJ/dt) with J of shape (n, m), flattened. The
        linearized spray equation J'' = -2 dG/dx J - 2 N dJ/dt holds in chart
        derivatives; covariant derivatives are recovered as dJ/dt + N J.
        """

        n = self._dim
        spray_x = jax.jacfwd(self._spray, argnums=0)

        def rhs(y):
            x, v = y[:n], y[n:2 * n]
            rest = y[2 * n:].reshape(2, n, -1)
            j, jd = rest[0], rest[1]
            jdd = -2.0 * spray_x(x, v) @ j - 2.0 * self._nonlinear(x, v) @ jd
            return jnp.concatenate([v, -2.0 * self._spray(x, v), jd.reshape(-1), jdd.reshape(-1)])

        return kernel(rhs)

    @cached_property
    def christoffel(self):
        def gamma(x, v):
            gx = derivative(self.energy, 'vvx')(x, v)
            gv = derivative(self.energy, 'vvv')(x, v)
            nl = self._nonlinear(x, v)
            # delta g[a, b, k] = dg_ab/dx^k - N^m_k dg_ab/dv^m
            dg = gx - jnp.einsum('abm,mk->abk', gv, nl)
            t = dg + jnp.transpose(dg, (0, 2, 1)) - jnp.transpose(dg, (2, 0, 1))
            ginv = jnp.linalg.inv(derivative(self.energy, 'vv')(x, v))
            return 0.5 * jnp.einsum('ls,sjk->ljk', ginv, t)

        return kernel(gamma)

    @cached_property
    def jacobi_operator(self):
        """R^i_k of the spray at (x, v)."""

        def operator(x, v):
            gs = self._spray(x, v)
            nl = self._nonlinear(x, v)
            gx = jax.jacfwd(self._spray, argnums=0)(x, v)
            nx = jax.jacfwd(self._nonlinear, argnums=0)(x, v)
            nv = jax.jacfwd(self._nonlinear, argnums=1)(x, v)
            return (2.0 * gx - jnp.einsum('ikj,j->ik', nx, v)
                    + 2.0 * jnp.einsum('ikj,j->ik', nv, gs) - nl @ nl)

        return kernel(operator)

    @cached_property
    def batch(self):
        """Vectorized (F, g, C) over stacks of samples."""
        f = jax.vmap(self._func)
        g = jax.vmap(derivative(self.energy, 'vv'))
        hess3 = jax.vmap(derivative(self.energy, 'vvv'))
        return kernel(lambda x, v: (f(x, v), g(x, v), 0.5 * hess3(x, v)))

    def guard(self, x, v, tol: Tolerances = None) -> float:
        """F(x, v), raising ConeViolation inside the smoothness guard.

        Returns
        -------
        float
            F(x, v).
        """

        tol = resolve(tol)
        f = float(self.F(x, v))
        scale = max(1.0, float(np.max(np.abs(v))))
        if not f > tol.cone_delta * scale:
            raise ConeViolation(f"F(v) = {f:.3g} is inside the smoothness guard at v = {np.asarray(v)}")
        return f


@dataclasses.dataclass(frozen=True)
class ZermeloData:
    """Navigation data: a Riemannian metric ``h`` and a wind ``W``.

    Attributes
    ----------
    dim : int
        Dimension.
    wind : callable
        ``wind(x)`` returning W as a JAX vector.
    h : callable, optional
        ``h(x)`` returning the metric matrix. None means Euclidean.
    source : dict, optional
        The scenario description the data was built from, kept for output.
    """

    dim: int
    wind: Callable
    h: Optional[Callable] = None
    source: Optional[dict] = None

    def matrix(self, x):
        if self.h is None:
            return jnp.eye(self.dim)
        return self.h(x)

    def wind_norm2(self, x) -> float:
        """h(W, W) at x."""
        w = self.wind(x)
        return float(w @ self.matrix(x) @ w)

    def reversed(self) -> "ZermeloData":
        """Data of the reverse metric: same h, opposite wind."""
        wind = self.wind
        return ZermeloData(self.dim, lambda x: -wind(x), self.h, None)


@dataclasses.dataclass(frozen=True)
class FundamentalTensor:
    at: TangentSample
    g: np.ndarray


@dataclasses.dataclass(frozen=True)
class CartanTensorValue:
    at: TangentSample
    C: np.ndarray


@dataclasses.dataclass
class ValidationReport:
    """Worst-case residuals of the metric axioms over a sample set.

    Attributes
    ----------
    samples : int
        Number of samples evaluated.
    homogeneity : float
        max |F(lv) - l F(v)| / (l F(v)).
    definiteness : float
        min over samples of lambda_min(g) / lambda_max(g), -inf when g is not
        finite.
    cartan_symmetry : float
        max over slot permutations of |C - C^perm|, relative to max(1, |C|).
    euler_g : float
        max |g_v(v, v) - F(v)^2| / F(v)^2.
    euler_cartan : float
        max |C_v(v, ., .)| / (|v| max(1, |C|)).
    failures : list
        Names of the failed axioms.
    """

    samples: int
    homogeneity: float
    definiteness: float
    cartan_symmetry: float
    euler_g: float
    euler_cartan: float
    failures: list = dataclasses.field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out['passed'] = self.passed
        return out


def riemannian(dim: int, h: Callable = None, name: str = "h") -> FinslerMetric:
    """The Riemannian metric F(v) = sqrt(h(v, v)); ``h=None`` is Euclidean."""
    if h is None:
        func = lambda x, v: jnp.sqrt(v @ v)
    else:
        func = lambda x, v: jnp.sqrt(v @ h(x) @ v)
    return FinslerMetric(dim, func, MetricKind.RIEMANNIAN, name)


def randers_from_zermelo(z: ZermeloData, points=None, name: str = "F", check: bool = True) -> FinslerMetric:
    """The Randers metric solving Zermelo's navigation problem.

    F(v) is the unique positive solution of h(v/F - W, v/F - W) = 1, in
    closed form F = (-h(v, W) + sqrt(h(v, W)^2 + a h(v, v))) / a with
    a = 1 - h(W, W).

    Parameters
    ----------
    z : ZermeloData
        The navigation data.
    points : array-like, optional
        Points (rows) where admissibility h(W, W) < 1 is checked. Defaults to
        the origin.
    name : str
        Label of the metric.
    check : bool
        Set to False to build the metric from inadmissible data, e.g. to
        watch validation fail.

    Returns
    -------
    FinslerMetric
        Of kind RANDERS.

    Raises
    ------
    WindTooStrong
        If h(W, W) >= 1 - 1e-9 at a checked point.
    """

    if check:
        pts = np.zeros((1, z.dim)) if points is None else np.atleast_2d(points)
        for p in pts:
            w2 = z.wind_norm2(jnp.asarray(p, dtype=float))
            if w2 >= 1.0 - 1e-9:
                raise WindTooStrong(f"h(W, W) = {w2:.6g} >= 1 at x = {p}")

    def func(x, v):
        h = z.matrix(x)
        w = z.wind(x)
        a = 1.0 - w @ h @ w
        b = v @ h @ w
        return (-b + jnp.sqrt(b * b + a * (v @ h @ v))) / a

    return FinslerMetric(z.dim, func, MetricKind.RANDERS, name, zermelo=z)


def eval_F(metric: FinslerMetric, s, v=None) -> float:
    """F at a tangent sample; 0 for the zero vector.

    Parameters
    ----------
    metric : FinslerMetric
        The metric.
    s : TangentSample or array-like
        The sample, or the footpoint when ``v`` is given.
    v : array-like, optional
        The tangent vector.

    Returns
    -------
    float
        F(x, v) >= 0.

    Raises
    ------
    NonFiniteInput
        If the sample is not finite.
    """

    s = as_sample(s, v)
    if not np.any(s.v):
        return 0.0
    return float(metric.F(s.x, s.v))


def fundamental_tensor(metric: FinslerMetric, s, v=None, tol: Tolerances = None) -> FundamentalTensor:
    """g_v, half the v-Hessian of F^2.

    Raises
    ------
    ConeViolation
        If v is inside the smoothness guard.
    DegenerateTensor
        If g_v is not positive definite.
    """

    s = as_sample(s, v)
    metric.guard(s.x, s.v, tol)
    g = np.asarray(metric.g(s.x, s.v))
    eig = np.linalg.eigvalsh(g) if np.all(np.isfinite(g)) else np.array([np.nan])
    if not eig[0] > 0:
        raise DegenerateTensor(f"fundamental tensor not positive definite at {s}, smallest eigenvalue {eig[0]:.3g}")
    return FundamentalTensor(s, g)


def cartan_tensor(metric: FinslerMetric, s, v=None, tol: Tolerances = None) -> CartanTensorValue:
    """C_v, the third v-derivative of F^2 / 4.

    Raises
    ------
    ConeViolation
        If v is inside the smoothness guard.
    """

    s = as_sample(s, v)
    metric.guard(s.x, s.v, tol)
    return CartanTensorValue(s, np.asarray(metric.cartan(s.x, s.v)))


def checked_inverse(metric: FinslerMetric, x, v, tol: Tolerances = None) -> np.ndarray:
    """g_v after the conditioning test used by every solve with g_v.

    Raises
    ------
    SingularTensor
        If the condition number of g_v exceeds ``condition_max``.
    """

    tol = resolve(tol)
    g = np.asarray(metric.g(x, v))
    cond = np.linalg.cond(g)
    if not cond < tol.condition_max:
        raise SingularTensor(f"fundamental tensor condition number {cond:.3g} at x = {np.asarray(x)}, v = {np.asarray(v)}")
    return g


def validate_metric(metric: FinslerMetric, samples, tol: Tolerances = None, seed: int = 0) -> ValidationReport:
    """Check the Finsler axioms on a sample set.

    Parameters
    ----------
    metric : FinslerMetric
        The metric.
    samples : list of TangentSample, or a pair of arrays (xs, vs)
        The samples, nonempty.
    tol : Tolerances, optional
        Pass thresholds (``homogeneity``, ``symmetry``, ``euler``).
    seed : int
        Seed of the random homogeneity factors.

    Returns
    -------
    ValidationReport
        Worst-case residuals and the list of failed axioms. Never raises on
        a failed axiom.
    """

    tol = resolve(tol)
    if isinstance(samples, tuple):
        xs, vs = (np.atleast_2d(np.asarray(a, dtype=float)) for a in samples)
    else:
        samples = list(samples)
        xs = np.array([s.x for s in samples])
        vs = np.array([s.v for s in samples])
    if len(xs) == 0:
        raise ValueError("validate_metric needs at least one sample")

    lam = np.random.default_rng(seed).uniform(0.25, 4.0, size=len(xs))
    f, g, c = (np.asarray(a) for a in metric.batch(xs, vs))
    f_scaled = np.asarray(metric.batch(xs, lam[:, None] * vs)[0])

    with np.errstate(invalid='ignore', divide='ignore'):
        homog = np.abs(f_scaled - lam * f) / (lam * f)
        definite = np.full(len(xs), -np.inf)
        finite = np.all(np.isfinite(g), axis=(1, 2))
        if np.any(finite):
            eig = np.linalg.eigvalsh(g[finite])
            definite[finite] = eig[:, 0] / np.max(np.abs(eig), axis=1)
        cmax = np.maximum(1.0, np.max(np.abs(c), axis=(1, 2, 3)))
        sym = np.zeros(len(xs))
        for perm in itertools.permutations(range(3)):
            diff = np.abs(c - np.transpose(c, (0,) + tuple(p + 1 for p in perm)))
            sym = np.maximum(sym, np.max(diff, axis=(1, 2, 3)) / cmax)
        euler_g = np.abs(np.einsum('si,sij,sj->s', vs, g, vs) - f ** 2) / f ** 2
        euler_c = (np.max(np.abs(np.einsum('si,sijk->sjk', vs, c)), axis=(1, 2))
                   / (np.linalg.norm(vs, axis=1) * cmax))

    def worst(values, largest=True):
        if not np.all(np.isfinite(values)):
            return np.inf if largest else -np.inf
        return float(np.max(values) if largest else np.min(values))

    report = ValidationReport(
        samples=len(xs),
        homogeneity=worst(homog),
        definiteness=worst(definite, largest=False),
        cartan_symmetry=worst(sym),
        euler_g=worst(euler_g),
        euler_cartan=worst(euler_c),
    )
    if not report.homogeneity < tol.homogeneity:
        report.failures.append('homogeneity')
    if not report.definiteness > 0:
        report.failures.append('definiteness')
    if not report.cartan_symmetry < tol.symmetry:
        report.failures.append('cartan_symmetry')
    if not report.euler_g < tol.euler:
        report.failures.append('euler_g')
    if not report.euler_cartan < tol.euler:
        report.failures.append('euler_cartan')
    logger.info("validated %s on %d samples: %s", metric, len(xs),
                "pass" if report.passed else "fail ({})".format(", ".join(report.failures)))
    return report


def legendre_inverse(metric: FinslerMetric, x, covector, tol: Tolerances = None, seed=None) -> np.ndarray:
    """The vector v with g_v(v, .) = covector.

    Newton iteration on dE/dv(x, v) = covector, halving the step whenever
    the residual grows.

    Parameters
    ----------
    metric : FinslerMetric
        The metric.
    x : array-like
        The footpoint.
    covector : array-like
        A nonzero covector.
    seed : array-like, optional
        Starting direction; defaults to the covector itself.

    Returns
    -------
    np.ndarray
        The Legendre preimage, F(v) equals the dual norm of the covector.

    Raises
    ------
    NoConvergence
        If the iteration cap is hit.
    """

    tol = resolve(tol)
    x = np.asarray(x, dtype=float)
    omega = np.asarray(covector, dtype=float)
    scale = float(np.max(np.abs(omega)))
    if scale == 0:
        raise ValueError("legendre_inverse of the zero covector")
    start = omega if seed is None else np.asarray(seed, dtype=float)
    v = np.linalg.solve(np.asarray(metric.g(x, start)), omega)
    res = np.asarray(metric.dE(x, v)) - omega
    for i in range(tol.newton_max_iter):
        err = float(np.max(np.abs(res)))
        if err <= tol.newton_tol * max(1.0, scale):
            logger.debug("legendre_inverse converged in %d iterations", i)
            return v
        step = np.linalg.solve(np.asarray(metric.g(x, v)), res)
        damping = 1.0
        while True:
            trial = v - damping * step
            trial_res = np.asarray(metric.dE(x, trial)) - omega
            trial_err = float(np.max(np.abs(trial_res)))
            if trial_err < err or trial_err <= 10 * tol.newton_tol or damping < 1e-6:
                break
            damping *= 0.5
        v, res = trial, trial_res
    raise NoConvergence(f"legendre_inverse did not converge at x = {x}, residual {np.max(np.abs(res)):.3g}")


def osculating_riemannian(metric: FinslerMetric, field: Callable, name: str = None) -> FinslerMetric:
    """The Riemannian metric g_V(x) = g_{V(x)} of a nonvanishing vector field.

    Parameters
    ----------
    metric : FinslerMetric
        The Finsler metric.
    field : callable
        ``field(x)`` returning V(x) as a JAX vector.

    Returns
    -------
    FinslerMetric
        Of kind RIEMANNIAN. Along integral curves of a geodesic field V its
        geodesics and Jacobi operator agree with those of ``metric``.
    """

    hess = derivative(metric.energy, 'vv')
    return riemannian(metric.dim, lambda x: hess(x, field(x)), name or metric.name + "_V")
