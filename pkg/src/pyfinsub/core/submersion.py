"""Submersions, horizontal lifts, basic fields and transnormality."""

import dataclasses
import logging
from functools import cached_property
from typing import Callable, Optional

import jax
import jax.numpy as jnp
import numpy as np
from scipy.optimize import least_squares

from ..config import Tolerances, resolve
from ..errors import LiftDrift, NoConvergence, RankDeficient
from ..math import linalg
from ..math.autodiff import kernel
from .geodesic import GeodesicPath, integrate_geodesic, is_orthogonal
from .geometry.patch import SubmanifoldPatch
from .jacobi import SelfAdjointSpace, integrate_jacobi_fields
from .metric import FinslerMetric, MetricKind

logger = logging.getLogger(__name__)

# fixed Newton sweeps of the differentiable lift
_LIFT_SWEEPS = 30


class FiberFamily:
    """Explicit parametrization of the fibers of a submersion.

    Parameters
    ----------
    param : callable
        ``param(s, c)`` giving the chart point with fiber parameter ``s``
        (k-vector) on the fiber over the level ``c``.
    dim : int
        Fiber dimension.
    ambient : int
        Manifold dimension.
    box : array-like
        dim x 2 bounds of the fiber parameters.
    name : str
        Label.
    """

    def __init__(self, param: Callable, dim: int, ambient: int, box=None, name: str = "fibers"):
        self._param = param
        self._dim = dim
        self._ambient = ambient
        self._box = np.array(box if box is not None else [[-1.0, 1.0]] * dim, dtype=float).reshape(dim, 2)
        self._name = name

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def box(self) -> np.ndarray:
        return self._box

    @property
    def param(self) -> Callable:
        return self._param

    def plaque(self, c, box=None) -> SubmanifoldPatch:
        """The fiber over the level ``c`` as a patch."""
        c = jnp.asarray(c, dtype=float)
        param = self._param
        label = "{}[{}]".format(self._name, ", ".join(f"{float(v):.6g}" for v in np.atleast_1d(c)))
        return SubmanifoldPatch(lambda s: param(s, c), self._dim, self._ambient,
                                self._box if box is None else box, label)

    def locate(self, c, x) -> np.ndarray:
        """Fiber parameter of the point of the fiber over ``c`` closest to ``x``."""
        plaque = self.plaque(c)
        x = np.asarray(x, dtype=float)
        best = None
        for s0 in plaque.grid(9):
            res = least_squares(lambda s: plaque(s) - x, s0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
            if best is None or res.cost < best.cost:
                best = res
        return best.x


class SubmersionSpec:
    """A candidate submersion pi: R^n -> R^k with its fibers.

    Parameters
    ----------
    dim : int
        n.
    base_dim : int
        k.
    pi : callable
        ``pi(x)`` as a JAX k-vector.
    fibers : FiberFamily, optional
        Parametrization of the regular fibers.
    base_metric : FinslerMetric, optional
        Declared metric of the base.
    singular : callable, optional
        ``singular(x)`` a JAX vector vanishing exactly on the declared
        singular locus.
    name : str
        Label.
    """

    def __init__(self, dim: int, base_dim: int, pi: Callable, fibers: FiberFamily = None,
                 base_metric: FinslerMetric = None, singular: Callable = None, name: str = "pi"):
        self._dim = dim
        self._base_dim = base_dim
        self._pi = pi
        self._fibers = fibers
        self._base_metric = base_metric
        self._singular = singular
        self._name = name

    def __str__(self) -> str:
        return "{}: R^{} -> R^{}".format(self._name, self._dim, self._base_dim)

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def base_dim(self) -> int:
        return self._base_dim

    @property
    def fibers(self) -> Optional[FiberFamily]:
        return self._fibers

    @property
    def base_metric(self) -> Optional[FinslerMetric]:
        return self._base_metric

    @property
    def func(self) -> Callable:
        return self._pi

    @cached_property
    def _map(self):
        return kernel(self._pi)

    @cached_property
    def _jacobian(self):
        return kernel(jax.jacfwd(self._pi))

    def pi(self, x) -> np.ndarray:
        return np.asarray(self._map(jnp.asarray(x, dtype=float)))

    def dpi(self, x) -> np.ndarray:
        """The k x n Jacobian of pi."""
        return np.asarray(self._jacobian(jnp.asarray(x, dtype=float))).reshape(self._base_dim, self._dim)

    def regularity(self, x) -> float:
        """sigma_min / sigma_max of d(pi) at x."""
        s = linalg.singular_values(self.dpi(x))
        return float(s[-1] / s[0]) if s[0] > 0 else 0.0

    def is_regular(self, x, tol: Tolerances = None) -> bool:
        return self.regularity(x) >= resolve(tol).singular_ratio

    def require_regular(self, x, tol: Tolerances = None):
        if not self.is_regular(x, tol):
            raise RankDeficient(f"d{self._name} is rank deficient at x = {np.asarray(x)} "
                                f"(singular value ratio {self.regularity(x):.3g})")

    def vertical(self, x) -> np.ndarray:
        """Basis of ker d(pi) at x, shape (n, n - k) at regular points."""
        return linalg.null_space(self.dpi(x))

    def on_singular_locus(self, x, eps: float = 1e-9) -> bool:
        """Whether x lies on the declared singular locus."""
        if self._singular is None:
            return False
        return float(np.max(np.abs(np.asarray(self._singular(jnp.asarray(x, dtype=float)))))) <= eps

    def plaque_through(self, x) -> tuple:
        """(plaque, parameter) of the fiber through x."""
        if self._fibers is None:
            raise ValueError(f"{self._name} has no fiber parametrization")
        c = self.pi(x)
        return self._fibers.plaque(c), self._fibers.locate(c, x)


@dataclasses.dataclass(frozen=True)
class HorizontalLift:
    """The minimal lift of a base vector.

    Attributes
    ----------
    at : np.ndarray
        The point p.
    base_vector : np.ndarray
        w.
    lift : np.ndarray
        v with d(pi)(v) = w and F(v) minimal.
    norm : float
        F(v), the induced base norm of w.
    orthogonality : float
        Orthogonality residual of v to ker d(pi).
    iterations : int
        Newton iterations used.
    """

    at: np.ndarray
    base_vector: np.ndarray
    lift: np.ndarray
    norm: float
    orthogonality: float
    iterations: int


def horizontal_lift_vector(metric: FinslerMetric, spec: SubmersionSpec, p, w, seed=None,
                           tol: Tolerances = None) -> HorizontalLift:
    """The horizontal lift of a base vector: the F-minimal preimage under d(pi).

    Writes v = v_p + K z with v_p the least-squares preimage and K a basis
    of ker d(pi), and runs damped Newton on z for the minimum of F^2 / 2,
    which is strictly convex on the affine fiber.

    Parameters
    ----------
    seed : array-like, optional
        Starting z, zero by default.

    Raises
    ------
    RankDeficient
        At singular points of pi.
    NoConvergence
        If Newton's method hits its iteration cap.
    """

    tol = resolve(tol)
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    if not np.any(w):
        raise ValueError("horizontal lift of the zero vector")
    spec.require_regular(p, tol)
    d = spec.dpi(p)
    vp = np.linalg.lstsq(d, w, rcond=None)[0]
    kbasis = linalg.null_space(d)
    z = np.zeros(kbasis.shape[1]) if seed is None else np.asarray(seed, dtype=float)
    scale = float(np.max(np.abs(vp)))

    def objective(z):
        return 0.5 * float(metric.F(p, vp + kbasis @ z)) ** 2

    v = vp + kbasis @ z
    for i in range(tol.newton_max_iter):
        grad = kbasis.T @ np.asarray(metric.dE(p, v))
        if np.max(np.abs(grad)) <= tol.newton_tol * max(1.0, scale):
            logger.debug("horizontal lift converged in %d iterations", i)
            ok, res = is_orthogonal(metric, p, kbasis, v, tol=tol)
            return HorizontalLift(p, w, v, float(metric.F(p, v)), res, i)
        hess = kbasis.T @ np.asarray(metric.g(p, v)) @ kbasis
        step = np.linalg.solve(hess, grad)
        current = objective(z)
        damping = 1.0
        while objective(z - damping * step) > current * (1 + 1e-12) and damping > 1e-6:
            damping *= 0.5
        z = z - damping * step
        v = vp + kbasis @ z
    raise NoConvergence(f"horizontal lift did not converge at p = {p}, w = {w}")


def induced_base_norm(metric: FinslerMetric, spec: SubmersionSpec, p, w, tol: Tolerances = None) -> float:
    """min F(p, v) over d(pi)_p(v) = w, the norm the submersion induces on the base.

    Raises
    ------
    RankDeficient
        At singular points of pi.
    """

    return horizontal_lift_vector(metric, spec, p, w, tol=tol).norm


def lift_kernel(metric: FinslerMetric, spec: SubmersionSpec):
    """Differentiable minimal lift ``(x, w) -> v`` written with ``jax.numpy``.

    Newton on the optimality system dE(x, v) = d(pi)^T lam, d(pi) v = w,
    with a fixed number of sweeps from the least-squares preimage, so the
    result can be differentiated in x and w.
    """

    n, k = spec.dim, spec.base_dim
    de = jax.grad(metric.energy, argnums=1)
    hess = jax.hessian(metric.energy, argnums=1)
    jac = jax.jacfwd(spec.func)

    def lift(x, w):
        d = jac(x).reshape(k, n)
        v = d.T @ jnp.linalg.solve(d @ d.T, w)
        lam = jnp.zeros(k)

        def sweep(_, state):
            v, lam = state
            res = jnp.concatenate([de(x, v) - d.T @ lam, d @ v - w])
            system = jnp.block([[hess(x, v), -d.T], [d, jnp.zeros((k, k))]])
            delta = jnp.linalg.solve(system, res)
            return v - delta[:n], lam - delta[n:]

        v, _ = jax.lax.fori_loop(0, _LIFT_SWEEPS, sweep, (v, lam))
        return v

    return lift


class InducedBaseMetric(FinslerMetric):
    """The base metric induced by a submersion, read through a section.

    F~(y, w) = min F(sigma(y), v) over d(pi) v = w, with the section
    sigma(y) = fibers.param(s_ref, y). For a Finsler submersion the value
    does not depend on the fiber parameter s_ref.

    Parameters
    ----------
    metric : FinslerMetric
        Metric of the total space.
    spec : SubmersionSpec
        The submersion; its fiber family provides the section.
    s_ref : array-like, optional
        Fiber parameter of the section, the centre of the fiber box by
        default.
    """

    def __init__(self, metric: FinslerMetric, spec: SubmersionSpec, s_ref=None, name: str = None):
        if spec.fibers is None:
            raise ValueError("an induced base metric needs a fiber parametrization")
        fibers = spec.fibers
        s_ref = jnp.asarray(fibers.box.mean(axis=1) if s_ref is None else s_ref, dtype=float)
        lift = lift_kernel(metric, spec)

        def func(y, w):
            x = fibers.param(s_ref, y)
            return metric.func(x, lift(x, w))

        super().__init__(spec.base_dim, func, MetricKind.CUSTOM, name or metric.name + "_base")
        self._s_ref = np.asarray(s_ref)


@dataclasses.dataclass
class SubmersionReport:
    """Outcome of :func:`check_submersion`.

    Attributes
    ----------
    mode : str
        'declared' when compared with the declared base metric, 'fiber' when
        the induced norm is compared along fibers.
    max_defect : float
        Largest relative defect.
    samples : int
        Number of (p, w) pairs used.
    skipped : int
        Samples dropped at singular points.
    """

    mode: str
    max_defect: float
    samples: int
    skipped: int
    passed: bool

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def check_submersion(metric: FinslerMetric, spec: SubmersionSpec, region, n_samples: int,
                     seed: int = 0, tol: Tolerances = None) -> SubmersionReport:
    """Check that pi maps unit balls onto unit balls.

    With a declared base metric, compares the induced norm with it at random
    points and base directions. Without one, compares the induced norm of
    the same base vector at several points of the same fiber.

    Parameters
    ----------
    region : array-like
        n x 2 sampling box.
    n_samples : int
        Number of sample points.
    seed : int
        Seed of the sampler.

    Returns
    -------
    SubmersionReport
        Never raises on a failed check.
    """

    tol = resolve(tol)
    rng = np.random.default_rng(seed)
    region = np.asarray(region, dtype=float)
    points = region[:, 0] + (region[:, 1] - region[:, 0]) * rng.random((n_samples, spec.dim))
    directions = rng.normal(size=(n_samples, spec.base_dim))
    base = spec.base_metric
    mode = 'declared' if base is not None else 'fiber'
    if base is None and spec.fibers is None:
        raise ValueError("check_submersion needs a declared base metric or a fiber parametrization")

    worst, used, skipped = 0.0, 0, 0
    for p, w in zip(points, directions):
        if not spec.is_regular(p, tol):
            skipped += 1
            continue
        induced = induced_base_norm(metric, spec, p, w, tol)
        if base is not None:
            reference = float(base.F(spec.pi(p), w))
            defect = abs(induced - reference) / reference
        else:
            plaque, s = spec.plaque_through(p)
            others = [plaque(q) for q in plaque.grid(3)]
            values = [induced_base_norm(metric, spec, q, w, tol) for q in others if spec.is_regular(q, tol)]
            defect = max(abs(v - induced) for v in values) / induced if values else 0.0
        worst = max(worst, defect)
        used += 1
    report = SubmersionReport(mode, worst, used, skipped, worst < tol.submersion)
    logger.info("submersion check (%s) of %s: max defect %.3g over %d samples", mode, spec, worst, used)
    return report


def tracking_error(spec: SubmersionSpec, lifted: GeodesicPath, base: GeodesicPath, ts=None) -> float:
    """max |pi(lifted(t)) - base(t)| over ``ts`` (default: base nodes)."""
    ts = base.ts if ts is None else ts
    return max(float(np.max(np.abs(spec.pi(lifted.position(t)) - base.position(t)))) for t in ts)


def horizontal_lift_geodesic(metric: FinslerMetric, spec: SubmersionSpec, base: GeodesicPath, p,
                             strict: bool = True, tol: Tolerances = None) -> GeodesicPath:
    """The geodesic through p whose initial velocity lifts the base velocity.

    For a Finsler submersion it is horizontal and projects onto ``base``.
    The tracking error (see :func:`tracking_error`) is stored on the result
    as ``tracking_error``.

    Parameters
    ----------
    strict : bool
        Raise when the tracking error exceeds the transnormality tolerance.
        With False the drift is only logged as a warning.

    Raises
    ------
    ValueError
        If pi(p) is not the start of the base curve.
    LiftDrift
        If ``strict`` and the lift leaves the fibers over the base curve.
    """

    tol = resolve(tol)
    p = np.asarray(p, dtype=float)
    t0 = base.t_span[0]
    y0, w0 = base.value_and_rate(t0)
    if np.max(np.abs(spec.pi(p) - y0)) > 1e-9 * max(1.0, np.max(np.abs(y0))):
        raise ValueError(f"pi(p) = {spec.pi(p)} is not the base start {y0}")
    v0 = horizontal_lift_vector(metric, spec, p, w0, tol=tol).lift
    lifted = integrate_geodesic(metric, p, v0, base.t_span, tol)
    err = tracking_error(spec, lifted, base)
    lifted.tracking_error = err
    if err > tol.transnormality:
        if strict:
            raise LiftDrift(f"horizontal lift through {p} drifts from the base geodesic by {err:.3g}")
        logger.warning("horizontal lift drifts from the base geodesic by %.3g", err)
    else:
        logger.debug("horizontal lift tracks the base geodesic to %.3g", err)
    return lifted


@dataclasses.dataclass
class TransnormalityReport:
    """Orthogonality of a geodesic to the fibers it meets.

    Attributes
    ----------
    geodesic : str
        Description of the geodesic.
    ts : np.ndarray
        Sample instants.
    residuals : np.ndarray
        Orthogonality residual per instant, NaN at singular instants.
    verdict : bool
        True iff every regular residual is below tolerance.
    """

    geodesic: str
    ts: np.ndarray
    residuals: np.ndarray
    verdict: bool

    @property
    def max_residual(self) -> float:
        regular = self.residuals[np.isfinite(self.residuals)]
        return float(np.max(regular)) if regular.size else 0.0

    @property
    def regular_count(self) -> int:
        return int(np.sum(np.isfinite(self.residuals)))

    def to_dict(self) -> dict:
        return {
            'geodesic': self.geodesic,
            'verdict': self.verdict,
            'max_residual': self.max_residual,
            'regular_instants': self.regular_count,
            'residuals': [None if not np.isfinite(r) else float(r) for r in self.residuals],
        }


def check_transnormality(metric: FinslerMetric, spec: SubmersionSpec, geo: GeodesicPath, samples: int = 101,
                         tol: Tolerances = None) -> TransnormalityReport:
    """Orthogonality residuals of the geodesic to ker d(pi) along the way.

    Instants where d(pi) is rank deficient are skipped (NaN residual).

    Returns
    -------
    TransnormalityReport
        Never raises on a failed check.
    """

    tol = resolve(tol)
    ts = np.linspace(*geo.t_span, samples)
    residuals = np.full(samples, np.nan)
    for i, t in enumerate(ts):
        x, v = geo.value_and_rate(t)
        if not spec.is_regular(x, tol) or spec.on_singular_locus(x, 1e-6):
            continue
        residuals[i] = is_orthogonal(metric, x, spec.vertical(x), v, tol=tol)[1]
    regular = residuals[np.isfinite(residuals)]
    verdict = bool(regular.size and np.max(regular) < tol.transnormality)
    report = TransnormalityReport(str(geo), ts, residuals, verdict)
    logger.info("transnormality along %s: max residual %.3g (%s)", geo, report.max_residual,
                "pass" if verdict else "fail")
    return report


class BasicField:
    """The basic normal field along a fiber.

    At each fiber point the horizontal lift of the fixed base vector
    d(pi)(xi). For a Finsler submersion every value has F = 1.

    Parameters
    ----------
    metric : FinslerMetric
        The metric.
    spec : SubmersionSpec
        The submersion.
    plaque : SubmanifoldPatch
        The fiber.
    w : np.ndarray
        The base vector.
    unit : bool
        Rescale every value to F = 1. Only changes anything when pi is not
        a Finsler submersion.
    """

    def __init__(self, metric: FinslerMetric, spec: SubmersionSpec, plaque: SubmanifoldPatch, w,
                 tol: Tolerances = None, unit: bool = False):
        self._metric = metric
        self._spec = spec
        self._plaque = plaque
        self._w = np.asarray(w, dtype=float)
        self._tol = resolve(tol)
        self._unit = unit

    @property
    def base_vector(self) -> np.ndarray:
        return self._w

    @property
    def unit(self) -> bool:
        return self._unit

    @property
    def plaque(self) -> SubmanifoldPatch:
        return self._plaque

    def __call__(self, s) -> np.ndarray:
        x = self._plaque(s)
        v = horizontal_lift_vector(self._metric, self._spec, x, self._w, tol=self._tol).lift
        return v / float(self._metric.F(x, v)) if self._unit else v

    @cached_property
    def _jacobian(self):
        lift = lift_kernel(self._metric, self._spec)
        param = self._plaque.param
        func = self._metric.func
        w = jnp.asarray(self._w)
        unit = self._unit

        def field(s):
            x = param(s)
            v = lift(x, w)
            return v / func(x, v) if unit else v

        return kernel(jax.jacfwd(field))

    def derivative(self, s) -> np.ndarray:
        """d xi / d s along the fiber, shape (n, k)."""
        s = jnp.asarray(s, dtype=float).reshape(self._plaque.dim)
        return np.asarray(self._jacobian(s)).reshape(self._spec.dim, self._plaque.dim)

    def covariant(self, s) -> np.ndarray:
        """Columns nabla^xi_{T_a} xi, shape (n, k)."""
        x = self._plaque(s)
        xi = self(s)
        return self.derivative(s) + np.asarray(self._metric.nonlinear(x, xi)) @ self._plaque.tangent_basis(s)

    def constancy(self, params) -> float:
        """max |F(xi_q) - 1| over the fiber parameters."""
        worst = 0.0
        for s in params:
            worst = max(worst, abs(float(self._metric.F(self._plaque(s), self(s))) - 1.0))
        return worst


def basic_field_along_fiber(metric: FinslerMetric, spec: SubmersionSpec, plaque: SubmanifoldPatch, s0, xi,
                            params=None, tol: Tolerances = None, unit: bool = False) -> tuple:
    """The basic field through a unit normal and its constancy defect.

    Parameters
    ----------
    plaque : SubmanifoldPatch
        The fiber.
    s0 : array-like
        Parameter of the point where ``xi`` is given.
    xi : array-like
        Unit normal at plaque(s0).
    params : array-like, optional
        Fiber parameters to check, a grid of 16 by default.
    unit : bool
        Rescale the lifts to F = 1, see :class:`BasicField`.

    Returns
    -------
    tuple
        (BasicField, max |F(xi_q) - 1|).

    Raises
    ------
    RankDeficient
        On singular fibers.
    """

    tol = resolve(tol)
    p = plaque(s0)
    spec.require_regular(p, tol)
    ok, res = is_orthogonal(metric, p, plaque.tangent_basis(s0), xi, tol=tol)
    if not ok:
        raise ValueError(f"xi is not orthogonal to {plaque.name} (residual {res:.3g})")
    field = BasicField(metric, spec, plaque, spec.dpi(p) @ np.asarray(xi, dtype=float), tol, unit)
    params = plaque.grid(16) if params is None else np.asarray(params, dtype=float).reshape(-1, plaque.dim)
    defect = field.constancy(params)
    logger.info("basic field along %s: constancy defect %.3g", plaque.name, defect)
    return field, defect


def discover_singular_points(spec: SubmersionSpec, points, tol: Tolerances = None) -> np.ndarray:
    """The rows of ``points`` where d(pi) is rank deficient."""
    tol = resolve(tol)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    mask = np.array([spec.regularity(p) < tol.singular_ratio for p in points], dtype=bool)
    return points[mask]


def vertical_jacobi_space(metric: FinslerMetric, field: BasicField, s, geo: GeodesicPath,
                          tol: Tolerances = None) -> SelfAdjointSpace:
    """Holonomy Jacobi fields along the geodesic of a basic field.

    J(t0) = T_a and J'(t0) = nabla_{T_a} xi for the tangent basis T of the
    fiber at s; these are the variation fields of the endpoint maps of the
    basic field. Returns a space labelled 'V'.
    """

    s = np.asarray(s, dtype=float).reshape(field.plaque.dim)
    t0 = geo.t_span[0]
    x0, v0 = geo.value_and_rate(t0)
    speed = float(metric.F(x0, v0))
    j0 = field.plaque.tangent_basis(s)
    j0p = speed * field.covariant(s)
    fields = integrate_jacobi_fields(metric, geo, j0, j0p, t0, tol)
    return SelfAdjointSpace(geo, fields, 'V', t0)
