"""Spray, Chern connection and covariant derivatives along curves."""

import dataclasses
import logging

import jax
import jax.numpy as jnp
import numpy as np

from ..config import Tolerances, resolve
from .geometry.point import TangentSample, as_sample
from .metric import FinslerMetric, checked_inverse

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class SprayCoefficients:
    at: TangentSample
    G: np.ndarray


@dataclasses.dataclass(frozen=True)
class ChristoffelValue:
    """Chern Christoffel symbols, ``gamma[k, i, j]`` = Gamma^k_ij(v)."""

    at: TangentSample
    gamma: np.ndarray


def spray_coefficients(metric: FinslerMetric, s, v=None, tol: Tolerances = None) -> SprayCoefficients:
    """The geodesic spray G(x, v), geodesics solve x'' = -2 G(x, x').

    Raises
    ------
    ConeViolation
        If v is inside the smoothness guard.
    SingularTensor
        If g_v is numerically singular.
    """

    s = as_sample(s, v)
    metric.guard(s.x, s.v, tol)
    checked_inverse(metric, s.x, s.v, tol)
    return SprayCoefficients(s, np.asarray(metric.spray(s.x, s.v)))


def christoffel(metric: FinslerMetric, s, v=None, tol: Tolerances = None) -> ChristoffelValue:
    """Christoffel symbols of the Chern connection with reference vector v.

    Raises
    ------
    ConeViolation, SingularTensor
        As :func:`spray_coefficients`.
    """

    s = as_sample(s, v)
    metric.guard(s.x, s.v, tol)
    checked_inverse(metric, s.x, s.v, tol)
    return ChristoffelValue(s, np.asarray(metric.christoffel(s.x, s.v)))


def value_and_rate(field, t: float):
    """Value and t-derivative of a curve or vector field at ``t``.

    Objects with a ``value_and_rate`` method (geodesics, Jacobi fields)
    supply their own; plain callables must be traceable by JAX and are
    differentiated forward-mode.
    """

    if hasattr(field, 'value_and_rate'):
        return field.value_and_rate(t)
    t = jnp.asarray(float(t))
    value, rate = jax.jvp(field, (t,), (jnp.ones_like(t),))
    return np.asarray(value), np.asarray(rate)


def covariant_derivative_along(metric: FinslerMetric, curve, ref, field, tol: Tolerances = None):
    """The covariant derivative D^W X along a curve.

    (D X)^k = dX^k/dt + Gamma^k_ij(W) X^i dgamma^j/dt.

    Parameters
    ----------
    metric : FinslerMetric
        The metric.
    curve : callable or GeodesicPath
        t -> chart position.
    ref : callable or GeodesicPath
        The reference field W(t); a GeodesicPath means W = its velocity.
    field : callable or JacobiField
        The vector field X(t).

    Returns
    -------
    callable
        t -> (D X)(t) as an n-vector.

    Raises
    ------
    ConeViolation
        When called at a t where W(t) is inside the smoothness guard.
    """

    def derivative(t):
        x, xdot = value_and_rate(curve, t)
        w = _reference(ref, t)
        metric.guard(x, w, tol)
        xv, xv_rate = value_and_rate(field, t)
        gamma = np.asarray(metric.christoffel(x, w))
        return xv_rate + np.einsum('kij,i,j->k', gamma, xv, xdot)

    return derivative


def _reference(ref, t):
    if hasattr(ref, 'velocity'):
        return ref.velocity(t)
    return np.asarray(ref(float(t)))


def compatibility_residual(metric: FinslerMetric, curve, ref, field_x, field_y, t: float,
                           tol: Tolerances = None) -> float:
    """Defect of the almost g-compatibility of the Chern connection at ``t``.

    d/dt g_W(X, Y) = g_W(D X, Y) + g_W(X, D Y) + 2 C_W(D W, X, Y), all
    covariant derivatives taken with reference W.

    Returns
    -------
    float
        |lhs - rhs| / max(1, |lhs|).
    """

    tol = resolve(tol)
    x, xdot = value_and_rate(curve, t)
    if hasattr(ref, 'velocity'):
        w, wdot = ref.velocity(t), ref.acceleration(t)
    else:
        w, wdot = value_and_rate(ref, t)
    metric.guard(x, w, tol)
    xv, xv_rate = value_and_rate(field_x, t)
    yv, yv_rate = value_and_rate(field_y, t)

    g = np.asarray(metric.g(x, w))
    gx, gv = (np.asarray(a) for a in metric.dg(x, w))
    gdot = gx @ xdot + gv @ wdot
    lhs = xv_rate @ g @ yv + xv @ g @ yv_rate + xv @ gdot @ yv

    gamma = np.asarray(metric.christoffel(x, w))
    cov = lambda value, rate: rate + np.einsum('kij,i,j->k', gamma, value, xdot)
    dx, dy, dw = cov(xv, xv_rate), cov(yv, yv_rate), cov(w, wdot)
    c = np.asarray(metric.cartan(x, w))
    rhs = dx @ g @ yv + xv @ g @ dy + 2.0 * np.einsum('ijk,i,j,k->', c, dw, xv, yv)
    return float(abs(lhs - rhs) / max(1.0, abs(lhs)))
