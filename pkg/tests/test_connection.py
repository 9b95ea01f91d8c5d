import jax.numpy as jnp
import numpy as np
import pytest

from pyfinsub.core.connection import (christoffel, compatibility_residual, covariant_derivative_along,
                                      spray_coefficients)
from pyfinsub.core.geodesic import integrate_geodesic
from pyfinsub.core.metric import ZermeloData, randers_from_zermelo, riemannian


def rotating_wind():
    return randers_from_zermelo(ZermeloData(2, lambda x: jnp.array([-x[1], x[0]]) / 2))


class _Velocity:
    """The velocity field of a geodesic, with its chart derivative."""

    def __init__(self, geo):
        self.geo = geo

    def value_and_rate(self, t):
        return self.geo.velocity(t), self.geo.acceleration(t)


def test_flat_spray_vanishes(euclid3, randers2):
    assert np.allclose(spray_coefficients(euclid3, np.zeros(3), [1.0, 2.0, 0.5]).G, 0.0, atol=1e-14)
    assert np.allclose(spray_coefficients(randers2, np.zeros(2), [0.3, 1.0]).G, 0.0, atol=1e-14)


def test_polar_christoffel():
    polar = riemannian(2, lambda x: jnp.diag(jnp.array([1.0, x[0] ** 2])))
    gamma = christoffel(polar, [2.0, 0.3], [1.0, 1.0]).gamma
    assert gamma[0, 1, 1] == pytest.approx(-2.0)
    assert gamma[1, 0, 1] == pytest.approx(0.5)
    assert gamma[1, 1, 0] == pytest.approx(0.5)


def test_velocity_is_parallel():
    metric = rotating_wind()
    geo = integrate_geodesic(metric, [0.5, 0.0], [0.0, 1.0], (0.0, 1.0))
    derivative = covariant_derivative_along(metric, geo, geo, _Velocity(geo))
    assert np.max(np.abs(derivative(0.4))) < 1e-7


def test_almost_compatibility():
    metric = rotating_wind()
    geo = integrate_geodesic(metric, [0.5, 0.0], [0.0, 1.0], (0.0, 1.0))
    field_x = lambda t: jnp.array([jnp.cos(t), t])
    field_y = lambda t: jnp.array([1.0 + t * t, jnp.sin(2 * t)])
    ref = lambda t: jnp.array([1.0, 0.5 * t])
    assert compatibility_residual(metric, geo, ref, field_x, field_y, 0.3) < 1e-8
