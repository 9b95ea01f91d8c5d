import jax.numpy as jnp
import numpy as np
import pytest

from pyfinsub.core.geodesic import (EndpointMap, NormalExtension, integrate_geodesic, integrate_geodesics,
                                    is_orthogonal, normal_cone_sample)
from pyfinsub.core.geometry.patch import SubmanifoldPatch
from pyfinsub.core.metric import riemannian
from pyfinsub.errors import ConeViolation, RankDeficient


def x_axis(ambient=3):
    return SubmanifoldPatch(lambda s: jnp.concatenate([s, jnp.zeros(ambient - 1)]), 1, ambient, name="axis")


def test_straight_line(euclid3):
    geo = integrate_geodesic(euclid3, [0.0, 0.0, 0.0], [1.0, 2.0, 0.0], (0.0, 3.0))
    assert np.allclose(geo.position(3.0), [3.0, 6.0, 0.0], atol=1e-9)
    assert geo.speed == pytest.approx(np.sqrt(5.0))
    assert geo.speed_drift < 1e-9


def test_backward_integration(randers2):
    geo = integrate_geodesic(randers2, [0.0, 0.0], [1.0, 0.0], (0.0, -2.0))
    assert np.allclose(geo.position(-2.0), [-2.0, 0.0], atol=1e-9)
    assert geo.contains(-1.0)
    assert not geo.contains(1.0)


def test_speed_is_conserved():
    sphere = riemannian(2, lambda x: jnp.diag(jnp.array([1.0, jnp.sin(x[0]) ** 2])))
    geo = integrate_geodesic(sphere, [1.0, 0.0], [0.3, 1.0], (0.0, 4.0))
    assert geo.speed_drift < 1e-7
    rows = geo.samples(np.linspace(0.0, 4.0, 5))
    assert rows.shape == (5, 6)
    assert np.allclose(rows[:, -1], geo.speed, atol=1e-7)


def test_stacked_matches_single(fig1):
    x0s = np.array([[0.0, 0.0, 0.0], [0.5, -0.2, 0.1]])
    v0s = np.array([[1.0, 0.0, 0.2], [0.0, 1.0, 0.0]])
    stacked = integrate_geodesics(fig1.metric, x0s, v0s, (0.0, 1.0))
    for path, x0, v0 in zip(stacked, x0s, v0s):
        single = integrate_geodesic(fig1.metric, x0, v0, (0.0, 1.0))
        assert np.allclose(path.position(1.0), single.position(1.0), atol=1e-7)


def test_zero_velocity_is_rejected(euclid3):
    with pytest.raises(ConeViolation):
        integrate_geodesic(euclid3, np.zeros(3), np.zeros(3), (0.0, 1.0))


def test_normal_cone_sample(randers2):
    p = np.zeros(2)
    tangent = np.array([[0.0], [1.0]])
    v = normal_cone_sample(randers2, p, tangent, [1.0, 0.2])
    assert np.allclose(v, [1.5, 0.0], atol=1e-10)
    ok, residual = is_orthogonal(randers2, p, tangent, v)
    assert ok and residual < 1e-10
    assert not is_orthogonal(randers2, p, tangent, [1.0, 0.2])[0]


def test_normal_extension_is_unit_and_orthogonal(fig1):
    plaque = fig1.leaf({'c': [0.5, 0.0]})
    s0 = np.array([0.0])
    xi0 = normal_cone_sample(fig1.metric, plaque(s0), plaque.tangent_basis(s0), [1.0, 0.0, 0.0])
    ext = NormalExtension(fig1.metric, plaque, s0, xi0)
    s = np.array([0.3])
    xi = ext(s)
    assert float(fig1.metric.F(plaque(s), xi)) == pytest.approx(1.0, abs=1e-12)
    assert is_orthogonal(fig1.metric, plaque(s), plaque.tangent_basis(s), xi)[0]
    assert ext.derivative(s).shape == (3, 1)


def test_endpoint_map(euclid3):
    emap = EndpointMap(euclid3, x_axis(), lambda s: np.array([0.0, 0.0, 1.0]), 2.0)
    images = emap.images([[0.0], [0.5]])
    assert np.allclose(images, [[0.0, 0.0, 2.0], [0.5, 0.0, 2.0]], atol=1e-9)
    assert np.allclose(emap([0.25]), [0.25, 0.0, 2.0], atol=1e-9)


def test_endpoint_map_checks_orthogonality(euclid3):
    emap = EndpointMap(euclid3, x_axis(), lambda s: np.array([1.0, 0.0, 1.0]), 1.0)
    with pytest.raises(ValueError):
        emap.images([[0.0]])


def test_patch_grid_and_immersion():
    patch = SubmanifoldPatch(lambda s: jnp.array([s[0] ** 3, s[1], 0.0]), 2, 3, box=[[0.0, 1.0], [0.0, 2.0]])
    grid = patch.grid(4)
    assert grid.shape == (4, 2)
    assert np.all((grid[:, 0] > 0) & (grid[:, 0] < 1) & (grid[:, 1] > 0) & (grid[:, 1] < 2))
    with pytest.raises(RankDeficient):
        patch.tangent_basis([0.0, 1.0])
    point = SubmanifoldPatch.point([1.0, 2.0, 3.0])
    assert point.dim == 0
    assert point.tangent_basis(np.zeros(0)).shape == (3, 0)
