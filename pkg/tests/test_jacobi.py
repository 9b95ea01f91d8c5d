import jax.numpy as jnp
import numpy as np
import pytest

from pyfinsub.core.geodesic import integrate_geodesic
from pyfinsub.core.geometry.patch import SubmanifoldPatch
from pyfinsub.core.jacobi import (SelfAdjointSpace, detect_focal_points, integrate_jacobi, integrate_jacobi_fields,
                                  jacobi_by_variation, jacobi_operator, l_jacobi_basis, shape_operator,
                                  variation_initial_data)
from pyfinsub.core.metric import riemannian
from pyfinsub.core.verifier import normal_field
from pyfinsub.errors import WindowDegenerate

RHO = 2.0


@pytest.fixture(scope="module")
def plane():
    return riemannian(2)


@pytest.fixture(scope="module")
def round_sphere():
    return riemannian(2, lambda x: jnp.diag(jnp.array([1.0, jnp.sin(x[0]) ** 2])), name="S2")


@pytest.fixture(scope="module")
def circle():
    return SubmanifoldPatch(lambda s: RHO * jnp.array([jnp.cos(s[0]), jnp.sin(s[0])]), 1, 2, name="circle")


@pytest.fixture(scope="module")
def inward(plane, circle):
    return integrate_geodesic(plane, circle([0.0]), [-1.0, 0.0], (0.0, 3.0))


def test_shape_operator_of_circle(plane, circle):
    shape = shape_operator(plane, circle, [0.0], [-1.0, 0.0])
    assert shape.S[0, 0] == pytest.approx(-1.0 / RHO)
    assert shape.symmetry_defect < 1e-12
    with pytest.raises(ValueError):
        shape_operator(plane, circle, [0.0], [-1.0, 0.3])


def test_circle_focal_point_at_radius(plane, circle, inward):
    space = l_jacobi_basis(plane, circle, [0.0], inward)
    assert space.dim == 1
    assert np.allclose(space[0](1.0), [0.0, RHO * (1.0 - 1.0 / RHO)], atol=1e-8)
    report = detect_focal_points(space, (0.0, 3.0))
    assert len(report.instants) == 1
    t, mult = report.instants[0]
    assert t == pytest.approx(RHO, abs=1e-7)
    assert mult == 1


def test_variation_field_matches_basis(plane, circle, inward):
    space = l_jacobi_basis(plane, circle, [0.0], inward)
    varied = jacobi_by_variation(plane, circle, inward, lambda tau: jnp.atleast_1d(tau))
    for t in (0.5, 1.0, 2.5):
        assert np.allclose(varied(t), space[0](t), atol=1e-6)


def test_sphere_conjugate_point_at_pi(round_sphere):
    geo = integrate_geodesic(round_sphere, [np.pi / 2, 0.0], [0.0, 1.0], (0.0, 3.5))
    point = SubmanifoldPatch.point([np.pi / 2, 0.0])
    space = l_jacobi_basis(round_sphere, point, np.zeros(0), geo)
    assert np.allclose(np.abs(space[0](1.0)), [np.sin(1.0), 0.0], atol=1e-8)
    instants = detect_focal_points(space).instants
    assert [m for _, m in instants] == [1]
    assert instants[0][0] == pytest.approx(np.pi, abs=1e-7)


def test_sphere_jacobi_operator(round_sphere):
    geo = integrate_geodesic(round_sphere, [np.pi / 2, 0.0], [0.0, 1.0], (0.0, 1.0))
    value = jacobi_operator(round_sphere, geo, 0.5)
    assert value.R[0, 0] == pytest.approx(1.0, abs=1e-8)
    assert np.allclose(value.R @ geo.velocity(0.5), 0.0, atol=1e-8)
    with pytest.raises(ValueError):
        jacobi_operator(round_sphere, geo, 2.0)


def test_basis_is_self_adjoint(fig1):
    plaque = fig1.leaf(fig1.checks['fiber'])
    geo = integrate_geodesic(fig1.metric, plaque([0.0]), fig1.checks['xi'], (0.0, 2.0))
    space = l_jacobi_basis(fig1.metric, plaque, [0.0], geo)
    assert space.dim == 2
    ts = np.linspace(0.0, 2.0, 5)
    assert space.defect(ts) < 1e-7
    assert space.tangency(ts) < 1e-7


def test_basis_needs_orthogonal_start(fig1):
    plaque = fig1.leaf(fig1.checks['fiber'])
    geo = integrate_geodesic(fig1.metric, plaque([0.0]), [1.0, 0.0, 1.0], (0.0, 1.0))
    with pytest.raises(ValueError):
        l_jacobi_basis(fig1.metric, plaque, [0.0], geo)


def test_focal_detection_needs_full_space(plane, circle, inward):
    space = l_jacobi_basis(plane, circle, [0.0], inward)
    with pytest.raises(ValueError):
        detect_focal_points(space.subspace([], 'V'))


def test_vanishing_field_is_degenerate(plane, inward):
    zero = integrate_jacobi_fields(plane, inward, np.zeros((2, 1)), np.zeros((2, 1)))
    with pytest.raises(WindowDegenerate):
        detect_focal_points(SelfAdjointSpace(inward, zero))


def test_single_field(plane, inward):
    field = integrate_jacobi(plane, inward, [0.0, 1.0], [0.0, 0.5])
    assert np.allclose(field(2.0), [0.0, 2.0], atol=1e-9)
    assert np.allclose(field.derivative(2.0), [0.0, 0.5], atol=1e-9)


@pytest.mark.slow
@pytest.mark.parametrize("name", ["fig1", "fig2"])
@pytest.mark.parametrize("s", np.linspace(-0.9, 0.9, 10))
def test_variation_field_solves_jacobi_equation(request, name, s):
    sc = request.getfixturevalue(name)
    plaque = sc.leaf(sc.checks['fiber'])
    field = normal_field(sc, plaque, sc.checks['fiber']['s0'], sc.checks['xi'])
    geo = integrate_geodesic(sc.metric, plaque([s]), field([s]), (0.0, 1.2))
    beta = lambda tau: jnp.atleast_1d(s + tau)
    varied = jacobi_by_variation(sc.metric, plaque, geo, beta)
    solved = integrate_jacobi(sc.metric, geo, *variation_initial_data(sc.metric, plaque, geo, beta))
    space = l_jacobi_basis(sc.metric, plaque, [s], geo)
    for t in np.linspace(0.1, 1.2, 7):
        assert np.allclose(varied(t), solved(t), atol=1e-5)
        m = space.matrix(t)
        coeffs = np.linalg.lstsq(m, varied(t), rcond=None)[0]
        assert np.max(np.abs(m @ coeffs - varied(t))) < 1e-5
