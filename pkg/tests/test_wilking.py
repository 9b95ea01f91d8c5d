import numpy as np
import pytest

from pyfinsub.config import Tolerances
from pyfinsub.core.geodesic import integrate_geodesic
from pyfinsub.core.jacobi import SelfAdjointSpace, l_jacobi_basis
from pyfinsub.core.submersion import vertical_jacobi_space
from pyfinsub.core.verifier import normal_field
from pyfinsub.core.wilking import (base_jacobi_defect, build_wilking_frame, integrate_transversal_jacobi,
                                   oneill_tensor, transversal_conjugate_points, transversal_fundamental_solution,
                                   transversal_initial_data)

WINDOW = (0.0, 3.5)


@pytest.fixture(scope="module")
def equator(sphere):
    """L-Jacobi basis along the equator geodesic leaving the fiber over (pi/2, 0)."""
    plaque = sphere.leaf(sphere.checks['fiber'])
    geo = integrate_geodesic(sphere.metric, plaque([0.0]), sphere.checks['xi'], WINDOW)
    return l_jacobi_basis(sphere.metric, plaque, [0.0], geo)


@pytest.fixture(scope="module")
def frame(equator):
    return build_wilking_frame(equator, equator.subspace([0]), WINDOW)


def test_frame_dimensions(frame):
    assert frame.dim_V == 1
    assert frame.dim_H == 2
    assert frame.degeneracies == []
    for t in (0.0, 1.0, 3.0):
        pv = frame.proj_V(t)
        assert np.allclose(pv @ pv, pv, atol=1e-10)
        assert frame.rank_V(t) == 1
        assert frame.orthogonality(t) < 1e-10


def test_product_has_no_oneill_tensor(frame):
    value = oneill_tensor(frame, 1.2, [1.0, 0.0, 0.0])
    assert np.max(np.abs(value.A)) < 1e-8
    assert np.allclose(value.value, 0.0, atol=1e-8)


def test_vertical_distribution_is_tangent_to_fibers(sphere, frame):
    assert frame.tangency(sphere.spec, 1.0) < 1e-10


def test_horizontal_basis_starts_with_velocity(frame):
    basis = frame.basis_H(0.7)
    v = frame.along.velocity(0.7)
    assert np.allclose(basis[:, 0], v / np.linalg.norm(v), atol=1e-10)
    assert basis.shape == (3, 2)


def test_transversal_conjugate_point_at_pi(frame):
    found = transversal_conjugate_points(frame)
    assert len(found) == 1
    assert found[0][0] == pytest.approx(np.pi, abs=1e-7)
    assert found[0][1] == 1


def test_fundamental_solution(frame):
    sol = transversal_fundamental_solution(frame)
    assert sol.size == 1
    assert np.allclose(np.abs(sol.X(1.0)[:, 0]), [np.sin(1.0), 0.0, 0.0], atol=1e-8)
    assert sol.vertical_leak(np.linspace(0.0, 3.0, 7)) < 1e-8
    assert abs(sol.determinant(np.pi)) < 1e-7


def test_horizontal_parts_of_jacobi_fields_solve_transversal_equation(frame, equator):
    assert frame.transversal_residual(equator[1], 1.3) < 1e-6
    x0, y0 = transversal_initial_data(frame, equator[1])
    assert np.allclose(x0, 0.0, atol=1e-12)
    assert np.linalg.norm(y0) == pytest.approx(1.0, abs=1e-10)


def test_base_jacobi_defect(sphere, frame):
    sol = transversal_fundamental_solution(frame)
    ts = np.linspace(0.2, 3.0, 8)
    assert base_jacobi_defect(frame, sol, sphere.spec, sphere.spec.base_metric, ts) < 1e-6


def test_initial_data_must_be_horizontal(frame):
    with pytest.raises(ValueError):
        integrate_transversal_jacobi(frame, [0.0, 0.0, 1.0], [0.0, 0.0, 0.0])


def test_degeneracy_of_vanishing_field(equator):
    frame = build_wilking_frame(equator, equator.subspace([1]), (0.5, 3.5))
    assert len(frame.degeneracies) == 1
    assert frame.degeneracy_instants[0] == pytest.approx(np.pi, abs=1e-6)
    assert frame.degeneracies[0].order == 1
    # V(t) at the zero is spanned by the limit J'(t0)
    b, _ = frame.basis_V(np.pi)
    assert np.linalg.norm(b[:, 0]) == pytest.approx(1.0, abs=1e-6)
    assert frame.rank_V(np.pi) == 1


class _Velocity:
    """The velocity field as a Jacobi field, tangent to the geodesic."""

    def __init__(self, geo):
        self._geo = geo

    def __call__(self, t):
        return self._geo.velocity(t)

    def derivative(self, t):
        return np.zeros(self._geo.dim)


def test_v_must_be_orthogonal_to_velocity(equator):
    space = SelfAdjointSpace(equator.along, [_Velocity(equator.along)], 'V')
    with pytest.raises(ValueError):
        build_wilking_frame(equator, space, WINDOW)


def lift_frame(sc, s, window, tol=None):
    """Wilking frame along the lift through the fiber point s of the scenario's basic normal field."""
    plaque = sc.leaf(sc.checks['fiber'])
    field = normal_field(sc, plaque, sc.checks['fiber']['s0'], sc.checks['xi'], tol=tol)
    geo = integrate_geodesic(sc.metric, plaque([s]), field([s]), window, tol)
    space_W = l_jacobi_basis(sc.metric, plaque, [s], geo, tol)
    space_V = vertical_jacobi_space(sc.metric, field, [s], geo, tol)
    return build_wilking_frame(space_W, space_V, window, tol)


@pytest.fixture(scope="module")
def crossing(fig2):
    """Frame along the FIG2 geodesic that crosses the axis at t = 1."""
    return lift_frame(fig2, 0.0, (0.0, 1.8))


def test_axis_crossing_keeps_dimensions(crossing):
    assert crossing.dim_V == 1
    assert len(crossing.degeneracies) == 1
    t0 = crossing.degeneracy_instants[0]
    assert t0 == pytest.approx(1.0, abs=1e-6)
    assert crossing.degeneracies[0].order == 1
    for t in (0.3, t0 - 1e-3, t0 - 5e-5, t0, t0 + 5e-5, t0 + 1e-3, 1.5):
        assert crossing.rank_V(t) == 1
        assert crossing.basis_H(t).shape == (3, 2)
        assert crossing.orthogonality(t) < 1e-8


def test_degenerate_limit_is_the_derivative(crossing):
    d = crossing.degeneracies[0]
    space = crossing.space_V
    h = 1e-3
    slope = (space.matrix(d.t + h) - space.matrix(d.t - h)) / (2 * h) @ d.null
    assert np.allclose(d.limit, slope, atol=1e-6)
    b, _ = crossing.basis_V(d.t)
    assert np.allclose(b, d.limit, atol=1e-12)
    u = 5e-5
    mean = (crossing.basis_V(d.t - u)[0] + crossing.basis_V(d.t + u)[0]) / 2
    assert np.allclose(mean, b, atol=1e-6)


@pytest.mark.parametrize("halfwidth", [1e-2, 1e-4])
def test_axis_crossing_is_not_conjugate(fig2, halfwidth):
    tol = Tolerances.load().replace(degeneracy_halfwidth=halfwidth)
    frame = lift_frame(fig2, 0.0, (0.0, 1.8), tol)
    # the orbit space has no conjugate points along the projected curve
    assert transversal_conjugate_points(frame, tol=tol) == []
    sol = transversal_fundamental_solution(frame, tol=tol)
    edge = frame.degeneracy_instants[0] + halfwidth
    assert sol.determinant(edge - 1e-9) == pytest.approx(sol.determinant(edge + 1e-9), rel=1e-6)
    values = np.array([sol.determinant(t) for t in np.linspace(0.2, 1.8, 33)])
    assert np.all(values > 0) or np.all(values < 0)


def test_lines_have_orthogonal_frame(fig1):
    frame = lift_frame(fig1, 0.0, (0.0, 2.0))
    assert frame.degeneracies == []
    for t in np.linspace(0.0, 2.0, 5):
        assert frame.orthogonality(t) < 1e-8


def g_norm(frame, x, t):
    g = np.asarray(frame.along.metric.g(frame.along.position(t), frame.along.velocity(t)))
    return float(np.sqrt(x @ g @ x))


@pytest.mark.slow
@pytest.mark.parametrize("name, window, s", [
    ("fig1", (0.0, 2.0), 0.6),
    ("fig2", (0.0, 1.8), 0.8),
    ("sphere", (0.0, 3.5), 0.7),
])
def test_lifts_of_one_base_geodesic_agree(request, name, window, s):
    sc = request.getfixturevalue(name)
    frames = [lift_frame(sc, s_i, window) for s_i in (0.0, s)]
    found = [transversal_conjugate_points(f) for f in frames]
    assert len(found[0]) == len(found[1])
    for (t0, m0), (t1, m1) in zip(*found):
        assert t0 == pytest.approx(t1, abs=1e-6)
        assert m0 == m1
    if name == "sphere":
        assert found[0][0][0] == pytest.approx(np.pi, abs=1e-6)
    sols = [transversal_fundamental_solution(f) for f in frames]
    for t in np.linspace(0.3, window[1], 6):
        norms = [g_norm(f, sol.X(t)[:, 0], t) for f, sol in zip(frames, sols)]
        assert norms[0] == pytest.approx(norms[1], abs=1e-6)
