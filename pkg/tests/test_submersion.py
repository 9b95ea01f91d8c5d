import jax.numpy as jnp
import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from pyfinsub.core.geodesic import integrate_geodesic, is_orthogonal
from pyfinsub.core.metric import riemannian
from pyfinsub.core.submersion import (InducedBaseMetric, basic_field_along_fiber, check_submersion,
                                      check_transnormality, discover_singular_points, horizontal_lift_geodesic,
                                      horizontal_lift_vector, induced_base_norm, tracking_error,
                                      vertical_jacobi_space)
from pyfinsub.errors import LiftDrift, RankDeficient


def test_induced_norm_is_base_randers(fig1):
    p = np.array([0.3, -0.2, 0.7])
    assert induced_base_norm(fig1.metric, fig1.spec, p, [1.0, 0.0]) == pytest.approx(2.0 / 3.0, abs=1e-10)
    assert induced_base_norm(fig1.metric, fig1.spec, p, [-1.0, 0.0]) == pytest.approx(2.0, abs=1e-10)


def test_lift_is_horizontal(fig1):
    lift = horizontal_lift_vector(fig1.metric, fig1.spec, [1.0, 0.5, 0.0], [0.3, 1.0])
    assert np.allclose(fig1.spec.dpi([1.0, 0.5, 0.0]) @ lift.lift, [0.3, 1.0], atol=1e-12)
    assert lift.orthogonality < 1e-8
    with pytest.raises(ValueError):
        horizontal_lift_vector(fig1.metric, fig1.spec, [1.0, 0.5, 0.0], [0.0, 0.0])


def test_lift_at_singular_point(xy):
    with pytest.raises(RankDeficient):
        horizontal_lift_vector(xy.metric, xy.spec, [0.0, 0.0], [1.0])


def test_euclidean_planes(euclid):
    assert induced_base_norm(euclid.metric, euclid.spec, [1.0, -2.0, 0.5], [2.0]) == pytest.approx(2.0)


def test_declared_submersion_holds(fig1):
    report = check_submersion(fig1.metric, fig1.spec, fig1.region, 20, seed=3)
    assert report.mode == 'declared'
    assert report.passed
    assert report.samples + report.skipped == 20


def test_hyperbola_levels_are_not_a_submersion(xy):
    report = check_submersion(xy.metric, xy.spec, xy.region, 10, seed=0)
    assert report.mode == 'fiber'
    assert not report.passed
    assert report.max_defect > 1e-2


def test_submersion_sampling_is_seeded(xy):
    a = check_submersion(xy.metric, xy.spec, xy.region, 5, seed=7)
    b = check_submersion(xy.metric, xy.spec, xy.region, 5, seed=7)
    assert a == b


def test_induced_base_metric(fig1):
    base = InducedBaseMetric(fig1.metric, fig1.spec)
    assert float(base.F(np.zeros(2), np.array([1.0, 0.0]))) == pytest.approx(2.0 / 3.0, abs=1e-10)
    assert float(base.F(np.zeros(2), np.array([0.0, -1.0]))) == pytest.approx(
        float(fig1.spec.base_metric.F(np.zeros(2), np.array([0.0, -1.0]))), abs=1e-10)


def test_horizontal_geodesics_project_to_base_geodesics(fig1):
    base = integrate_geodesic(fig1.spec.base_metric, [0.0, 0.0], [1.0, 0.5], (0.0, 1.0))
    lifted = horizontal_lift_geodesic(fig1.metric, fig1.spec, base, [0.0, 0.0, 0.3])
    assert tracking_error(fig1.spec, lifted, base) < 1e-6
    assert lifted.tracking_error < 1e-6
    with pytest.raises(ValueError):
        horizontal_lift_geodesic(fig1.metric, fig1.spec, base, [1.0, 0.0, 0.3])


def test_transnormality(fig1, tilted):
    geo = integrate_geodesic(fig1.metric, [0.0, 0.0, 0.0], fig1.checks['xi'], (0.0, 2.0))
    report = check_transnormality(fig1.metric, fig1.spec, geo, samples=21)
    assert report.verdict
    assert report.regular_count == 21
    geo = integrate_geodesic(tilted.metric, [0.0, 0.0, 0.0], [1.0, 0.0, 1.0], (0.0, 2.0))
    assert not check_transnormality(tilted.metric, tilted.spec, geo, samples=21).verdict


def test_basic_field_has_constant_norm(fig1):
    plaque = fig1.leaf({'c': [0.5, 0.0]})
    p = plaque([0.0])
    xi = horizontal_lift_vector(fig1.metric, fig1.spec, p, [1.0, 0.0]).lift
    xi = xi / float(fig1.metric.F(p, xi))
    field, defect = basic_field_along_fiber(fig1.metric, fig1.spec, plaque, [0.0], xi)
    assert defect < 1e-8
    assert np.allclose(fig1.spec.dpi(plaque([0.7])) @ field([0.7]), field.base_vector, atol=1e-12)
    assert field.derivative([0.2]).shape == (3, 1)


def test_basic_field_needs_normal(fig1):
    plaque = fig1.leaf({'c': [0.5, 0.0]})
    with pytest.raises(ValueError):
        basic_field_along_fiber(fig1.metric, fig1.spec, plaque, [0.0], [1.0, 0.0, 1.0])


def test_singular_points(fig2):
    points = [[0.0, 0.0, 0.5], [1.0, 0.0, 0.0], [0.0, 0.7, 0.0]]
    assert np.allclose(discover_singular_points(fig2.spec, points), [[0.0, 0.0, 0.5]])
    assert fig2.spec.on_singular_locus([0.0, 0.0, 0.3])
    assert not fig2.spec.on_singular_locus([0.1, 0.0, 0.3])


def test_holonomy_fields(fig1):
    plaque = fig1.leaf(fig1.checks['fiber'])
    field, _ = basic_field_along_fiber(fig1.metric, fig1.spec, plaque, [0.0], fig1.checks['xi'])
    geo = integrate_geodesic(fig1.metric, plaque([0.0]), field([0.0]), (0.0, 1.0))
    space = vertical_jacobi_space(fig1.metric, field, [0.0], geo)
    assert space.label == 'V'
    assert space.dim == 1
    # holonomy fields stay vertical
    for t in (0.5, 1.0):
        assert np.max(np.abs(fig1.spec.dpi(geo.position(t)) @ space[0](t))) < 1e-6


@pytest.mark.parametrize("seed", [None, [0.8], [-1.5]])
def test_lift_does_not_depend_on_newton_start(fig1, seed):
    p, w = [1.0, 0.5, 0.0], [0.3, 1.0]
    reference = horizontal_lift_vector(fig1.metric, fig1.spec, p, w)
    lift = horizontal_lift_vector(fig1.metric, fig1.spec, p, w, seed=seed)
    assert np.allclose(lift.lift, reference.lift, atol=1e-8)
    assert lift.norm == pytest.approx(reference.norm, abs=1e-10)


def test_orthogonal_lift_is_the_minimal_preimage(fig1):
    p = np.array([1.0, 0.5, 0.0])
    lift = horizontal_lift_vector(fig1.metric, fig1.spec, p, [0.3, 1.0])
    assert lift.orthogonality < 1e-8
    vertical = np.array([0.0, 0.0, 1.0])
    found = minimize_scalar(lambda z: float(fig1.metric.F(p, lift.lift + z * vertical)), bounds=(-1.0, 1.0),
                            method='bounded', options={'xatol': 1e-10})
    assert found.x == pytest.approx(0.0, abs=1e-5)
    assert found.fun == pytest.approx(lift.norm, abs=1e-10)
    ok, res = is_orthogonal(fig1.metric, p, vertical[:, None], lift.lift + 0.3 * vertical)
    assert not ok
    assert res > 1e-2


def test_lift_of_a_foreign_curve_drifts(fig1):
    bent = riemannian(2, lambda y: jnp.diag(jnp.array([1.0, 1.0 + y[0] ** 2])))
    base = integrate_geodesic(bent, [0.5, 0.0], [0.0, 1.0], (0.0, 1.0))
    with pytest.raises(LiftDrift):
        horizontal_lift_geodesic(fig1.metric, fig1.spec, base, [0.5, 0.0, 0.0])
    lifted = horizontal_lift_geodesic(fig1.metric, fig1.spec, base, [0.5, 0.0, 0.0], strict=False)
    assert lifted.tracking_error > 1e-3
