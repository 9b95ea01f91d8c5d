import copy
import json

import numpy as np
import pytest

from pyfinsub.config import Tolerances
from pyfinsub.core.geometry.patch import SubmanifoldPatch
from pyfinsub.core.scenario.builder import Builder
from pyfinsub.core.scenario.source import builtin_source
from pyfinsub.core.verifier import (CHECKS, CheckResult, builtin_scenarios, check_equidistance, check_equifocality,
                                    check_horizontality_through_singular, check_level_set_containment,
                                    check_osculating, fan_distance, fiber_distance, load_scenario, normal_field,
                                    rank_of_endpoint_map, run_checks, scenario_osculating)
from pyfinsub.errors import ConfigError, NotReached


def reference(sc):
    fiber = sc.leaf(sc.checks['fiber'])
    s0 = np.asarray(sc.checks['fiber']['s0'], dtype=float)
    return fiber, s0, normal_field(sc, fiber, s0, sc.checks.get('xi'), sc.checks.get('xi_seed'))


def test_builtin_scenarios():
    names = [sc.name for sc in builtin_scenarios()]
    assert names == ['FIG1', 'FIG2', 'XY', 'EUCLID', 'SPHERE', 'TILTED']


def test_load_by_name_and_path(tmp_path, euclid):
    assert load_scenario("fig1").name == 'FIG1'
    record = dict(euclid.record)
    record['name'] = 'MINE'
    path = tmp_path / "mine.json"
    path.write_text(json.dumps(record))
    assert load_scenario(str(path)).name == 'MINE'
    with pytest.raises(ConfigError):
        load_scenario("NOPE")


def test_normal_field_is_unit(fig1, xy):
    fiber, s0, field = reference(fig1)
    for s in ([0.0], [0.6]):
        assert float(fig1.metric.F(fiber(s), field(s))) == pytest.approx(1.0, abs=1e-10)
    fiber, s0, field = reference(xy)
    xi = field(s0)
    assert float(xy.metric.F(fiber(s0), xi)) == pytest.approx(1.0, abs=1e-10)
    assert abs(xi @ fiber.tangent_basis(s0)[:, 0]) < 1e-10


def test_containment(euclid, xy):
    fiber, _, field = reference(euclid)
    report = check_level_set_containment(euclid, fiber, field, [0.5, 1.0], fiber.grid(4))
    assert report.verdict
    assert report.max_defect < 1e-9
    fiber, _, field = reference(xy)
    report = check_level_set_containment(xy, fiber, field, xy.checks['r_grid'], fiber.grid(5))
    assert not report.verdict
    assert report.to_dict()['spread'][-1] > 1e-3


def test_rank_of_planes(euclid):
    fiber, _, field = reference(euclid)
    report = rank_of_endpoint_map(euclid, fiber, field, 1.0, fiber.grid(4))
    assert report.ranks == [2, 2, 2, 2]
    assert report.stable and report.verdict


@pytest.mark.slow
def test_circle_fibers_are_equifocal(fig2):
    fiber, s0, field = reference(fig2)
    report = check_equifocality(fig2, fiber, field, fig2.checks['r_grid'], fiber.grid(5), s0)
    assert [round(t, 6) for t, _ in report.focal] == [1.0]
    assert 1.0 not in report.r_grid.tolist()
    assert np.all(report.ranks == 1)
    assert np.all(report.focal_ranks == 0)
    assert report.contained
    assert report.verdict


def test_distance_between_planes(euclid):
    plane = euclid.leaf({'c': [0.0]})
    target = [0.3, -0.2, 1.0]
    assert fiber_distance(euclid, plane, target) == pytest.approx(1.0, abs=1e-6)
    assert fiber_distance(euclid, plane, target, 'backward') == pytest.approx(1.0, abs=1e-6)
    t, miss, z = fan_distance(euclid, plane, [0.0, 0.0, 1.0])
    assert t == pytest.approx(1.0, abs=1e-6)
    assert miss < 1e-6
    assert z.shape == (2 + 3 + 1,)


def test_randers_distance_is_directed(fig1):
    line = fig1.leaf({'c': [0.0, 0.0]})
    target = [1.0, 0.0, 0.5]
    assert fiber_distance(fig1, line, target) == pytest.approx(2.0 / 3.0, abs=1e-6)
    assert fiber_distance(fig1, line, target, 'backward') == pytest.approx(2.0, abs=1e-6)


def test_distance_edge_cases(euclid):
    plane = euclid.leaf({'c': [0.0]})
    assert fiber_distance(euclid, plane, [0.0, 0.0, 0.0]) == 0.0
    with pytest.raises(ValueError):
        fiber_distance(euclid, plane, [0.0, 0.0, 5.0])
    with pytest.raises(ValueError):
        fiber_distance(euclid, plane, [0.0, 0.0, 1.0], direction='sideways')
    with pytest.raises(NotReached):
        fiber_distance(euclid, plane, [0.0, 0.0, 2.5])


def test_distance_from_point(euclid):
    point = SubmanifoldPatch.point([0.0, 0.0, 0.0])
    assert fiber_distance(euclid, point, [0.6, 0.0, 0.8]) == pytest.approx(1.0, abs=1e-6)


def test_equidistant_planes(euclid):
    report = check_equidistance(euclid, euclid.leaf({'c': [0.0]}), 1.0, euclid.leaf({'c': [1.0]}), samples=4)
    assert report.passed
    assert report.points.shape == (4, 3)
    assert report.to_dict()['direction'] == 'forward'
    report = check_equidistance(euclid, euclid.leaf({'c': [0.0]}), 1.5, euclid.leaf({'c': [1.0]}), samples=1)
    assert not report.passed


@pytest.mark.slow
def test_circle_and_axis_are_equidistant(fig2):
    circle, axis = fig2.leaf({'c': [1.0, 0.0]}), fig2.leaf({'point': [0.0, 0.0, 0.0]})
    for base, comparison in ((axis, circle), (circle, axis)):
        for direction in ('forward', 'backward'):
            report = check_equidistance(fig2, base, 1.0, comparison, direction, samples=3)
            assert report.passed, report.to_dict()


def test_horizontal_through_axis(fig2):
    fiber, s0, field = reference(fig2)
    report = check_horizontality_through_singular(fig2, fiber, s0, field(s0), (0.0, 1.8), samples=61)
    assert report.verdict
    assert report.regular_count > 50


def test_check_status():
    held = CheckResult('X', 'rank', 'pass', True, 0.0, [])
    broken = CheckResult('X', 'rank', 'pass', False, 1.0, [])
    control = CheckResult('X', 'rank', 'fail', False, 1.0, [])
    surprise = CheckResult('X', 'rank', 'fail', True, 0.0, [])
    assert [r.status for r in (held, broken, control, surprise)] == ['pass', 'FAIL', 'expected-fail',
                                                                     'unexpected-pass']
    assert [r.failed for r in (held, broken, control, surprise)] == [False, True, False, False]
    assert held.to_dict()['status'] == 'pass'


def test_unknown_check(euclid):
    with pytest.raises(ValueError):
        run_checks(euclid, ['containment', 'nonsense'])


@pytest.mark.slow
def test_planes_pass_every_check(euclid):
    results = run_checks(euclid, samples=3)
    assert [r.check for r in results] == list(CHECKS)
    assert all(r.status == 'pass' for r in results), [r.to_dict() for r in results]


@pytest.mark.slow
@pytest.mark.parametrize("name", ["XY", "TILTED"])
def test_negative_controls_fail_as_expected(name):
    sc = load_scenario(name)
    results = run_checks(sc, samples=3)
    assert [r.check for r in results] == sc.checks['run']
    assert all(r.status == 'expected-fail' for r in results), [r.to_dict() for r in results]


@pytest.mark.slow
def test_randers_lines_pass(fig1):
    results = run_checks(fig1, ['containment', 'rank', 'equidistance', 'horizontal'], samples=3)
    assert not any(r.failed for r in results), [r.to_dict() for r in results]


def test_osculating_metric_of_a_geodesic_field(fig1):
    report = scenario_osculating(fig1)
    assert report.verdict, report.to_dict()
    assert report.operator_gap < 1e-8
    assert report.geodesic_gap < 1e-6


def test_osculating_metric_of_helices(fig2):
    assert scenario_osculating(fig2).verdict


def test_osculating_metric_of_a_non_geodesic_field(fig1, euclid):
    field = Builder().vector_field(["1", "0", "0"], 3)
    report = check_osculating(fig1.metric, field, [0.5, 0.0, 0.0], 2.0)
    assert not report.verdict
    assert report.field_gap > 1e-3
    assert scenario_osculating(euclid) is None


def test_randers_lines_without_wind_pass_tightly():
    record = copy.deepcopy(builtin_source().find('FIG1'))
    record['name'] = 'FIG1_CALM'
    record['metric']['W'] = ["0", "0", "0"]
    record['submersion']['base_metric']['W'] = ["0", "0"]
    record['checks']['xi'] = [1.0, 0.0, 0.0]
    for key in ('equidistance', 'geodesic_field'):
        record['checks'].pop(key)
    sc = Builder().scenario(record)
    tol = Tolerances.load().replace(containment=1e-10, transnormality=1e-10, submersion=1e-10)
    results = run_checks(sc, ['containment', 'horizontal', 'submersion'], samples=3, tol=tol)
    assert [r.check for r in results] == ['containment', 'horizontal', 'submersion']
    assert all(r.passed for r in results), [r.to_dict() for r in results]
