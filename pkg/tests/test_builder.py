import copy
import json

import numpy as np
import pytest

from pyfinsub.core.metric import MetricKind
from pyfinsub.core.scenario.builder import Builder
from pyfinsub.core.scenario.source import JSONScenarioSource, builtin_source
from pyfinsub.errors import ConfigError, WindTooStrong


@pytest.fixture
def record():
    return copy.deepcopy(builtin_source().find('FIG1'))


def test_builtin_source_names():
    assert builtin_source().names() == ['FIG1', 'FIG2', 'XY', 'EUCLID', 'SPHERE', 'TILTED']
    assert builtin_source().find('fig2')['name'] == 'FIG2'


def test_build_fig1(record):
    sc = Builder().scenario(record)
    assert sc.dim == 3
    assert sc.metric.kind is MetricKind.RANDERS
    assert sc.spec.base_dim == 2
    assert sc.spec.base_metric is not None
    assert sc.expected('containment') == 'pass'
    assert np.allclose(sc.spec.pi([1.0, 2.0, 3.0]), [1.0, 2.0])
    summary = sc.summary()
    assert summary['checks'] == ['equidistance', 'fiber', 'geodesic_field', 'horizontal']
    assert summary['declared_base']


def test_leaf_blocks(fig2):
    circle = fig2.leaf({'c': [0.25, 0.5]})
    assert np.allclose(circle([0.0]), [0.5, 0.0, 0.5])
    point = fig2.leaf({'point': [0.0, 0.0, 0.1]})
    assert point.dim == 0
    with pytest.raises(ConfigError):
        fig2.leaf({'s0': [0.0]})


def test_region_and_ball(fig2):
    assert fig2.contains([1.0, 0.0, 0.0])
    assert not fig2.contains([1.04, 1.04, 0.9])
    points = fig2.sample_points(30, np.random.default_rng(0))
    assert points.shape == (30, 3)
    assert all(fig2.contains(p) for p in points)


def test_strong_wind_is_rejected(record):
    record['metric']['W'] = ["0.5", "0", "x1"]
    with pytest.raises(WindTooStrong):
        Builder().scenario(record)


@pytest.mark.parametrize("mutate", [
    lambda r: r.pop('metric'),
    lambda r: r.update(region=[[0.0, 1.0]]),
    lambda r: r.update(region=[[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]),
    lambda r: r['metric'].update(kind='finsler'),
    lambda r: r['metric'].pop('W'),
    lambda r: r['metric'].update(W=["0.5", "0"]),
    lambda r: r['metric'].update(W=["0.5", "0", "x4"]),
    lambda r: r['submersion'].update(pi=["x1", "y2"]),
    lambda r: r['submersion'].update(pi=["x1", "s1"]),
    lambda r: r['submersion']['fibers'].update(param=["c1", "s1"]),
    lambda r: r['submersion']['fibers'].update(param=["c1", "c2", "s2"]),
    lambda r: r.update(expect={'rank': 'maybe'}),
])
def test_malformed_records(record, mutate):
    mutate(record)
    with pytest.raises(ConfigError):
        Builder().scenario(record)


def test_riemannian_matrix_metric():
    metric = Builder().metric({'kind': 'riemannian', 'h': [["1", "0"], ["0", "x1*x1"]]}, 2)
    assert metric.kind is MetricKind.RIEMANNIAN
    assert float(metric.F(np.array([2.0, 0.0]), np.array([0.0, 1.0]))) == pytest.approx(2.0)
    with pytest.raises(ConfigError):
        Builder().metric({'kind': 'riemannian', 'h': [["1", "0"], ["0", "1"]]}, 3)


def test_json_source_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    nameless = tmp_path / "nameless.json"
    nameless.write_text('{"dim": 2}')
    for path in (bad, nameless, tmp_path / "missing.json"):
        with pytest.raises(ConfigError):
            JSONScenarioSource([str(path)])


def test_json_directory(tmp_path, record):
    for name in ('b', 'a'):
        r = dict(record, name=name.upper())
        (tmp_path / f"{name}.json").write_text(json.dumps(r))
    source = JSONScenarioSource.directory(str(tmp_path))
    assert source.names() == ['A', 'B']
    assert len(Builder().scenarios(source)) == 2
