import json

import numpy as np
import pytest

from pyfinsub.model import FORMATS, CSVReport, JSONReport, Table
from pyfinsub.resources import columns


def table():
    return Table('demo', ['t', 'ok', 'value'], [[0.1, True, None], [np.float64(1) / 3, np.bool_(False), 2]],
                 {'extra': {'inf': float('inf'), 'array': np.arange(3)}})


def test_row_length_is_checked():
    with pytest.raises(ValueError):
        Table('bad', ['a', 'b'], [[1]])


def test_csv():
    text = CSVReport().render(table(), {})
    lines = text.splitlines()
    assert lines[0] == 't,ok,value'
    assert lines[1] == '0.1,1,' + columns.MISSING
    assert float(lines[2].split(',')[0]) == 1.0 / 3.0
    assert lines[2].split(',')[1] == '0'


def test_json():
    text = JSONReport().render(table(), {'seed': 0})
    doc = json.loads(text)
    assert doc['config'] == {'seed': 0}
    assert doc['extra'] == {'inf': None, 'array': [0, 1, 2]}
    assert doc['rows'][1][1] is False
    assert text == JSONReport().render(table(), {'seed': 0})


def test_formats():
    assert sorted(FORMATS) == ['csv', 'json']
    assert columns.geodesic(2) == ['t', 'x1', 'x2', 'v1', 'v2', 'F(v)']
    assert columns.jacobi(2, 1) == ['t', 'J1_1', 'J1_2', 'det']
