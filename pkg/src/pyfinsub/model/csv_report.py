import csv
import io

import numpy as np

from .report import Report, Table
from ..resources import columns


class CSVReport(Report):
    """Comma separated rows under a header.

    Floats are written with ``repr`` so values read back bit for bit. The
    run configuration and payload are not part of the CSV; use
    :class:`JSONReport` when they are needed.
    """

    def render(self, table: Table, config: dict) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([self._cell(v) for v in row])
        return out.getvalue()

    @staticmethod
    def _cell(value) -> str:
        if value is None:
            return columns.MISSING
        if isinstance(value, (bool, np.bool_)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            return repr(float(value))
        return str(value)
