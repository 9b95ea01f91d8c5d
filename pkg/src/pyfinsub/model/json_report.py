import json

import numpy as np

from .report import Report, Table


class JSONReport(Report):
    """The table, its payload and the run configuration as one JSON document.

    Keys are sorted so reports of equal runs compare equal byte for byte.
    Non-finite floats are written as null.
    """

    def __init__(self, indent: int = 2):
        self._indent = indent

    def render(self, table: Table, config: dict) -> str:
        document = {
            'name': table.name,
            'config': config,
            'columns': list(table.columns),
            'rows': table.rows,
        }
        document.update(table.payload)
        return json.dumps(self._plain(document), indent=self._indent, sort_keys=True, allow_nan=False) + "\n"

    def _plain(self, value):
        """Numpy scalars and arrays to JSON types."""
        if isinstance(value, dict):
            return {str(k): self._plain(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [self._plain(v) for v in value]
        if isinstance(value, np.ndarray):
            return self._plain(value.tolist())
        if isinstance(value, (bool, np.bool_)):
            return bool(value)
        if isinstance(value, (int, np.integer)):
            return int(value)
        if isinstance(value, (float, np.floating)):
            value = float(value)
            return value if np.isfinite(value) else None
        return value
