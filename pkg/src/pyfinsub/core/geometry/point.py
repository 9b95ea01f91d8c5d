import numpy as np

from ...errors import NonFiniteInput


class ChartPoint:
    """A point of the manifold in the global chart.

    Parameters
    ----------
    x : array-like
        The chart co-ordinates, at least two of them.

    Raises
    ------
    NonFiniteInput
        If a co-ordinate is NaN or infinite.
    """

    def __init__(self, x):
        x = np.array(x, dtype=float).reshape(-1)
        if x.size < 2:
            raise ValueError(f"a chart point needs at least 2 co-ordinates, got {x.size}")
        if not np.all(np.isfinite(x)):
            raise NonFiniteInput(f"non-finite co-ordinates {x}")
        x.setflags(write=False)
        self._x = x

    def __str__(self):
        return "[{}]".format(", ".join(f"{c:.6g}" for c in self._x))

    def __repr__(self):
        return f"ChartPoint({self._x.tolist()})"

    @property
    def x(self) -> np.ndarray:
        return self._x

    @property
    def dim(self) -> int:
        return self._x.size

    def coordinates(self) -> tuple:
        """The co-ordinates of the point.

        Returns
        -------
        tuple
            (x1, ..., xn).
        """

        return tuple(float(c) for c in self._x)


class TangentSample:
    """A tangent vector ``v`` attached at ``base``.

    Parameters
    ----------
    base : ChartPoint or array-like
        The footpoint.
    v : array-like
        The tangent co-ordinates, same dimension as the base.
    """

    def __init__(self, base, v):
        if not isinstance(base, ChartPoint):
            base = ChartPoint(base)
        v = np.array(v, dtype=float).reshape(-1)
        if v.size != base.dim:
            raise ValueError(f"tangent vector of dimension {v.size} at a point of dimension {base.dim}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteInput(f"non-finite tangent vector {v}")
        v.setflags(write=False)
        self._base = base
        self._v = v

    def __repr__(self):
        return f"TangentSample({self._base.x.tolist()}, {self._v.tolist()})"

    @property
    def base(self) -> ChartPoint:
        return self._base

    @property
    def x(self) -> np.ndarray:
        return self._base.x

    @property
    def v(self) -> np.ndarray:
        return self._v

    @property
    def dim(self) -> int:
        return self._base.dim

    def scaled(self, factor: float) -> "TangentSample":
        return TangentSample(self._base, factor * self._v)


def as_sample(s, v=None) -> TangentSample:
    """Accept a TangentSample or an ``(x, v)`` pair."""
    if isinstance(s, TangentSample):
        return s
    return TangentSample(s, v)
