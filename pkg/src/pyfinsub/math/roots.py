"""Zeros of sampled scalar functions of one variable."""

import numpy as np
from scipy.optimize import brentq, minimize_scalar


def sign_changes(values: np.ndarray) -> np.ndarray:
    """Indices i with values[i] and values[i + 1] of strictly opposite sign."""
    values = np.asarray(values)
    return np.nonzero(values[:-1] * values[1:] < 0)[0]


def bisect_zeros(f, ts: np.ndarray, values: np.ndarray, xtol: float) -> list:
    """Refine every sign change of a sampled function with Brent's method.

    Parameters
    ----------
    f : callable
        The scalar function.
    ts : np.ndarray
        Sample abscissae in increasing order.
    values : np.ndarray
        f at ``ts``.
    xtol : float
        Absolute resolution of the returned zeros.

    Returns
    -------
    list
        Sorted zeros, exact sample zeros included.
    """

    zeros = [float(t) for t, v in zip(ts, values) if v == 0.0]
    for i in sign_changes(values):
        zeros.append(float(brentq(f, ts[i], ts[i + 1], xtol=xtol)))
    return sorted(zeros)


def touching_zeros(f, ts: np.ndarray, values: np.ndarray, floor: float, xtol: float) -> list:
    """Zeros of even order, seen as local minima of |f| without a sign change.

    Every interior local minimum of the sampled |f| is refined with a bounded
    scalar minimization; the minimizer counts as a zero when |f| there is
    below ``floor``.

    Returns
    -------
    list
        Sorted zero locations.
    """

    a = np.abs(values)
    found = []
    for i in range(1, len(a) - 1):
        if not (a[i] <= a[i - 1] and a[i] <= a[i + 1]):
            continue
        if values[i - 1] * values[i + 1] < 0:
            continue
        res = minimize_scalar(lambda t: abs(f(t)), bounds=(ts[i - 1], ts[i + 1]),
                              method='bounded', options={'xatol': xtol})
        if abs(res.fun) < floor:
            found.append(float(res.x))
    return sorted(found)


def merge(instants: list, gap: float) -> list:
    """Collapse instants closer than ``gap`` into their mean."""
    out = []
    for t in sorted(instants):
        if out and t - out[-1][-1] <= gap:
            out[-1].append(t)
        else:
            out.append([t])
    return [float(np.mean(group)) for group in out]
