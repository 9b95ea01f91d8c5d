"""Adaptive integration of first-order systems with dense output.

Thin layer over scipy's Dormand-Prince 4(5) stepper. Every curve in the
package goes through :func:`integrate` so step control, dense output and
failure handling are the same everywhere.
"""

import logging

import numpy as np
from scipy.integrate import RK45, OdeSolution

from ..config import Tolerances, resolve
from ..errors import StepFailure

logger = logging.getLogger(__name__)


class Trajectory:
    """Dense solution of an initial value problem.

    Parameters
    ----------
    ts : np.ndarray
        Accepted step nodes, monotone in the integration direction.
    ys : np.ndarray
        State at the nodes, shape (len(ts), m).
    solution : OdeSolution
        Continuous extension between the nodes.
    """

    def __init__(self, ts: np.ndarray, ys: np.ndarray, solution: OdeSolution):
        self._ts = ts
        self._ys = ys
        self._solution = solution

    def __call__(self, t):
        """State at time(s) ``t``; shape (m,) for scalar t, (m, len(t)) otherwise."""
        if self._solution is None:
            if np.ndim(t) == 0:
                return self._ys[0].copy()
            return np.repeat(self._ys[0][:, None], len(t), axis=1)
        return self._solution(t)

    @property
    def ts(self) -> np.ndarray:
        return self._ts

    @property
    def ys(self) -> np.ndarray:
        return self._ys

    @property
    def t_span(self) -> tuple:
        return (float(self._ts[0]), float(self._ts[-1]))

    @property
    def steps(self) -> int:
        return len(self._ts) - 1


def integrate(rhs, t_span: tuple, y0: np.ndarray, tol: Tolerances = None) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` over ``t_span``.

    Parameters
    ----------
    rhs : callable
        Right-hand side ``rhs(t, y) -> np.ndarray``.
    t_span : tuple
        (t0, t1). t1 < t0 integrates backward; t1 == t0 returns the constant
        trajectory.
    y0 : np.ndarray
        Initial state.
    tol : Tolerances, optional
        Supplies ``rtol``, ``atol`` and ``max_step_underflow``.

    Returns
    -------
    Trajectory
        The dense solution.

    Raises
    ------
    StepFailure
        If the step size underflows, the state becomes non-finite or the
        stepper reports a failure.
    """

    tol = resolve(tol)
    t0, t1 = float(t_span[0]), float(t_span[1])
    y0 = np.asarray(y0, dtype=float)
    if t0 == t1:
        return Trajectory(np.array([t0]), y0[None, :], None)

    solver = RK45(rhs, t0, y0, t1, rtol=tol.rtol, atol=tol.atol)
    ts = [t0]
    ys = [y0]
    interpolants = []
    while solver.status == 'running':
        message = solver.step()
        if solver.status == 'failed':
            raise StepFailure(f"integration stopped at t = {solver.t:.6g}: {message}")
        if not np.all(np.isfinite(solver.y)):
            raise StepFailure(f"non-finite state at t = {solver.t:.6g}")
        # last step is clipped to t1 and may legitimately be tiny
        if solver.status == 'running' and solver.step_size < tol.max_step_underflow * max(1.0, abs(solver.t)):
            raise StepFailure(f"step size underflow ({solver.step_size:.3g}) at t = {solver.t:.6g}")
        ts.append(solver.t)
        ys.append(solver.y)
        interpolants.append(solver.dense_output())

    ts = np.array(ts)
    logger.debug("integrated over [%g, %g] in %d steps", t0, t1, len(ts) - 1)
    return Trajectory(ts, np.array(ys), OdeSolution(ts, interpolants))
