"""Wilking's distributions along a geodesic and the transversal Jacobi equation.

V(t) is spanned by a family of Jacobi fields (regularized through their
zeros) and H(t) is its g-orthogonal complement, which contains the
velocity. Everything is expressed in chart co-ordinates; ' denotes the
covariant derivative along the geodesic with reference vector its velocity,
for which g is parallel.
"""

import dataclasses
import logging
from functools import lru_cache

import jax
import jax.numpy as jnp
import numpy as np
from scipy.optimize import minimize_scalar

from ..config import Tolerances, resolve
from ..errors import DimensionDrop, WindowDegenerate
from ..math import linalg, ode, roots
from .geodesic import GeodesicPath, integrate_geodesic
from .jacobi import JacobiField, SelfAdjointSpace, integrate_jacobi, multiplicity
from .submersion import SubmersionSpec

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class Degeneracy:
    """An instant where some combination of the V fields vanishes.

    Attributes
    ----------
    t : float
        The instant.
    null : np.ndarray
        m x d orthonormal coefficients of the vanishing combinations.
    rest : np.ndarray
        m x (m - d) orthonormal completion.
    limit : np.ndarray
        n x d covariant derivatives J'(t0) of the vanishing combinations,
        the limit of J(t) / (t - t0).
    """

    t: float
    null: np.ndarray
    rest: np.ndarray
    limit: np.ndarray

    @property
    def order(self) -> int:
        return self.null.shape[1]


class WilkingFrame:
    """The distributions V(t), H(t) along a geodesic.

    Built by :func:`build_wilking_frame`.

    Parameters
    ----------
    space_W : SelfAdjointSpace
        The full self-adjoint space.
    space_V : SelfAdjointSpace
        The subfamily spanning V.
    t_span : tuple
        The window the frame is valid on.
    degeneracies : list of Degeneracy
        Instants where the V fields are dependent.
    """

    def __init__(self, space_W: SelfAdjointSpace, space_V: SelfAdjointSpace, t_span: tuple,
                 degeneracies: list, tol: Tolerances = None):
        self._W = space_W
        self._V = space_V
        self._t_span = tuple(sorted(float(t) for t in t_span))
        self._degeneracies = list(degeneracies)
        self._tol = resolve(tol)
        self._geo = space_V.along
        self._metric = self._geo.metric
        self._frame = lru_cache(maxsize=1024)(self._evaluate)

    @property
    def along(self) -> GeodesicPath:
        return self._geo

    @property
    def space_W(self) -> SelfAdjointSpace:
        return self._W

    @property
    def space_V(self) -> SelfAdjointSpace:
        return self._V

    @property
    def t_span(self) -> tuple:
        return self._t_span

    @property
    def dim_V(self) -> int:
        return self._V.dim

    @property
    def dim_H(self) -> int:
        return self._geo.dim - self._V.dim

    @property
    def degeneracies(self) -> list:
        return list(self._degeneracies)

    @property
    def degeneracy_instants(self) -> list:
        return [d.t for d in self._degeneracies]

    def _near(self, t: float):
        for d in self._degeneracies:
            if abs(t - d.t) <= self._tol.degeneracy_halfwidth:
                return d
        return None

    def basis_V(self, t: float) -> tuple:
        """Continuous basis of V(t) and its covariant derivative, both n x m.

        Near a degeneracy instant t0 the vanishing combinations J_c are
        replaced by J_c(t) / (t - t0), equal to J_c'(t0) at t0.
        """

        j = self._V.matrix(t)
        jp = self._V.derivative_matrix(t)
        d = self._near(t)
        if d is None:
            return j, jp
        keep, keep_p = j @ d.rest, jp @ d.rest
        u = t - d.t
        if u == 0.0:
            # J_c'' = -R J_c vanishes at t0
            lim, lim_p = d.limit, np.zeros_like(d.limit)
        else:
            jc, jcp = j @ d.null, jp @ d.null
            lim, lim_p = jc / u, jcp / u - jc / u ** 2
        return np.column_stack([lim, keep]), np.column_stack([lim_p, keep_p])

    def _evaluate(self, t: float):
        x, v = self._geo.value_and_rate(t)
        g = np.asarray(self._metric.g(x, v))
        b, bp = self.basis_V(t)
        n = self._geo.dim
        if b.shape[1] == 0:
            pv = np.zeros((n, n))
            dpv = np.zeros((n, n))
        else:
            m_inv = np.linalg.inv(b.T @ g @ b)
            pv = b @ m_inv @ b.T @ g
            mp = bp.T @ g @ b + b.T @ g @ bp
            dpv = (bp @ m_inv @ b.T @ g + b @ m_inv @ bp.T @ g
                   - b @ m_inv @ mp @ m_inv @ b.T @ g)
        pt = np.outer(v, v) @ g / float(v @ g @ v)
        return x, v, g, pv, dpv, pt

    def proj_V(self, t: float) -> np.ndarray:
        """g-orthogonal projection onto V(t)."""
        return self._frame(float(t))[3]

    def proj_H(self, t: float) -> np.ndarray:
        """g-orthogonal projection onto H(t), the complement of V(t)."""
        return np.eye(self._geo.dim) - self.proj_V(t)

    def proj_tangent(self, t: float) -> np.ndarray:
        """g-orthogonal projection onto the velocity line."""
        return self._frame(float(t))[5]

    def proj_H0(self, t: float) -> np.ndarray:
        """Projection onto the part of H(t) orthogonal to the velocity."""
        return self.proj_H(t) - self.proj_tangent(t)

    def dproj_V(self, t: float) -> np.ndarray:
        """Covariant derivative of proj_V; that of proj_H is its negative."""
        return self._frame(float(t))[4]

    def basis_H(self, t: float) -> np.ndarray:
        """g-orthonormal basis of H(t), velocity direction first.

        Raises
        ------
        DimensionDrop
            If V(t) and the velocity do not span an (m + 1)-dimensional space.
        """

        x, v, g = self._frame(float(t))[:3]
        b, _ = self.basis_V(t)
        comp = linalg.null_space(np.column_stack([b, v]).T @ g)
        basis = linalg.g_orthonormalize(g, np.column_stack([v, comp]))
        if basis.shape[1] != self.dim_H:
            raise DimensionDrop(f"H({float(t):.9g}) has dimension {basis.shape[1]}, expected {self.dim_H}")
        return basis

    def determinant_basis(self, t: float) -> tuple:
        """A basis of V(t) for determinants and the scalar to divide them by.

        det[... | b | ...] / c equals the determinant over the fields J_i
        divided by prod_k (t - t_k)^(d_k) over the degeneracy instants t_k of
        order d_k. It is continuous through every t_k and vanishes only where
        the V fields and the other columns are dependent.
        """

        t = float(t)
        d = self._near(t)
        c = 1.0
        for other in self._degeneracies:
            if other is not d:
                c *= (t - other.t) ** other.order
        if d is None:
            return self._V.matrix(t), c
        b, _ = self.basis_V(t)
        return b, c * float(np.linalg.det(np.column_stack([d.null, d.rest])))

    def rank_V(self, t: float) -> int:
        b, _ = self.basis_V(t)
        return linalg.numerical_rank(b, self._tol.rank_ratio) if b.shape[1] else 0

    def orthogonality(self, t: float) -> float:
        """max |g(V basis, H basis)| in g-normalized bases."""
        g = self._frame(float(t))[2]
        b, _ = self.basis_V(t)
        if b.shape[1] == 0:
            return 0.0
        bv = linalg.g_orthonormalize(g, b)
        return float(np.max(np.abs(bv.T @ g @ self.basis_H(t))))

    def oneill(self, t: float) -> np.ndarray:
        """Matrix of the O'Neill tensor, A = -P_V P_V' P_H + P_H P_V' P_V."""
        pv, dpv = self.proj_V(t), self.dproj_V(t)
        ph = np.eye(self._geo.dim) - pv
        return -pv @ dpv @ ph + ph @ dpv @ pv

    def jacobi_operator(self, t: float) -> np.ndarray:
        x, v = self._frame(float(t))[:2]
        return np.asarray(self._metric.jacobi_operator(x, v))

    def horizontal_part(self, field: JacobiField, t: float) -> tuple:
        """(J^h, D^h J^h) of a Jacobi field at t."""
        ph = self.proj_H(t)
        dph = -self.dproj_V(t)
        j = field(t)
        return ph @ j, ph @ (dph @ j + ph @ field.derivative(t))

    def transversal_residual(self, field: JacobiField, t: float, step: float = 1e-4) -> float:
        """Residual of the transversal equation for the horizontal part of ``field``.

        The covariant derivative of D^h X is taken by a central difference of
        its chart representation, so ``step`` must stay clear of degeneracy
        instants and the window ends.
        """

        def y_chart(u):
            return self.horizontal_part(field, u)[1]

        x, v = self._geo.value_and_rate(t)
        nl = np.asarray(self._metric.nonlinear(x, v))
        xh, yh = self.horizontal_part(field, t)
        y_cov = (y_chart(t + step) - y_chart(t - step)) / (2 * step) + nl @ yh
        ph = self.proj_H(t)
        a = self.oneill(t)
        lhs = ph @ y_cov + ph @ self.jacobi_operator(t) @ xh - 3.0 * a @ a @ xh
        return float(np.max(np.abs(lhs)))

    def tangency(self, spec: SubmersionSpec, t: float) -> float:
        """max |d(pi) b| over a g-orthonormal basis b of V(t), 0 when V is vertical."""
        x = self._frame(float(t))[0]
        g = self._frame(float(t))[2]
        b, _ = self.basis_V(t)
        if b.shape[1] == 0:
            return 0.0
        return float(np.max(np.abs(spec.dpi(x) @ linalg.g_orthonormalize(g, b))))

    def samples(self, ts) -> list:
        """Rows (t, dim V, degenerate flag, V/H orthogonality) for output."""
        rows = []
        for t in ts:
            flag = int(any(abs(t - d) <= self._tol.degeneracy_halfwidth for d in self.degeneracy_instants))
            rows.append((float(t), self.rank_V(t), flag, self.orthogonality(t)))
        return rows


def _smallest_singular(space: SelfAdjointSpace, t: float) -> float:
    return float(linalg.singular_values(space.matrix(t))[-1])


def build_wilking_frame(space_W: SelfAdjointSpace, space_V: SelfAdjointSpace, t_span: tuple = None,
                        tol: Tolerances = None) -> WilkingFrame:
    """Build V(t) = span J_i(t) + {J'(t) : J(t) = 0} and its complement H(t).

    Degeneracy instants are the near-zero minima of the smallest singular
    value of [J_1 ... J_m], refined by bounded scalar minimization.

    Raises
    ------
    ValueError
        If the V fields are not orthogonal to the velocity.
    DimensionDrop
        If the continuous basis loses rank away from every degeneracy
        instant.
    """

    tol = resolve(tol)
    geo = space_V.along
    a, b = sorted(geo.t_span) if t_span is None else sorted(t_span)
    ts = np.linspace(a, b, tol.focal_samples)
    if space_V.tangency([a, b]) > 1e-8 * max(1.0, float(np.max(np.abs(space_V.matrix(a))))):
        raise ValueError("V fields must be orthogonal to the geodesic velocity")

    degeneracies = []
    m = space_V.dim
    if m:
        sig = np.array([linalg.singular_values(space_V.matrix(t)) for t in ts])
        scale = float(np.max(sig[:, 0]))
        low = sig[:, -1]
        candidates = []
        for i in range(len(ts)):
            lo_i, hi_i = max(i - 1, 0), min(i + 1, len(ts) - 1)
            if low[i] <= low[lo_i] and low[i] <= low[hi_i]:
                res = minimize_scalar(lambda t: _smallest_singular(space_V, t), bounds=(ts[lo_i], ts[hi_i]),
                                      method='bounded', options={'xatol': tol.focal_xtol})
                if res.fun < tol.degeneracy_ratio * scale:
                    candidates.append(float(res.x))
        for t0 in roots.merge(candidates, tol.degeneracy_halfwidth):
            j = space_V.matrix(t0)
            _, s, vt = np.linalg.svd(j)
            d = int(np.sum(s < tol.degeneracy_ratio * scale))
            null = vt[m - d:].T
            rest = vt[:m - d].T
            degeneracies.append(Degeneracy(t0, null, rest, space_V.derivative_matrix(t0) @ null))

    frame = WilkingFrame(space_W, space_V, (a, b), degeneracies, tol)
    checked = list(ts) + frame.degeneracy_instants
    for t in checked:
        rank = frame.rank_V(t)
        if rank < m:
            raise DimensionDrop(f"dim V drops to {rank} < {m} at t = {t:.9g}")
    logger.info("Wilking frame on [%g, %g]: dim V = %d, degeneracies at %s", a, b, m,
                ", ".join(f"{t:.9g}" for t in frame.degeneracy_instants) or "none")
    return frame


@dataclasses.dataclass
class ONeillValue:
    """The O'Neill tensor applied to a vector."""

    t: float
    A: np.ndarray
    X: np.ndarray
    value: np.ndarray


def oneill_tensor(frame: WilkingFrame, t: float, X) -> ONeillValue:
    """A(X) = ((X^h)')^v + ((X^v)')^h at t."""
    a = frame.oneill(t)
    X = np.asarray(X, dtype=float)
    return ONeillValue(float(t), a, X, a @ X)


class TransversalSolution:
    """Solutions of the transversal Jacobi equation.

    Attributes
    ----------
    frame : WilkingFrame
        The frame the equation lives in.
    t0 : float
        Initial instant.
    conjugate : list
        (t, multiplicity) pairs, filled by :func:`transversal_conjugate_points`.
    """

    def __init__(self, frame: WilkingFrame, t0: float, segments: list, size: int):
        self.frame = frame
        self.t0 = t0
        self._segments = segments
        self._size = size
        self.conjugate = []

    @property
    def size(self) -> int:
        return self._size

    def _state(self, t: float) -> np.ndarray:
        for lo, hi, traj in self._segments:
            if lo - 1e-12 <= t <= hi + 1e-12:
                return traj(t).reshape(2, self.frame.along.dim, self._size)
        raise ValueError(f"t = {t} outside the transversal solution span")

    def X(self, t: float) -> np.ndarray:
        """Solutions at t, shape (n, p)."""
        return self._state(float(t))[0]

    def Xp(self, t: float) -> np.ndarray:
        """D^h X at t, shape (n, p)."""
        return self._state(float(t))[1]

    def vertical_leak(self, ts) -> float:
        """max |P_V X| relative to max |X| over ``ts``, zero for exact solutions."""
        leak, size = 0.0, 0.0
        for t in ts:
            x = self.X(t)
            leak = max(leak, float(np.max(np.abs(self.frame.proj_V(t) @ x))))
            size = max(size, float(np.max(np.abs(x))))
        return leak / size if size else 0.0

    def determinant(self, t: float) -> float:
        """det[X | V basis | velocity] at t, for n - 1 - dim V solutions.

        The V columns are renormalized through the degeneracy instants (see
        :meth:`WilkingFrame.determinant_basis`), so the value is continuous
        in t.
        """

        bv, c = self.frame.determinant_basis(t)
        return float(np.linalg.det(np.column_stack([self.X(t), bv, self.frame.along.velocity(t)]))) / c


def integrate_transversal_jacobi(frame: WilkingFrame, X0, X0p, t0: float = None,
                                 tol: Tolerances = None) -> TransversalSolution:
    """Solve (D^h)^2 X + (R X)^h - 3 A^2 X = 0 with X(t0) = X0, D^h X(t0) = X0p.

    Parameters
    ----------
    X0, X0p : array-like
        Initial data in H(t0), an n-vector or an n x p matrix of several
        solutions.
    t0 : float, optional
        Initial instant, the start of the frame window by default.

    Raises
    ------
    ValueError
        If the initial data are not horizontal.
    StepFailure
        Propagated from the integrator.
    """

    tol = resolve(tol)
    geo = frame.along
    n = geo.dim
    t0 = frame.t_span[0] if t0 is None else float(t0)
    X0 = np.asarray(X0, dtype=float).reshape(n, -1)
    X0p = np.asarray(X0p, dtype=float).reshape(n, -1)
    p = X0.shape[1]
    pv0 = frame.proj_V(t0)
    scale = max(1.0, float(np.max(np.abs(X0))), float(np.max(np.abs(X0p))))
    if max(float(np.max(np.abs(pv0 @ X0))), float(np.max(np.abs(pv0 @ X0p)))) > 1e-8 * scale:
        raise ValueError("transversal initial data must lie in H(t0)")
    metric = geo.metric

    def rhs(t, y):
        state = y.reshape(2, n, p)
        x, yv = state[0], state[1]
        pos, vel = geo.value_and_rate(t)
        nl = np.asarray(metric.nonlinear(pos, vel))
        pv, dpv = frame.proj_V(t), frame.dproj_V(t)
        ph = np.eye(n) - pv
        a = -pv @ dpv @ ph + ph @ dpv @ pv
        r = frame.jacobi_operator(t)
        xp = yv - dpv @ x
        yp = -ph @ r @ x + 3.0 * a @ a @ x - dpv @ yv
        return np.concatenate([(xp - nl @ x).reshape(-1), (yp - nl @ yv).reshape(-1)])

    y0 = np.concatenate([X0.reshape(-1), X0p.reshape(-1)])
    segments = []
    for end in frame.t_span:
        if end != t0:
            segments.append((min(t0, end), max(t0, end), ode.integrate(rhs, (t0, end), y0, tol)))
    if not segments:
        segments.append((t0, t0, ode.integrate(rhs, (t0, t0), y0, tol)))
    return TransversalSolution(frame, t0, segments, p)


def transversal_initial_data(frame: WilkingFrame, field: JacobiField, t0: float = None) -> tuple:
    """(J^h(t0), D^h J^h(t0)), the transversal data of a Jacobi field."""
    t0 = frame.t_span[0] if t0 is None else float(t0)
    return frame.horizontal_part(field, t0)


def transversal_fundamental_solution(frame: WilkingFrame, t0: float = None,
                                     tol: Tolerances = None) -> TransversalSolution:
    """The solutions with X(t0) = 0 and D^h X(t0) running through a g-orthonormal basis of H0(t0)."""
    t0 = frame.t_span[0] if t0 is None else float(t0)
    basis = frame.basis_H(t0)[:, 1:]
    return integrate_transversal_jacobi(frame, np.zeros_like(basis), basis, t0, tol)


def transversal_conjugate_points(frame: WilkingFrame, window: tuple = None, tol: Tolerances = None) -> list:
    """Instants conjugate to the window start for the transversal equation.

    Integrates the solutions with X(a) = 0 and D^h X(a) running through a
    basis of H0(a), and locates the zeros of det[X | V basis | velocity].
    Multiplicity is the rank deficiency of the H0 components of X.

    Returns
    -------
    list
        (t, multiplicity) pairs in increasing t.

    Raises
    ------
    WindowDegenerate
        If the determinant is negligible on the whole window.
    """

    tol = resolve(tol)
    a, b = frame.t_span if window is None else sorted(window)
    if frame.dim_H <= 1:
        return []
    sol = transversal_fundamental_solution(frame, a, tol)
    det = sol.determinant

    ts = np.linspace(a, b, tol.focal_samples)
    values = np.array([det(t) for t in ts])
    norms = np.array([np.linalg.norm(sol.X(t), axis=0) for t in ts])
    scales = []
    for t in ts:
        bv, c = frame.determinant_basis(t)
        scales.append(np.prod(np.max(norms, axis=0)) * np.prod(np.linalg.norm(bv, axis=0))
                      * np.linalg.norm(frame.along.velocity(t)) / abs(c))
    scale = float(max(scales))
    if scale == 0 or np.max(np.abs(values)) < tol.rank_ratio * scale:
        raise WindowDegenerate(f"transversal determinant negligible on [{a:.6g}, {b:.6g}]")

    zeros = roots.bisect_zeros(det, ts, values, tol.focal_xtol)
    zeros += roots.touching_zeros(det, ts, values, tol.rank_ratio * scale, tol.focal_xtol)
    edge = 10 * tol.focal_xtol
    zeros = [t for t in roots.merge(zeros, edge) if a + edge < t < b - edge]
    col_scale = float(np.max(norms))
    found = [(t, max(1, multiplicity(frame.proj_H0(t) @ sol.X(t), tol.rank_ratio, col_scale))) for t in zeros]
    sol.conjugate = found
    logger.info("transversal conjugate instants on [%g, %g]: %s", a, b,
                ", ".join(f"{t:.9g} (x{m})" for t, m in found) or "none")
    return found


def base_jacobi_defect(frame: WilkingFrame, solution: TransversalSolution, spec: SubmersionSpec,
                       base_metric, ts, column: int = 0, tol: Tolerances = None) -> float:
    """How far d(pi) X is from a Jacobi field of the base metric.

    The base Jacobi field along pi(gamma) with the initial data of d(pi) X
    at the solution's start is integrated and compared with d(pi) X at the
    instants ``ts``, which must avoid the singular locus.

    Returns
    -------
    float
        max |d(pi) X(t) - J_base(t)|.
    """

    geo = frame.along
    t0 = solution.t0
    t_end = max(ts) if max(ts) > t0 else min(ts)
    x0, v0 = geo.value_and_rate(t0)
    base_geo = integrate_geodesic(base_metric, spec.pi(x0), spec.dpi(x0) @ v0, (t0, t_end), tol)

    x_vec = solution.X(t0)[:, column]
    x_rate = solution.Xp(t0)[:, column] - np.asarray(geo.metric.nonlinear(x0, v0)) @ x_vec
    jac = jax.jacfwd(spec.func)
    _, djac = jax.jvp(lambda u: jac(u).reshape(spec.base_dim, spec.dim), (jnp.asarray(x0),), (jnp.asarray(v0),))
    w0 = spec.dpi(x0) @ x_vec
    w_rate = np.asarray(djac) @ x_vec + spec.dpi(x0) @ x_rate
    y0, u0 = base_geo.value_and_rate(t0)
    w_cov = w_rate + np.asarray(base_metric.nonlinear(y0, u0)) @ w0
    base_field = integrate_jacobi(base_metric, base_geo, w0, w_cov, t0, tol)
    return max(float(np.max(np.abs(spec.dpi(geo.position(t)) @ solution.X(t)[:, column] - base_field(t))))
               for t in ts)
