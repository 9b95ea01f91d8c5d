import numpy as np
from scipy import linalg
from scipy.spatial.distance import pdist


def g_norm(g: np.ndarray, u: np.ndarray) -> float:
    """Norm of ``u`` in the inner product ``g``.

    Parameters
    ----------
    g : np.ndarray
        Symmetric positive definite n x n matrix.
    u : np.ndarray
        The vector.

    Returns
    -------
    float
        sqrt(g(u, u)).
    """

    return float(np.sqrt(max(u @ g @ u, 0.0)))


def projector(g: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """The g-orthogonal projection onto the column span of ``basis``.

    Parameters
    ----------
    g : np.ndarray
        Symmetric positive definite n x n matrix.
    basis : np.ndarray
        n x k matrix with linearly independent columns (k may be 0).

    Returns
    -------
    np.ndarray
        n x n matrix P with P @ P = P, range(P) = span(basis) and
        g(P u, w - P w) = 0.
    """

    n = g.shape[0]
    if basis.size == 0:
        return np.zeros((n, n))
    gram = basis.T @ g @ basis
    return basis @ np.linalg.solve(gram, basis.T @ g)


def tangent_coefficients(g: np.ndarray, basis: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Coefficients of the g-orthogonal projection of ``w`` in ``basis``."""
    gram = basis.T @ g @ basis
    return np.linalg.solve(gram, basis.T @ g @ w)


def singular_values(a: np.ndarray) -> np.ndarray:
    """Singular values in decreasing order (empty for empty input)."""
    if a.size == 0:
        return np.zeros(0)
    return linalg.svd(np.atleast_2d(a), compute_uv=False)


def numerical_rank(a: np.ndarray, ratio: float, scale: float = None) -> int:
    """Number of singular values above ``ratio * scale``.

    Parameters
    ----------
    a : np.ndarray
        The matrix.
    ratio : float
        Relative threshold.
    scale : float, optional
        Reference magnitude, the largest singular value of ``a`` by default.
        Pass an external scale when a whole matrix may legitimately vanish.

    Returns
    -------
    int
        The numerical rank.
    """

    s = singular_values(a)
    if s.size == 0:
        return 0
    ref = s[0] if scale is None else scale
    if ref == 0:
        return 0
    return int(np.sum(s > ratio * ref))


def null_space(a: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of ``a``."""
    return linalg.null_space(np.atleast_2d(a))


def complement(basis: np.ndarray, n: int) -> np.ndarray:
    """Euclidean orthonormal basis of the complement of span(basis) in R^n.

    Gram-Schmidt of the coordinate vectors against the basis, so the result
    is aligned with the coordinate axes whenever the span allows it.
    """

    if basis.size == 0:
        return np.eye(n)
    eye = np.eye(n)
    span = g_orthonormalize(eye, basis)
    full = g_orthonormalize(eye, np.column_stack([span, eye]), drop=1e-8)
    if full.shape[1] != n:
        return linalg.null_space(basis.T)
    return full[:, span.shape[1]:]


def g_orthonormalize(g: np.ndarray, vectors: np.ndarray, drop: float = 1e-12) -> np.ndarray:
    """Gram-Schmidt in the inner product ``g``.

    Parameters
    ----------
    g : np.ndarray
        Symmetric positive definite matrix.
    vectors : np.ndarray
        Columns to orthonormalize, in order.
    drop : float
        Columns whose remaining g-norm falls below this fraction of their
        own g-norm are skipped.

    Returns
    -------
    np.ndarray
        n x m matrix of g-orthonormal columns, m <= number of input columns.
    """

    out = []
    for u in vectors.T:
        w = u.astype(float).copy()
        # twice is enough
        for _ in range(2):
            for e in out:
                w = w - (e @ g @ w) * e
        norm = g_norm(g, w)
        if norm > drop * g_norm(g, u.astype(float)):
            out.append(w / norm)
    if not out:
        return np.zeros((g.shape[0], 0))
    return np.stack(out, axis=1)


def spread(points: np.ndarray) -> float:
    """Largest pairwise Euclidean distance between rows of ``points``."""
    points = np.atleast_2d(points)
    if len(points) < 2:
        return 0.0
    return float(np.max(pdist(points)))
