import numpy as np

from pyfinsub.math import linalg


def test_drop_is_relative_to_each_column():
    g = np.diag([4.0, 1.0, 1.0])
    v = np.array([1.0, 2.0, 0.0])
    # a large column inside span(v) plus rounding noise is dependent
    noisy = 1e6 * v + np.array([0.0, 0.0, 1e-9])
    basis = linalg.g_orthonormalize(g, np.column_stack([v, noisy, [0.0, 0.0, 1e-7]]))
    assert basis.shape == (3, 2)
    assert np.allclose(basis.T @ g @ basis, np.eye(2), atol=1e-12)


def test_complement_of_velocity_and_vertical():
    g = np.diag([1.0, 2.0, 3.0])
    b = np.array([[0.0], [1.0], [0.0]])
    v = np.array([1.0, 0.0, 0.0])
    comp = linalg.null_space(np.column_stack([b, v]).T @ g)
    assert comp.shape == (3, 1)
    basis = linalg.g_orthonormalize(g, np.column_stack([v, comp]))
    assert basis.shape == (3, 2)
    assert np.max(np.abs(b.T @ g @ basis)) < 1e-14
    assert linalg.numerical_rank(np.column_stack([b, basis]), 1e-8) == 3
