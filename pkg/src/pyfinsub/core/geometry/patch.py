import itertools
from functools import cached_property
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np

from ...errors import RankDeficient
from ...math.autodiff import kernel
from ...math.linalg import numerical_rank


class SubmanifoldPatch:
    """An embedded submanifold given by an explicit parametrization.

    Parameters
    ----------
    param : callable
        ``param(s)`` mapping a k-vector of parameters to the n chart
        co-ordinates, written with ``jax.numpy``. For k = 0 the patch is a
        single point and ``param`` receives an empty array.
    dim : int
        The dimension k of the patch.
    ambient : int
        The dimension n of the manifold.
    box : array-like, optional
        k x 2 array of parameter bounds used for sampling.
    name : str
        Label used in reports.
    """

    def __init__(self, param: Callable, dim: int, ambient: int, box=None, name: str = "L"):
        self._param = param
        self._dim = dim
        self._ambient = ambient
        if box is None:
            box = [[-1.0, 1.0]] * dim
        self._box = np.array(box, dtype=float).reshape(dim, 2)
        self._name = name

    def __str__(self) -> str:
        return "{} (dim {} in R^{})".format(self._name, self._dim, self._ambient)

    @classmethod
    def point(cls, x, name: str = "point") -> "SubmanifoldPatch":
        """The zero-dimensional patch {x}."""
        x = jnp.asarray(x, dtype=float)
        return cls(lambda s: x, 0, x.size, name=name)

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def ambient(self) -> int:
        return self._ambient

    @property
    def box(self) -> np.ndarray:
        return self._box

    @property
    def name(self) -> str:
        return self._name

    @property
    def param(self) -> Callable:
        return self._param

    @cached_property
    def _position(self):
        return kernel(self._param)

    @cached_property
    def _jacobian(self):
        return kernel(jax.jacfwd(self._param))

    def __call__(self, s) -> np.ndarray:
        """The chart co-ordinates of the point with parameter ``s``."""
        return np.asarray(self._position(jnp.asarray(s, dtype=float).reshape(self._dim)))

    def tangent_basis(self, s, ratio: float = 1e-10) -> np.ndarray:
        """The n x k matrix of coordinate tangent vectors at ``s``.

        Raises
        ------
        RankDeficient
            If the parametrization is not immersive at ``s``.
        """

        if self._dim == 0:
            return np.zeros((self._ambient, 0))
        basis = np.asarray(self._jacobian(jnp.asarray(s, dtype=float).reshape(self._dim)))
        if numerical_rank(basis, ratio) < self._dim:
            raise RankDeficient(f"patch {self._name} is not immersed at s = {np.asarray(s)}")
        return basis

    def grid(self, count: int) -> np.ndarray:
        """About ``count`` parameters spread over the box, shape (m, k).

        Each parameter direction gets ``ceil(count ** (1/k))`` points placed
        at the centres of equal cells, so the box boundary is never sampled.
        """

        if self._dim == 0:
            return np.zeros((1, 0))
        per_axis = max(1, int(np.ceil(count ** (1.0 / self._dim))))
        axes = [lo + (hi - lo) * (np.arange(per_axis) + 0.5) / per_axis for lo, hi in self._box]
        return np.array(list(itertools.product(*axes)))

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """``count`` uniform random parameters in the box, shape (count, k)."""
        lo, hi = self._box[:, 0], self._box[:, 1]
        return lo + (hi - lo) * rng.random((count, self._dim))

    def centre(self) -> np.ndarray:
        return self._box.mean(axis=1)
