"""Forward-mode derivatives of functions on the tangent bundle.

All functions here act on callables ``f(x, v)`` written with ``jax.numpy``.
Derivatives are nested ``jax.jacfwd`` calls, i.e. forward-mode (dual number)
differentiation, exact to roundoff.
"""

import jax

_ARGNUM = {'x': 0, 'v': 1}


def derivative(f, slots: str):
    """Nested forward-mode derivative of ``f(x, v)``.

    Parameters
    ----------
    f : callable
        Function of ``(x, v)`` returning an array of any shape.
    slots : str
        Differentiation order, one letter per derivative, ``'x'`` or ``'v'``,
        innermost first. ``'vv'`` is the v-Hessian, ``'vx'`` differentiates in
        v and then in x.

    Returns
    -------
    callable
        Function of ``(x, v)``. Each derivative appends one trailing axis, so
        ``derivative(f, 'vx')(x, v)[..., l, k] = d2 f / dv_l dx_k``.
    """

    out = f
    for slot in slots:
        if slot not in _ARGNUM:
            raise ValueError(f"derivative slot must be 'x' or 'v', got '{slot}'")
        out = jax.jacfwd(out, argnums=_ARGNUM[slot])
    return out


def directional(f, x, v, dx, dv):
    """Directional derivative of ``f`` at ``(x, v)`` along ``(dx, dv)``.

    Returns
    -------
    tuple
        ``(f(x, v), df(x, v)[dx, dv])``.
    """

    return jax.jvp(f, (x, v), (dx, dv))


def kernel(f):
    """JIT-compile ``f``. Compiled kernels are cached per input shape."""
    return jax.jit(f)
