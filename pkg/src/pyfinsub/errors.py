"""Exceptions raised by pyfinsub.

Every numerical failure mode has its own class so callers can tell a bad
metric (``DegenerateTensor``) from a bad integration (``StepFailure``) or a
bad seed (``NoConvergence``). Check-style functions never raise these for a
failed check, they record the failure in their report instead.
"""


class FinslerError(Exception):
    """Base class of every pyfinsub error."""


class NonFiniteInput(FinslerError, ValueError):
    """Coordinates or vectors contain NaN or infinity."""


class ConeViolation(FinslerError):
    """A derivative was requested at a direction inside the smoothness guard
    around the zero section, where F is not smooth."""


class DegenerateTensor(FinslerError):
    """The fundamental tensor is not positive definite."""


class WindTooStrong(FinslerError):
    """Zermelo data with h(W, W) >= 1, the Randers unit ball is not convex."""


class SingularTensor(FinslerError):
    """The fundamental tensor is numerically non-invertible."""


class StepFailure(FinslerError):
    """The adaptive integrator could not advance (step underflow, blow-up or
    the curve left the chart)."""


class NoConvergence(FinslerError):
    """A Newton-type iteration hit its iteration cap."""


class WindowDegenerate(FinslerError):
    """A determinant vanishes on the whole window, no isolated zeros."""


class RankDeficient(FinslerError):
    """The differential of the submersion is rank deficient at the point."""


class DimensionDrop(FinslerError):
    """The numeric rank of a Wilking distribution fell below its dimension
    away from a declared degeneracy instant."""


class NotReached(FinslerError):
    """No orthogonal geodesic from the plaque lands on the target."""


class LiftDrift(FinslerError):
    """A horizontal lift of a base geodesic does not project onto it."""


class ExpressionError(FinslerError, ValueError):
    """An arithmetic expression could not be parsed or evaluated."""


class ConfigError(FinslerError, ValueError):
    """Invalid configuration value or scenario description."""
