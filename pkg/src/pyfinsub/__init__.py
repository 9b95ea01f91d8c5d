"""
Python Finsler submersions (pyfinsub) is a library for computing with
Finsler metrics on coordinate charts: geodesics, Jacobi fields and focal
points, Finsler submersions and the Wilking distributions along their
geodesics.

It ships a verifier that checks equifocality and equidistance of the fibers
of a submersion on built-in and user supplied scenarios.
"""

import jax

# float64 must be enabled before any array is created
jax.config.update("jax_enable_x64", True)

from .config import Tolerances
from .errors import FinslerError
from .core.metric import FinslerMetric, ZermeloData, randers_from_zermelo, riemannian, validate_metric
from .core.geodesic import EndpointMap, GeodesicPath, integrate_geodesic
from .core.geometry.patch import SubmanifoldPatch
from .core.jacobi import detect_focal_points, l_jacobi_basis
from .core.submersion import SubmersionSpec, check_submersion
from .core.wilking import WilkingFrame, build_wilking_frame, integrate_transversal_jacobi
from .core.scenario.builder import Builder
from .core.scenario.scenario import Scenario
from .core.scenario.source import JSONScenarioSource, ScenarioSource
from .core.verifier import builtin_scenarios, load_scenario, run_checks
