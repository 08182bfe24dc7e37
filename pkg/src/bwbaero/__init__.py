"""Blended-wing-body aerodynamic surrogate pipeline.

Parametric BWB surface geometry, surface force/moment integration, a
synthetic-field dataset generator, and two neural surrogates: a
permutation-invariant point-cloud regressor for the planform parameters
and a FiLM-conditioned field network for pointwise aerodynamic
coefficients.
"""

__version__ = "0.1.0"

from .atmosphere import FlightCondition, FreestreamState, freestream, reynolds_number
from .dataio import CaseRecord, DatasetSplit, FieldQuad
from .forces import IntegratedCoefficients, integrate_case, integrate_forces, integrate_moment
from .geometry import CstSection, PlanformParams, SurfaceCloud, sample_surface

__all__ = [
    "CaseRecord",
    "CstSection",
    "DatasetSplit",
    "FieldQuad",
    "FlightCondition",
    "FreestreamState",
    "IntegratedCoefficients",
    "PlanformParams",
    "SurfaceCloud",
    "freestream",
    "integrate_case",
    "integrate_forces",
    "integrate_moment",
    "reynolds_number",
    "sample_surface",
    "__version__",
]
