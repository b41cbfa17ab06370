"""Curve flows in gradient shrinking soliton backgrounds.

Simulation of the coupled background/curve flow and its normalized
rescaling, weighted-volume monotonicity quantities, and numeric audits
of the defining identities at desk scale.
"""

__version__ = "0.1.0"

from .ambient import (AmbientSoliton, ConformalBackground, RicciFlowFamily,
                      conformal_metric_at, flow_family, identity_residuals,
                      make_soliton)
from .geometry import (CurveGeometry, DiscreteCurve, compute_geometry,
                       resample_by_arclength, shrinker_residual_pointwise)

__all__ = [
    "AmbientSoliton",
    "ConformalBackground",
    "CurveGeometry",
    "DiscreteCurve",
    "RicciFlowFamily",
    "compute_geometry",
    "conformal_metric_at",
    "flow_family",
    "identity_residuals",
    "make_soliton",
    "resample_by_arclength",
    "shrinker_residual_pointwise",
    "__version__",
]
