"""Core modules: metric families, curvature, roots, regularity, boundary and volume."""

from .conformal import boundary_metric_at, classify_boundary_end
from .curvature import curvature_at, einstein_residual
from .polyfam import FamilyFactory, MetricFamily, family_factory, metric_at
from .regularity import PeriodLattice, cone_angle, smoothness_check
from .rootlab import admissible_intervals, cmetric_region, roots
from .volume import weyl_l2

__all__ = [
    "FamilyFactory",
    "MetricFamily",
    "PeriodLattice",
    "admissible_intervals",
    "boundary_metric_at",
    "classify_boundary_end",
    "cmetric_region",
    "cone_angle",
    "curvature_at",
    "einstein_residual",
    "family_factory",
    "metric_at",
    "roots",
    "smoothness_check",
    "weyl_l2",
]
