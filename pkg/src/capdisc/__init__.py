"""Spherical cap discrepancy of Lambert-projected lattice point sets."""

from .bounds import BoundReport, bound_report, corollary_bound, d_lemma_bound, theorem_bound
from .discrepancy import (
    DiscrepancyReport,
    SpherePointSet,
    estimate_discrepancy,
    exact_discrepancy,
    polar_certificate,
    separation_distance,
)
from .errors import CapdiscError
from .intersection import IntersectionReport, intersection_number, lemma_bound
from .lambert import Cap, UnitVec3, cap_preimage, clq_estimate, lambert_forward, lambert_inverse
from .lattice import LatticeConfig, PlanarPointSet, build_point_set, modified_point_set
from .planar import Mat2, Polyline, Vec2

__version__ = "0.1.0"

__all__ = [
    "BoundReport", "bound_report", "corollary_bound", "d_lemma_bound", "theorem_bound",
    "DiscrepancyReport", "SpherePointSet", "estimate_discrepancy", "exact_discrepancy",
    "polar_certificate", "separation_distance", "CapdiscError", "IntersectionReport",
    "intersection_number", "lemma_bound", "Cap", "UnitVec3", "cap_preimage", "clq_estimate",
    "lambert_forward", "lambert_inverse", "LatticeConfig", "PlanarPointSet", "build_point_set",
    "modified_point_set", "Mat2", "Polyline", "Vec2",
]
