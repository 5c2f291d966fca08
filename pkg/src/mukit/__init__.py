"""Barycentric decompositions, convex hulls of functions and mu-compactness checks."""

from .certificates import (Witness, ap_refute, delta_p_refute, hilbert_cube_classify,
                           tail_certificate_check)
from .cones import pointed_cone_classify, polyhedral_equivalence_check
from .estimators import ConvexEnvelope, ConvexRoof
from .hull import HullConfig, HullSolution, ObjectiveFunction, co_f_search, lsc_probe
from .measures import FiniteMeasure, barycenter, choquet_compare, mass_outside
from .quantum import (DensityMatrix, RoofConfig, RoofResult, f_alpha, partial_trace,
                      roof_convexity_certificate, roof_optimize, von_neumann_entropy)
from .spaces import Family, Point, SetDescriptor, contains, lp_norm
from .stability import (ball_bound, ball_bound_adversary, delta_p_split,
                        extreme_point_separator, midpoint_openness_probe)

__version__ = "0.1.0"
