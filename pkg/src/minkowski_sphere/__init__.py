"""Intrinsic geometry of unit spheres of smooth planar normed spaces.

Natural parameterization, radial/tangential curvatures and supercurvatures,
their recovery from sphere distances alone, reconstruction of the sphere by
integrating the curvature ODE, and the extension of sphere isometries to
linear maps.
"""
from .curvature import (CurvatureProfile, SuperCurvature, build_profile, curvatures_at,
                        quotient_curvature, second_derivative, supercurvatures_at)
from .errors import (ConfigError, CurvatureMismatch, MinkowskiError, NumericFailure)
from .estimator import (CurveOracle, DistanceOracle, PointClass, SampledOracle,
                        classify_point, estimate_psi_prime, estimate_rho, estimate_tau,
                        helper_integrals, invert_II, recover_curvatures)
from .intrinsic import SampledArc, intrinsic_distance, verify_natural_isometry
from .norm import (Basis2D, Norm2D, NormConstants, Smoothness, aux_euclidean_norm,
                   make_euclidean_norm, make_lp_norm, make_radial_example, make_radial_norm,
                   norm_constants, norm_from_spec)
from .reconstruct import build_isometry, integrate_sphere, tingley_check
from .sphere_param import (ArcLengthTable, NaturalCurve, PhaseShift, build_arc_length,
                           build_natural_curve, invert_arc_length, phase_shift, polar_point)

__version__ = "0.1.0"
