"""Randomized fine approximation of convex bodies by polytopes.

Given a convex body K (membership / support / radial / boundary oracles)
and eps in (0, 1/2), the pipeline produces a vertex set Y on the boundary
with (1 - eps) K contained in conv(Y) contained in K, certified by support
probes (and an exact polygon oracle in the plane), with empirically
eps^{-(d-1)/2} many vertices.
"""

from ._kernels import BACKEND
from .bodies import (Ball, BoundaryPoint, ConvexBody, Cube, Ellipsoid,
                     InvalidBodyError, LinearImage, LpBall, PolarBody,
                     Polytope, load_body, make_body, polar, sphere_points)
from .capmeasure import (Cap, CapSampler, SamplingError, mc_volume,
                         mu_cap_estimate, radial_project, sample_mu,
                         star_inverse, star_map, uniform_in_body)
from .cover import (CapFamily, Certificate, CertificateError, IntervalFamily,
                    TransversalResult, achieved_epsilon, adaptive_cover,
                    cap_coverage_check, estimate_theta, rogers_cover)
from .net import (LiftedNet, build_net, cap_diameter_bound,
                  coverage_radius_check, dv_margin, net_cardinality_bound,
                  rho_for_epsilon)
from .pipeline import (ApproxResult, ConfigError, PipelineConfig, StageError,
                       approximate, baseline_sphere_sampling, santalo_product,
                       sweep)
from .plot2d import plot2d, polygon_containment_check
from .position import (StandardizationError, StandardizedBody, center_of_mass,
                       mvee, standardize)
from .smooth import (HalfSpaceImage, SmoothedBody, SmoothParams,
                     halfspace_image, phi, phi_inverse, phi_map, smooth_body,
                     transfer_epsilon)

__version__ = "0.1.0"
