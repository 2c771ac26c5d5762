"""Feature-map reconstruction (edges, gradients, Laplacians) from sparse-angle CT data."""

from .edges import EdgeMap, canny, gradient_magnitude, zero_crossings
from .fbp import fbp_feature, fbp_reconstruct
from .filters import DataFilter, FbpFilter, FeatureKernel, sample_filter
from .phantom import (Disc, DiscPhantom, analytic_radon, modified_phantom, rasterize,
                      three_disc_phantom)
from .sampling import SamplingSpec, make_subset, sampling_counts, spec_for_grid
from .varsolve import SolveResult, SolverConfig, fista
from .xform import Image, RayTransform, Sinogram, adjoint, backproject, convolve_s, forward

__version__ = "0.1.0"
