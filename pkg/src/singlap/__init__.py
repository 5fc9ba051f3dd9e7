"""Graph Laplace operators at isolated singularities of 2-D conformal metrics."""

from .asymptotics import (
    AsymptoticPrediction,
    RateFit,
    angular_moment,
    extrinsic_prediction,
    interior_limit,
    intrinsic_prediction,
    rate_fit,
)
from .geometry import (
    AngularProfile,
    ConformalMetric2D,
    Convention,
    CurvatureProfile,
    conformal_gaussian_curvature,
    curvature_function,
    curvature_growth_exponent,
    curvature_moment_classifier,
    curvature_profile,
    extendability_check,
    gauss_bonnet_residual,
    get_metric,
)
from .operators import (
    IntrinsicDistanceModel,
    KernelFlavor,
    KernelSpec,
    LaplacianValue,
    SampleSet,
    ScalarField,
    continuous_extrinsic_laplacian,
    continuous_intrinsic_laplacian,
    discrete_graph_laplacian,
    sample_density,
    truncation_tail_bound,
)
from .quadrature import (
    QuadratureSpec,
    TruncationPolicy,
    gaussian_moment_ck,
    integrate_polar,
    lower_incomplete_gamma,
    truncation_radius,
)

__version__ = "0.1.0"
