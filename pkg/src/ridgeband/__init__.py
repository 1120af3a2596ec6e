"""2D density ridge estimation with uniform confidence bands.

Pipeline: kernel density derivatives -> second-eigenvector field -> integral
curve tracing -> ridge-point detection -> extreme-value confidence bands,
plus a Monte Carlo harness that checks the distributional behavior of the
estimator at desk scale.
"""

from .kernel import Kernel, KernelConstants, compute_constants, unit_disk_quadrature
from .density import (
    PointCloud,
    DensityField,
    KdeField,
    ElongatedGaussian,
    Ring,
    build_kde,
    eval_all,
    expected_d2,
    expected_grad,
    sample,
    default_bandwidth,
    rng_for,
    load_points_csv,
    write_points_csv,
)
from .eigenfield import (
    DegeneracyError,
    DegeneracyGuard,
    EigenFrame,
    g_map,
    j_map,
    lambda1_map,
    grad_g,
    frame_at,
    grad_v,
)
from .flow import FlowSettings, Trajectory, trace
from .ridge import (
    close_polyline,
    FilamentHit,
    FilamentEstimate,
    a_of_t,
    find_theta,
    estimate_filament,
    hausdorff,
)
from .bands import (
    FlatFilamentError,
    BandIngredients,
    BandResult,
    a_tilde_prime,
    ingredients_at,
    omega_at,
    constant_c,
    b_h_of,
    z_from_level,
    band_radii,
    pointwise_sd,
)
from .diagnostics import (
    DeviationReport,
    phi1,
    phi2,
    gamma_matrix,
    bias_vector,
    decompose,
)

__version__ = "0.1.0"
