"""Half-space Stokes/heat kernels, weighted-norm machinery, and Picard
mild-solution solvers, with a verification suite for the pointwise and
operator-level estimates they rest on."""

from .errors import (
    AccuracyWarning,
    CompatibilityError,
    HalfspaceError,
    InputDomainError,
    SingularityError,
    SolenoidalityError,
    SolverError,
    TimeDomainError,
)
from .fields import (
    ScalarField,
    TensorGrid,
    VectorField,
    WeightedNormSpec,
    boundary_trace,
    divergence,
    gradient,
    leray_project,
    load_field,
    save_field,
    solenoidal_residual,
    weighted_norm,
)
from .green_tensor import StripQuadrature, TensorIndex, g_breve, g_star, g_star_deriv
from .kernels import (
    HalfSpacePoint,
    MultiIndex,
    gaussian_truncation_radius,
    green_heat_d,
    green_heat_n,
    heat_kernel,
    laplace_fundamental,
)
from .mild_solvers import (
    PicardConfig,
    PicardResult,
    PicardTrace,
    picard_fm_mhd,
    picard_mhd,
    picard_nlcf,
    picard_nse,
)
from .semigroups import (
    DuhamelSchedule,
    duhamel_heat,
    duhamel_stokes,
    grad_heat_of_data,
    heat_semigroup,
    mixed_star_semigroup,
    star_divergence_residual,
    stokes_semigroup,
)
from .verifier import (
    EstimateReport,
    decay_experiment,
    sweep_pointwise_bound,
    sweep_semigroup_scaling,
)

__version__ = "0.1.0"
