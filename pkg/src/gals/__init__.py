"""Gradient-augmented level sets on uniform grids."""

from .advection import (
    BoundaryConfigError,
    DegenerateInflowError,
    Dirichlet,
    GradientAugmentedAdvector,
    GradientUpdate,
    HomogeneousNeumann,
    Integrator,
    StepOptions,
    advect_points,
    cfl_time_step,
    step,
    trace_backward,
)
from .benchmarks import BENCHMARKS, SCHEMES, RunConfig, convergence_study, run_benchmark
from .convergence import InsufficientDataError, fit_order
from .geometry import (
    SurfaceMesh,
    VanishingGradientError,
    curvature_at,
    extract_contour,
    measure_volume,
    node_sign_contour,
    normal_at,
)
from .grid import Grid, LevelSetState, OutOfDomainError, locate_points
from .hermite import CrossScheme, HermiteInterpolator, interpolate, value_and_gradient
from .shapes import init_level_set, subgrid_preset
from .stability import default_scan, eigenvalues_2x2, empirical_growth_check, growth_matrix, spectral_scan
from .velocity import Leveque3D, Pseudo1D, RigidRotation, VortexBox, make_field
from .weno import WenoAdvector, advect_weno, reinitialize

__version__ = "0.1.0"
