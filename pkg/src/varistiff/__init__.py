"""Elastic curves with variable bending stiffness.

Integrates the characterizing ODEs of elastic and holonomy constrained
elastic curves whose bending stiffness varies along arc length, cross-checks
the equivalent characterizations numerically, and finds closed solutions by
shooting over (a, b, L, xi).
"""

from .characterizations import (
    LineFit,
    Multipliers,
    ResidualReport,
    arclength_multiplier,
    bending_gradient_field,
    characterization_fields,
    characterization_residuals,
    curvature_system_residual,
    elastic_residual,
    energy_from_multipliers,
    fd_tolerance,
    fit_multipliers,
    holonomy_multiplier,
    inflection_line_fit,
    moment_alignment_check,
)
from .closure import (
    ClosureProblem,
    ClosureResult,
    closing_residual,
    fd_jacobian,
    free_mask,
    optimize,
    optimize_with_length_scan,
    scan_lengths,
)
from .curves import (
    CurveSamples,
    FrameField,
    HolonomyFrame,
    bending_energy,
    curve_length_variation,
    default_seed_normal,
    finite_difference,
    holonomy,
    holonomy_gradient,
    parallel_frame,
    transport_normal,
)
from .dynamics import (
    KillingFit,
    VortexConfig,
    killing_fit,
    pendulum_equivalence_check,
    vortex_velocity,
)
from .exporters import export_curve_csv, export_svg_planar, import_curve_csv, write_report
from .integrators import (
    Cond5System,
    IntegrationError,
    PendulumFormSystem,
    PlanarThetaSystem,
    Trajectory,
    VariablePendulumSystem,
    default_steps,
    integrate,
    reconstruct_planar_curve,
    rk4_step,
)
from .stiffness import (
    ConstantProfile,
    GaussianBumpProfile,
    ScaledProfile,
    SinusoidalProfile,
    SquaredProfile,
    StiffnessDomainError,
    StiffnessProfile,
    SumProfile,
    check_positive,
    profile_from_config,
)

__version__ = "0.1.0"
