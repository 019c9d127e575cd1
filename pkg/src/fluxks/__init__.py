"""Numerical laboratory for a flux-limited chemotaxis system with logistic source.

Two equivalent formulations of the parabolic-elliptic system on a ball
(density in radial coordinates, and the scalar mass-accumulation
equation), finite-time blow-up detection and extrapolation, a parameter
regime classifier, and the explicit analytic bounds on the blow-up time
for direct comparison against simulation.
"""

from . import bounds, diagnostics, elliptic, grids, massform, model, primal, stepping
from .bounds import (
    BoundReport,
    UpperBoundReport,
    estimate_gn_constant,
    lower_bound_constants,
    lower_bound_T,
    odi_blowup_bound,
    upper_bound_apparatus,
)
from .diagnostics import (
    BlowupEstimate,
    DiagnosticsSeries,
    default_p_list,
    detect_blowup,
    lp_norm,
    moment_functional,
    psi,
    select_ab,
)
from .elliptic import PotentialSolution, solve_potential
from .massform import (
    MassProfile,
    check_monotone_bound,
    rhs_mass,
    run_mass,
    transform_from_mass,
    transform_to_mass,
)
from .model import (
    InitialDataSpec,
    ModelParams,
    RadialField,
    RegimeVerdict,
    classify_regime,
    flux_limiter,
    make_initial_data,
    mass_bound,
    mu0_estimate,
    source,
)
from .primal import PrimalState, make_state, rhs_primal, run_primal, step
from .stepping import StepperConfig, StopReason

__version__ = "0.1.0"
