"""Numerical laboratory for a 1-D two-equation turbulence model.

The model couples a mean velocity u, an inverse time scale omega > 0, and
the square root beta of the turbulent kinetic energy k = beta**2 on the
periodic interval [-pi, pi).  The package integrates it with a conservative
second-order finite-difference scheme and a third-order strong-stability
time stepper, and audits every analytically provable property along the
computed trajectories: decay envelopes, energy and mass budgets, mean
conservation, parity preservation, a Riccati panel at the stagnation node
for the gradient blow-up mechanism, and pairwise stability weights.
"""

from ._version import __version__
from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .diagnostics import (
    AuditAccumulators,
    DiagnosticsRow,
    PairAuditor,
    StabilityRow,
    ToyAuditor,
    ToyDiagnosticsRow,
    TrajectoryAuditor,
    audit_pair,
    audit_step,
    lifespan_lower_bound,
)
from .grid import (
    Field,
    Grid,
    deriv1,
    deriv2,
    extrema,
    flux_div,
    mirror,
    norm,
    quadrature,
    sobolev_h2_sq,
)
from .model import (
    Params,
    State,
    ToyState,
    diffusivity,
    rhs_beta_form,
    rhs_k_form,
    rhs_toy,
    turbulence_quantities,
)
from .oracles import (
    OdeEnvelope,
    lambda_exact,
    mu_exact,
    riccati_bound,
    riccati_solve,
    uniform_exact,
)
from .scenarios import (
    build_state,
    control_for,
    initial_fields,
    initial_toy_fields,
    oracle_checks,
    run_scenario,
    run_sweep,
)
from .stepping import (
    BLOWUP_DETECTED,
    COMPLETED,
    SCHEME_FAILURE,
    RunReport,
    StepControl,
    integrate,
    integrate_pair,
    integrate_toy,
    stable_dt,
    stable_dt_toy,
    step,
    step_toy,
)

__all__ = [
    "__version__",
    "ConfigError", "ScenarioConfig", "load_config", "parse_config",
    "AuditAccumulators", "DiagnosticsRow", "PairAuditor", "StabilityRow",
    "ToyAuditor", "ToyDiagnosticsRow", "TrajectoryAuditor",
    "audit_pair", "audit_step", "lifespan_lower_bound",
    "Field", "Grid", "deriv1", "deriv2", "extrema", "flux_div", "mirror",
    "norm", "quadrature", "sobolev_h2_sq",
    "Params", "State", "ToyState", "diffusivity",
    "rhs_beta_form", "rhs_k_form", "rhs_toy", "turbulence_quantities",
    "OdeEnvelope", "lambda_exact", "mu_exact",
    "riccati_bound", "riccati_solve", "uniform_exact",
    "build_state", "control_for", "initial_fields", "initial_toy_fields",
    "oracle_checks", "run_scenario", "run_sweep",
    "BLOWUP_DETECTED", "COMPLETED", "SCHEME_FAILURE",
    "RunReport", "StepControl",
    "integrate", "integrate_pair", "integrate_toy",
    "stable_dt", "stable_dt_toy", "step", "step_toy",
]
