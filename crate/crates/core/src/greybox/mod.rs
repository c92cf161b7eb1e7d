//! LuGre parameter identification: static parameters from steady-state
//! sweeps, stiffness and damping from slow ramps, refinement by bounded
//! trust-region least squares.

mod dynamic;
mod steady_state;
mod trust_region;

pub use dynamic::{
    dynamic_fit_config, fit_dynamic_params, init_dynamic_params, propagate_deflection, DynamicFit, LuGreResidual,
};
pub use steady_state::{
    fit_static_params, fit_static_params_from, initial_static_params, run_steady_state_sweep, static_fit_config, SettlingConfig,
    StaticParams, SteadyStatePoint,
};
pub use trust_region::{
    forward_difference_jacobian, trr_least_squares, FitResult, LeastSquaresProblem, Termination, TraceRow,
    TrustRegionConfig,
};
