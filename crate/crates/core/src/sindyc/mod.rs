//! Sparse identification of the four-state motor model with control input.

mod friction;
mod library;
mod model;
mod regression;
mod threshold;

pub use friction::LearnedFriction;
pub use library::{build_library, CandidateLibrary, Sample, Term, FRICTION_TERMS, N_TERMS, TERMS};
pub use model::{estimate_derivatives, extract_friction, simulate_model, SindycModel, TrainingRecord};
pub use regression::{
    lasso_fit, lasso_fit_with, least_squares_fit, CoefficientMatrix, LassoOptions, RegressionProblem,
    N_STATES, STATE_NAMES,
};
pub use threshold::{threshold_iteratively, validation_fit, ThresholdConfig, ThresholdOutcome, ThresholdStep};
