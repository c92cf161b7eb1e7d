use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument or configuration value violates a documented bound.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("integration diverged at t = {t:.6} s (state = {state:?})")]
    Diverged { t: f64, state: [f64; 4] },

    /// A free-run model simulation left the finite range; `partial` holds the
    /// states up to (not including) the failing sample.
    #[error("model simulation diverged at t = {t:.6} s after {} samples", partial.len())]
    ModelDiverged { t: f64, partial: Vec<[f64; 4]> },

    #[error("friction model `{0}` has no asperity dynamics")]
    UnsupportedModel(&'static str),

    #[error("rank-deficient active set; collinear columns: {columns:?}")]
    RankDeficient { columns: Vec<String> },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("internal-state extraction degenerate: {0}")]
    ExtractionDegenerate(String),

    #[error("lasso did not converge after {iterations} iterations (duality gap {gap:e})")]
    NotConverged { iterations: usize, gap: f64 },

    #[error("no steady state within {budget} s at {voltage} V")]
    SettlingTimeout { voltage: f64, budget: f64 },

    #[error("ill-posed fit: {0}")]
    IllPosed(String),

    #[error("dynamic-parameter initialisation failed: {0}")]
    InitFailed(String),

    #[error("residual not finite at parameters {0:?}")]
    Evaluation(Vec<f64>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit status for this error class: 1 validation, 2 numerical, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Parse(_) | Error::UnsupportedModel(_) => 1,
            Error::Io(_) => 3,
            _ => 2,
        }
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Validation(msg()))
    }
}
