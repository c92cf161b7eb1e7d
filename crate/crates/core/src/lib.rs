//! Friction-aware identification of a brushless DC motor: simulation,
//! hidden-state extraction, sparse and grey-box model fitting, and
//! friction-compensated speed control.

pub mod control;
pub mod error;
pub mod greybox;
pub mod metrics;
pub mod models;
pub mod motor_sim;
pub mod pipeline;
pub mod plot;
pub mod signals;
pub mod sindyc;
pub mod tde;

pub use error::{Error, Result};
