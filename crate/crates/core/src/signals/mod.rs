//! Sampled signals, excitation waveforms and the sensor-side processing chain
//! (quantisation, causal smoothing, finite-difference differentiation).

mod excitation;
mod filters;
mod series;

pub use excitation::{generate_excitation, ExcitationKind, ExcitationSpec, MAX_VOLTAGE};
pub use filters::{differentiate, moving_average, quantize};
pub use series::{fmt_sig, TimeSeries};
