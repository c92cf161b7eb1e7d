use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::TimeSeries;
use crate::error::{ensure, Result};

/// Nominal supply voltage of the drive; commanded levels stay within ±this.
pub const MAX_VOLTAGE: f64 = 24.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExcitationKind {
    Constant {
        level: f64,
    },
    Ramp {
        gradient: f64,
    },
    /// `a(t) * sin(phase(t))`, amplitude and frequency swept linearly over
    /// the duration.
    Chirp {
        amp_lo: f64,
        amp_hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    /// `(hold_duration, level)` pairs applied in order; 0 V after the last.
    Steps {
        steps: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcitationSpec {
    pub kind: ExcitationKind,
    pub duration: f64,
}

impl ExcitationSpec {
    pub fn new(kind: ExcitationKind, duration: f64) -> Self {
        Self { kind, duration }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.duration > 0.0 && self.duration.is_finite(), || {
            format!("duration must be > 0, got {}", self.duration)
        })?;
        match &self.kind {
            ExcitationKind::Constant { level } => check_level(*level),
            ExcitationKind::Ramp { gradient } => {
                ensure(gradient.is_finite(), || "ramp gradient must be finite".into())
            }
            ExcitationKind::Chirp {
                amp_lo,
                amp_hi,
                f_lo,
                f_hi,
            } => {
                ensure(amp_lo <= amp_hi, || {
                    format!("chirp amp_lo ({amp_lo}) must not exceed amp_hi ({amp_hi})")
                })?;
                check_level(*amp_lo)?;
                check_level(*amp_hi)?;
                ensure(*f_lo > 0.0, || format!("chirp f_lo must be > 0, got {f_lo}"))?;
                ensure(f_lo <= f_hi, || {
                    format!("chirp f_lo ({f_lo}) must not exceed f_hi ({f_hi})")
                })
            }
            ExcitationKind::Steps { steps } => {
                ensure(!steps.is_empty(), || "step schedule is empty".into())?;
                for &(hold, level) in steps {
                    ensure(hold > 0.0, || format!("step hold duration must be > 0, got {hold}"))?;
                    check_level(level)?;
                }
                Ok(())
            }
        }
    }
}

fn check_level(level: f64) -> Result<()> {
    ensure(level.is_finite() && level.abs() <= MAX_VOLTAGE, || {
        format!("level {level} V outside [-{MAX_VOLTAGE}, {MAX_VOLTAGE}] V")
    })
}

/// Samples the excitation on `ceil(duration / dt)` points starting at t = 0.
pub fn generate_excitation(spec: &ExcitationSpec, dt: f64) -> Result<TimeSeries> {
    spec.validate()?;
    ensure(dt > 0.0 && dt.is_finite(), || format!("dt must be > 0, got {dt}"))?;
    let n = sample_count(spec.duration, dt);
    let t = |k: usize| k as f64 * dt;
    let values = match &spec.kind {
        ExcitationKind::Constant { level } => vec![*level; n],
        ExcitationKind::Ramp { gradient } => (0..n).map(|k| gradient * t(k)).collect(),
        ExcitationKind::Chirp {
            amp_lo,
            amp_hi,
            f_lo,
            f_hi,
        } => {
            let freq = |tt: f64| f_lo + (f_hi - f_lo) * tt / spec.duration;
            let mut phase = 0.0;
            let mut out = Vec::with_capacity(n);
            for k in 0..n {
                if k > 0 {
                    // trapezoidal phase accumulation
                    phase += PI * (freq(t(k - 1)) + freq(t(k))) * dt;
                }
                let amp = amp_lo + (amp_hi - amp_lo) * t(k) / spec.duration;
                out.push(amp * phase.sin());
            }
            out
        }
        ExcitationKind::Steps { steps } => {
            let mut bounds = Vec::with_capacity(steps.len());
            let mut end = 0.0;
            for &(hold, level) in steps {
                end += hold;
                bounds.push((end, level));
            }
            (0..n)
                .map(|k| {
                    let tk = t(k) + 1e-9 * dt;
                    bounds
                        .iter()
                        .find(|(end, _)| tk < *end)
                        .map_or(0.0, |&(_, level)| level)
                })
                .collect()
        }
    };
    TimeSeries::new(0.0, dt, values)
}

fn sample_count(duration: f64, dt: f64) -> usize {
    let ratio = duration / dt;
    let n = ratio.round();
    // guard against 1/0.5 landing on 2.0000000000000004
    if (ratio - n).abs() <= 1e-9 * ratio.max(1.0) {
        n.max(1.0) as usize
    } else {
        ratio.ceil() as usize
    }
}
