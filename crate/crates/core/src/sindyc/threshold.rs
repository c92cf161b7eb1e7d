use nalgebra::DMatrix;

use super::library::{CandidateLibrary, N_TERMS, TERMS};
use super::model::{simulate_model, SindycModel, TrainingRecord};
use super::regression::{CoefficientMatrix, RegressionProblem, N_STATES, STATE_NAMES};
use crate::error::{ensure, Error, Result};
use crate::metrics::fit_percentage_slices;
use crate::motor_sim::{Dataset, MotorState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdConfig {
    pub library: CandidateLibrary,
    pub z_scale: f64,
    /// largest tolerated drop of the validation fit per removal, percentage points
    pub min_fit_drop: f64,
    /// RK4 steps per sample in validation runs
    pub substeps: usize,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            library: CandidateLibrary::default(),
            z_scale: 1.0,
            min_fit_drop: 0.5,
            substeps: 24,
        }
    }
}

/// One removal attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdStep {
    pub row: usize,
    pub term: usize,
    pub normalized_magnitude: f64,
    pub fit: f64,
    pub accepted: bool,
    pub active_after: usize,
    /// smallest candidate in each row at this iteration, for comparison with
    /// a per-row schedule
    pub per_row_candidates: [Option<usize>; N_STATES],
}

impl ThresholdStep {
    pub fn describe(&self) -> String {
        format!(
            "{} {}:{} (|xi|n = {:.3e}) fit {:.3} active {}",
            if self.accepted { "removed" } else { "kept" },
            STATE_NAMES[self.row],
            TERMS[self.term].name(),
            self.normalized_magnitude,
            self.fit,
            self.active_after
        )
    }
}

#[derive(Debug, Clone)]
pub struct ThresholdOutcome {
    pub model: SindycModel,
    pub full_model: SindycModel,
    pub history: Vec<ThresholdStep>,
}

/// Mean of the x and xdot free-run fits on `validation`; divergence scores
/// `-inf`.
pub fn validation_fit(model: &SindycModel, validation: &Dataset, substeps: usize) -> Result<f64> {
    let x0 = MotorState::new(
        validation.x.values[0],
        validation.xdot.values[0],
        validation.z.values[0],
        validation.i.values[0],
    );
    let traj = match simulate_model(model, &validation.u, x0, substeps) {
        Ok(t) => t,
        Err(Error::ModelDiverged { .. }) => return Ok(f64::NEG_INFINITY),
        Err(e) => return Err(e),
    };
    let xs: Vec<f64> = traj.iter().map(|s| s.x).collect();
    let vs: Vec<f64> = traj.iter().map(|s| s.v).collect();
    let fx = fit_percentage_slices(&validation.x.values, &xs)?;
    let fv = fit_percentage_slices(&validation.xdot.values, &vs)?;
    Ok(0.5 * (fx + fv))
}

/// Sequential hard thresholding: starting from the full least-squares model,
/// drop the globally smallest column-normalised coefficient, refit, and keep
/// the removal while the validation fit drops by at most `min_fit_drop`.
/// Stops at the first rejected removal or when every row is down to one term.
pub fn threshold_iteratively(
    theta: &DMatrix<f64>,
    xdot: &DMatrix<f64>,
    validation: &Dataset,
    cfg: &ThresholdConfig,
) -> Result<ThresholdOutcome> {
    ensure(cfg.min_fit_drop >= 0.0, || format!("min_fit_drop must be >= 0, got {}", cfg.min_fit_drop))?;
    validation.check_aligned()?;
    ensure(validation.len() >= 2, || "validation dataset too short".into())?;
    let problem = RegressionProblem::new(theta, xdot)?;

    // Columns that are identically zero in the training data carry no
    // information and are excluded from the start.
    let mut mask = CoefficientMatrix::full_mask();
    for row in mask.iter_mut() {
        for j in 0..N_TERMS {
            if problem.column_is_zero[j] {
                row[j] = false;
            }
        }
    }
    let build = |xi: CoefficientMatrix| SindycModel::new(cfg.library, xi, cfg.z_scale);
    let mut current = build(problem.fit(&mask)?)?;
    let full_fit = validation_fit(&current, validation, cfg.substeps)?;
    let full_model = current.clone();
    let mut current_fit = full_fit;
    let mut history = Vec::new();
    let mut accepted = 0;

    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        let mut per_row = [None; N_STATES];
        for row in 0..N_STATES {
            if current.xi.row_active_count(row) <= 1 {
                continue;
            }
            let mut row_best: Option<(usize, f64)> = None;
            for j in (0..N_TERMS).filter(|&j| mask[row][j]) {
                let m = problem.normalized_magnitude(&current.xi, row, j);
                if row_best.map_or(true, |(_, b)| m < b) {
                    row_best = Some((j, m));
                }
            }
            if let Some((j, m)) = row_best {
                per_row[row] = Some(j);
                if best.map_or(true, |(_, _, b)| m < b) {
                    best = Some((row, j, m));
                }
            }
        }
        let Some((row, term, magnitude)) = best else { break };

        let mut trial_mask = mask;
        trial_mask[row][term] = false;
        let trial = build(problem.fit(&trial_mask)?)?;
        let fit = validation_fit(&trial, validation, cfg.substeps)?;
        let keep = fit >= current_fit - cfg.min_fit_drop;
        history.push(ThresholdStep {
            row,
            term,
            normalized_magnitude: magnitude,
            fit,
            accepted: keep,
            active_after: if keep { trial.xi.active_count() } else { current.xi.active_count() },
            per_row_candidates: per_row,
        });
        if !keep {
            break;
        }
        mask = trial_mask;
        current = trial;
        current_fit = fit;
        accepted += 1;
    }

    current.training = TrainingRecord {
        validation_fit: current_fit,
        full_model_fit: full_fit,
        accepted_removals: accepted,
    };
    Ok(ThresholdOutcome {
        model: current,
        full_model,
        history,
    })
}
