//! The three competing motor models and their free-run evaluation.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure, Error, Result};
use crate::metrics::{fit_percentage_slices, rmse, FitReport, STATE_LABELS};
use crate::motor_sim::{Dataset, FrictionModel, LuGreParams, MotorParams, MotorState, Plant};
use crate::signals::fmt_sig;
use crate::sindyc::{simulate_model, SindycModel};

/// Sampled-data linear baseline obtained by ordinary least squares:
/// `v[k+1] = a·(v[k], I[k], u[k])`, `I[k+1] = b·(v[k], I[k], u[k])`, with the
/// position integrated trapezoidally from the velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModel {
    pub velocity: [f64; 3],
    pub current: [f64; 3],
    /// sample period the coefficients belong to
    pub dt: f64,
}

impl LinearModel {
    pub fn fit(ds: &Dataset) -> Result<Self> {
        ds.check_aligned()?;
        ensure(ds.len() >= 5, || "linear fit needs at least 5 samples".into())?;
        let n = ds.len() - 1;
        let a = DMatrix::from_fn(n, 3, |r, c| match c {
            0 => ds.xdot.values[r],
            1 => ds.i.values[r],
            _ => ds.u.values[r],
        });
        let svd = a.svd(true, true);
        let tol = 1e-12 * svd.singular_values.max();
        if svd.singular_values.iter().any(|&s| s <= tol) {
            return Err(Error::RankDeficient {
                columns: vec!["v".into(), "I".into(), "u".into()],
            });
        }
        let solve = |next: &[f64]| -> Result<[f64; 3]> {
            let b = DVector::from_column_slice(&next[1..]);
            let x = svd.solve(&b, tol).map_err(|e| Error::Numerical(e.into()))?;
            Ok([x[0], x[1], x[2]])
        };
        Ok(Self {
            velocity: solve(&ds.xdot.values)?,
            current: solve(&ds.i.values)?,
            dt: ds.dt(),
        })
    }

    pub fn step(&self, s: &MotorState, u: f64) -> MotorState {
        let r = [s.v, s.i, u];
        let dot = |c: &[f64; 3]| c[0] * r[0] + c[1] * r[1] + c[2] * r[2];
        let v = dot(&self.velocity);
        MotorState::new(s.x + 0.5 * self.dt * (s.v + v), v, 0.0, dot(&self.current))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# linear model, one-step rows over (v, I, u)\n");
        let row = |c: &[f64; 3]| c.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "dt = {:?}", self.dt);
        let _ = writeln!(out, "xdot = {}", row(&self.velocity));
        let _ = writeln!(out, "I = {}", row(&self.current));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (mut velocity, mut current, mut dt) = (None, None, None);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (key, rest) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected `key = values`, got `{line}`")))?;
            let vals: Vec<f64> = rest
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|e| Error::Parse(format!("`{v}`: {e}"))))
                .collect::<Result<_>>()?;
            let key = key.trim();
            if key == "dt" {
                match vals[..] {
                    [d] if d > 0.0 => dt = Some(d),
                    _ => return Err(Error::Parse("`dt` needs one positive value".into())),
                }
                continue;
            }
            let arr: [f64; 3] = vals.try_into().map_err(|_| Error::Parse(format!("`{key}` needs 3 coefficients")))?;
            match key {
                "xdot" => velocity = Some(arr),
                "I" => current = Some(arr),
                other => return Err(Error::Parse(format!("unknown key `{other}`"))),
            }
        }
        match (velocity, current, dt) {
            (Some(velocity), Some(current), Some(dt)) => Ok(Self { velocity, current, dt }),
            _ => Err(Error::Parse("linear model needs `dt`, `xdot` and `I`".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MotorModel {
    Linear(LinearModel),
    LuGre { motor: MotorParams, params: LuGreParams },
    Sindyc(SindycModel),
}

impl MotorModel {
    pub fn name(&self) -> &'static str {
        match self {
            MotorModel::Linear(_) => "linear",
            MotorModel::LuGre { .. } => "lugre",
            MotorModel::Sindyc(_) => "sindyc",
        }
    }
}

/// RK4 sub-steps per sample for the sparse model.
pub const EVAL_SUBSTEPS: usize = 24;
/// Largest integration step of the LuGre model during evaluation.
pub const LUGRE_EVAL_STEP: f64 = 1e-4;

/// Free-run simulation of `model` under the dataset's input from its first
/// measured sample. The LuGre model starts with undeformed bristles and the
/// sparse model from the dataset's deformation channel. One state per sample.
pub fn free_run(model: &MotorModel, ds: &Dataset) -> Result<Vec<MotorState>> {
    ds.check_aligned()?;
    ensure(ds.len() >= 2, || "evaluation needs at least 2 samples".into())?;
    let (x0, v0, i0) = (ds.x.values[0], ds.xdot.values[0], ds.i.values[0]);
    let u = &ds.u;
    match model {
        MotorModel::Sindyc(m) => simulate_model(m, u, MotorState::new(x0, v0, ds.z.values[0], i0), EVAL_SUBSTEPS),
        MotorModel::Linear(m) => {
            ensure((m.dt - u.dt).abs() <= 1e-9 * u.dt, || {
                format!("linear model sampled at {} s, dataset at {} s", m.dt, u.dt)
            })?;
            let mut s = MotorState::new(x0, v0, 0.0, i0);
            let mut out = Vec::with_capacity(ds.len());
            out.push(s);
            for k in 0..ds.len() - 1 {
                s = m.step(&s, u.values[k]);
                if !s.is_finite() || s.to_array().iter().any(|v| v.abs() > 1e12) {
                    return Err(Error::ModelDiverged {
                        t: u.time(k + 1),
                        partial: out.iter().map(|s| s.to_array()).collect(),
                    });
                }
                out.push(s);
            }
            Ok(out)
        }
        MotorModel::LuGre { motor, params } => {
            let plant = Plant::new(*motor, FrictionModel::LuGre(*params));
            let mut s = MotorState::new(x0, v0, 0.0, i0);
            let mut out = Vec::with_capacity(ds.len());
            out.push(s);
            for k in 0..ds.len() - 1 {
                s = plant.advance(&s, u.values[k], u.dt, LUGRE_EVAL_STEP, u.time(k)).map_err(|_| {
                    Error::ModelDiverged {
                        t: u.time(k + 1),
                        partial: out.iter().map(|s| s.to_array()).collect(),
                    }
                })?;
                out.push(s);
            }
            Ok(out)
        }
    }
}

/// Free-run fit of every comparable state. A diverged run scores `-inf` on
/// all of them and records the time of divergence.
pub fn evaluate_model(model: &MotorModel, ds: &Dataset, dataset: &str) -> Result<FitReport> {
    score_run(model, ds, dataset, free_run(model, ds))
}

/// Scores the outcome of [`free_run`] against the measured channels.
pub fn score_run(
    model: &MotorModel,
    ds: &Dataset,
    dataset: &str,
    run: Result<Vec<MotorState>>,
) -> Result<FitReport> {
    let mut report = FitReport {
        model: model.name().into(),
        dataset: dataset.into(),
        fit: [None; 4],
        rmse: [None; 4],
        diverged_at: None,
    };
    let comparable = [true, true, matches!(model, MotorModel::Sindyc(_)), true];
    let traj = match run {
        Ok(t) => t,
        Err(Error::ModelDiverged { t, .. }) => {
            report.diverged_at = Some(t);
            for j in 0..4 {
                if comparable[j] {
                    report.fit[j] = Some(f64::NEG_INFINITY);
                }
            }
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    ensure(traj.len() == ds.len(), || format!("trajectory has {} samples, dataset {}", traj.len(), ds.len()))?;
    let measured = [&ds.x, &ds.xdot, &ds.z, &ds.i];
    for j in (0..4).filter(|&j| comparable[j]) {
        let y_hat: Vec<f64> = traj.iter().map(|s| s.to_array()[j]).collect();
        let y = &measured[j].values;
        report.fit[j] = match fit_percentage_slices(y, &y_hat) {
            Ok(f) => Some(f),
            Err(Error::Degenerate(_)) => None,
            Err(e) => return Err(e),
        };
        report.rmse[j] = Some(rmse(y, &y_hat));
    }
    Ok(report)
}

/// Long form: one line per model, dataset and comparable state.
pub fn fit_grid_csv(reports: &[FitReport]) -> String {
    let mut out = String::from("model,dataset,state,fit,rmse,diverged_at\n");
    for r in reports {
        for j in 0..4 {
            let Some(f) = r.fit[j] else { continue };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.model,
                r.dataset,
                STATE_LABELS[j],
                fmt_sig(f),
                r.rmse[j].map_or(String::new(), fmt_sig),
                r.diverged_at.map_or(String::new(), fmt_sig)
            );
        }
    }
    out
}

/// One row per model, `x` and `xdot` fit columns per dataset, in the order
/// the datasets first appear.
pub fn fit_table_csv(reports: &[FitReport]) -> String {
    let mut models: Vec<&str> = Vec::new();
    let mut sets: Vec<&str> = Vec::new();
    for r in reports {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
        if !sets.contains(&r.dataset.as_str()) {
            sets.push(&r.dataset);
        }
    }
    let mut out = String::from("model");
    for s in &sets {
        let _ = write!(out, ",{s}_{},{s}_{}", STATE_LABELS[0], STATE_LABELS[1]);
    }
    out.push('\n');
    let cell = |v: Option<f64>| v.map_or(String::new(), |f| if f.is_finite() { format!("{f:.2}") } else { fmt_sig(f) });
    for m in &models {
        out.push_str(m);
        for s in &sets {
            match reports.iter().find(|r| r.model == *m && r.dataset == *s) {
                Some(r) => {
                    let _ = write!(out, ",{},{}", cell(r.fit[0]), cell(r.fit[1]));
                }
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    out
}
