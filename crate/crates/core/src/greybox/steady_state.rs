use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::trust_region::{trr_least_squares, FitResult, LeastSquaresProblem, TrustRegionConfig};
use crate::error::{ensure, Error, Result};
use crate::motor_sim::{MotorState, Plant};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStatePoint {
    pub voltage: f64,
    pub v_ss: f64,
    /// `K_t · I_ss`
    pub f_ss: f64,
}

/// A run counts as settled once every velocity sample over the trailing
/// `window` seconds lies within `±band` (relative) of their mean, or within
/// `velocity_floor` for a rotor at rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SettlingConfig {
    pub window: f64,
    pub band: f64,
    pub budget: f64,
    pub velocity_floor: f64,
}

impl Default for SettlingConfig {
    fn default() -> Self {
        Self {
            window: 2.0,
            band: 0.005,
            budget: 30.0,
            velocity_floor: 1e-6,
        }
    }
}

/// Holds each voltage from rest until the velocity settles. Voltages are
/// simulated on separate threads; the result keeps the input order.
pub fn run_steady_state_sweep(
    voltages: &[f64],
    plant: &Plant,
    sample_dt: f64,
    integrator_dt: f64,
    cfg: &SettlingConfig,
) -> Result<Vec<SteadyStatePoint>> {
    for &u in voltages {
        ensure(u > 0.0 && u.is_finite(), || format!("sweep voltages must be > 0, got {u}"))?;
    }
    ensure(sample_dt > 0.0 && integrator_dt > 0.0 && integrator_dt <= sample_dt, || {
        format!("need 0 < integrator_dt <= sample_dt, got {integrator_dt} and {sample_dt}")
    })?;
    ensure(cfg.window > 0.0 && cfg.budget >= cfg.window && cfg.band > 0.0 && cfg.velocity_floor >= 0.0, || {
        format!("invalid settling configuration {cfg:?}")
    })?;
    plant.motor.validate()?;
    plant.friction.validate()?;
    std::thread::scope(|scope| {
        let handles: Vec<_> = voltages
            .iter()
            .map(|&u| scope.spawn(move || settle(u, plant, sample_dt, integrator_dt, cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Numerical("sweep worker panicked".into()))))
            .collect()
    })
}

fn settle(u: f64, plant: &Plant, dt: f64, integrator_dt: f64, cfg: &SettlingConfig) -> Result<SteadyStatePoint> {
    let window = (cfg.window / dt).round().max(2.0) as usize;
    let steps = (cfg.budget / dt).round() as usize;
    let mut s = MotorState::ZERO;
    let mut recent: VecDeque<(f64, f64)> = VecDeque::with_capacity(window + 1);
    for k in 0..steps {
        s = plant.advance(&s, u, dt, integrator_dt, k as f64 * dt)?;
        recent.push_back((s.v, s.i));
        if recent.len() > window {
            recent.pop_front();
        }
        if recent.len() == window {
            let mean_v = recent.iter().map(|p| p.0).sum::<f64>() / window as f64;
            let tol = (cfg.band * mean_v.abs()).max(cfg.velocity_floor);
            if recent.iter().all(|p| (p.0 - mean_v).abs() <= tol) {
                let mean_i = recent.iter().map(|p| p.1).sum::<f64>() / window as f64;
                return Ok(SteadyStatePoint {
                    voltage: u,
                    v_ss: mean_v,
                    f_ss: plant.motor.torque_constant * mean_i,
                });
            }
        }
    }
    Err(Error::SettlingTimeout {
        voltage: u,
        budget: cfg.budget,
    })
}

/// Sliding-regime part of the LuGre law: `F_ss(v) = α0 + α1 e^{-(v/v_s)²} + α2 v` for v > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub v_s: f64,
}

impl StaticParams {
    pub fn curve(&self, v: f64) -> f64 {
        let r = v / self.v_s;
        self.alpha0 + self.alpha1 * (-r * r).exp() + self.alpha2 * v
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.alpha0, self.alpha1, self.alpha2, self.v_s]
    }

    pub fn from_slice(p: &[f64]) -> Self {
        Self {
            alpha0: p[0],
            alpha1: p[1],
            alpha2: p[2],
            v_s: p[3],
        }
    }
}

/// Bounds used for the static fit: nonnegative levels, Stribeck velocity in
/// [1e-3, 1e3] rad/s.
pub fn static_fit_config() -> TrustRegionConfig {
    let mut cfg = TrustRegionConfig::bounded(vec![0.0, 0.0, 0.0, 1e-3], vec![f64::INFINITY, f64::INFINITY, f64::INFINITY, 1e3]);
    cfg.max_iterations = 500;
    cfg
}

/// Points slower than this are treated as stuck and left out of the fit.
const MIN_SLIDING_VELOCITY: f64 = 1e-3;

struct StaticProblem {
    v: Vec<f64>,
    f: Vec<f64>,
}

impl LeastSquaresProblem for StaticProblem {
    fn residual(&self, p: &DVector<f64>) -> Result<DVector<f64>> {
        let sp = StaticParams::from_slice(p.as_slice());
        Ok(DVector::from_iterator(self.v.len(), self.v.iter().zip(&self.f).map(|(&v, &f)| sp.curve(v) - f)))
    }

    fn jacobian(&self, p: &DVector<f64>, _: &DVector<f64>) -> Result<DMatrix<f64>> {
        let sp = StaticParams::from_slice(p.as_slice());
        Ok(DMatrix::from_fn(self.v.len(), 4, |k, j| {
            let v = self.v[k];
            let r = v / sp.v_s;
            let e = (-r * r).exp();
            match j {
                0 => 1.0,
                1 => e,
                2 => v,
                _ => sp.alpha1 * e * 2.0 * r * r / sp.v_s,
            }
        }))
    }
}

fn sliding_points(points: &[SteadyStatePoint]) -> Result<StaticProblem> {
    // negative-velocity points are mirrored onto the positive branch
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.v_ss.abs() > MIN_SLIDING_VELOCITY && p.v_ss.is_finite() && p.f_ss.is_finite())
        .map(|p| (p.v_ss.abs(), p.f_ss * p.v_ss.signum()))
        .collect();
    if pts.len() < 6 {
        return Err(Error::IllPosed(format!(
            "{} sliding points; at least 6 spanning the Stribeck knee and the viscous region are needed",
            pts.len()
        )));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (lo, hi) = (pts[0].0, pts[pts.len() - 1].0);
    if hi < 3.0 * lo {
        return Err(Error::IllPosed(format!(
            "sliding velocities only span {lo:.4}..{hi:.4} rad/s; all points lie in one regime"
        )));
    }
    Ok(StaticProblem {
        v: pts.iter().map(|p| p.0).collect(),
        f: pts.iter().map(|p| p.1).collect(),
    })
}

/// Data-driven start: viscous line through the two fastest points, the
/// excess at the slowest point as the Stribeck hump.
fn initial_static(problem: &StaticProblem) -> StaticParams {
    let n = problem.v.len();
    let (v1, f1) = (problem.v[n - 2], problem.f[n - 2]);
    let (v2, f2) = (problem.v[n - 1], problem.f[n - 1]);
    let alpha2 = if v2 > v1 { ((f2 - f1) / (v2 - v1)).max(0.0) } else { 0.0 };
    let alpha0 = (f2 - alpha2 * v2).max(1e-9);
    let v_s = (problem.v[0] * v2).sqrt();
    let excess = problem.f[0] - alpha0 - alpha2 * problem.v[0];
    let alpha1 = (excess * ((problem.v[0] / v_s).powi(2)).exp()).max(1e-3 * alpha0);
    StaticParams { alpha0, alpha1, alpha2, v_s }
}

/// Starting point [`fit_static_params`] uses for these points.
pub fn initial_static_params(points: &[SteadyStatePoint]) -> Result<StaticParams> {
    Ok(initial_static(&sliding_points(points)?))
}

pub fn fit_static_params(points: &[SteadyStatePoint]) -> Result<(StaticParams, FitResult)> {
    let problem = sliding_points(points)?;
    let init = initial_static(&problem);
    run_static(&problem, init, &static_fit_config())
}

pub fn fit_static_params_from(
    points: &[SteadyStatePoint],
    init: StaticParams,
    cfg: &TrustRegionConfig,
) -> Result<(StaticParams, FitResult)> {
    let problem = sliding_points(points)?;
    run_static(&problem, init, cfg)
}

fn run_static(problem: &StaticProblem, init: StaticParams, cfg: &TrustRegionConfig) -> Result<(StaticParams, FitResult)> {
    let start: Vec<f64> = init
        .to_vec()
        .iter()
        .enumerate()
        .map(|(j, &p)| p.clamp(cfg.lower[j], cfg.upper[j]))
        .collect();
    let result = trr_least_squares(problem, &start, cfg)?;
    Ok((StaticParams::from_slice(&result.parameters), result))
}
