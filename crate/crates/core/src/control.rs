//! Closed-loop speed control with model-based friction feed-forward.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::motor_sim::{LuGreParams, MotorParams, MotorState, Plant, SensorModel};
use crate::plot::Plot;
use crate::signals::{fmt_sig, TimeSeries, MAX_VOLTAGE};
use crate::sindyc::LearnedFriction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerGains {
    /// V·s/rad
    pub kp: f64,
    /// V/rad
    pub ki: f64,
    /// symmetric output limit, V
    pub clamp: f64,
    /// freeze the integrator while the output is saturated
    pub anti_windup: bool,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            kp: 0.05,
            ki: 0.5,
            clamp: MAX_VOLTAGE,
            anti_windup: true,
        }
    }
}

impl ControllerGains {
    pub fn validate(&self) -> Result<()> {
        ensure(self.kp >= 0.0 && self.ki >= 0.0 && self.kp.is_finite() && self.ki.is_finite(), || {
            format!("gains must be >= 0, got kp = {}, ki = {}", self.kp, self.ki)
        })?;
        ensure(self.clamp > 0.0 && self.clamp <= MAX_VOLTAGE, || {
            format!("output clamp must be in (0, {MAX_VOLTAGE}], got {}", self.clamp)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FrictionSource {
    LuGre(LuGreParams),
    Learned(Arc<LearnedFriction>),
}

impl FrictionSource {
    pub fn name(&self) -> &'static str {
        match self {
            FrictionSource::LuGre(_) => "lugre",
            FrictionSource::Learned(_) => "sindyc",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompensatorConfig {
    pub source: FrictionSource,
    /// fraction of the estimated friction that is compensated, in [0, 1]
    pub lambda: f64,
    /// add the winding-inductance term `L dIc/dt`
    pub include_inductive_term: bool,
    /// use `dIc/dt` without the inductance factor, as the compensation law is
    /// sometimes printed; dimensionally inconsistent, kept for comparison
    pub literal_inductive_term: bool,
}

impl CompensatorConfig {
    pub fn new(source: FrictionSource, lambda: f64) -> Self {
        Self {
            source,
            lambda,
            include_inductive_term: true,
            literal_inductive_term: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure((0.0..=1.0).contains(&self.lambda), || format!("lambda must be in [0, 1], got {}", self.lambda))?;
        if let FrictionSource::LuGre(p) = &self.source {
            p.validate()?;
        }
        Ok(())
    }
}

/// Voltage that drives the current needed to cancel the estimated friction:
/// `Ic = F/Kt`, `Vc = λ (L dIc/dt + R Ic)`.
pub fn compensation_voltage(f_hat: f64, f_hat_dot: f64, mp: &MotorParams, cfg: &CompensatorConfig) -> f64 {
    if cfg.lambda == 0.0 {
        return 0.0;
    }
    let ic = f_hat / mp.torque_constant;
    let ic_dot = f_hat_dot / mp.torque_constant;
    let inductive = match (cfg.include_inductive_term, cfg.literal_inductive_term) {
        (false, _) => 0.0,
        (true, false) => mp.inductance * ic_dot,
        (true, true) => ic_dot,
    };
    cfg.lambda * (inductive + mp.resistance * ic)
}

/// Runs the friction model alongside the loop on measured signals.
#[derive(Debug, Clone)]
pub struct FrictionEstimator {
    source: FrictionSource,
    dt: f64,
    z: f64,
    previous: Option<f64>,
    /// steps at which the estimate was not finite and the output was forced to 0
    pub faults: usize,
}

/// Sub-steps used for the learned deformation dynamics per control period.
const LEARNED_SUBSTEPS: usize = 20;

impl FrictionEstimator {
    pub fn new(source: FrictionSource, dt: f64) -> Self {
        Self {
            source,
            dt,
            z: 0.0,
            previous: None,
            faults: 0,
        }
    }

    pub fn deformation(&self) -> f64 {
        self.z
    }

    /// Advances the internal deformation over one control period with the
    /// measured signals held, and returns `(F_hat, dF_hat/dt)`. The rate is a
    /// backward difference at the control rate (zero on the first call). A
    /// non-finite estimate resets the estimator and yields `(0, 0)`.
    pub fn update(&mut self, x: f64, v: f64, i: f64, u: f64) -> (f64, f64) {
        let (z, f) = match &self.source {
            FrictionSource::LuGre(p) => {
                let rate = p.sigma0 * v.abs() / p.stribeck(v);
                let z = if rate * self.dt < 1e-12 {
                    self.z + v * self.dt
                } else {
                    let z_eq = v / rate;
                    z_eq + (self.z - z_eq) * (-rate * self.dt).exp()
                };
                let zdot = v - rate * z;
                (z, p.sigma0 * z + p.sigma1 * zdot + p.alpha2 * v)
            }
            FrictionSource::Learned(l) => {
                let h = self.dt / LEARNED_SUBSTEPS as f64;
                let mut z = self.z;
                for _ in 0..LEARNED_SUBSTEPS {
                    let k1 = l.rate(x, v, z, i, u);
                    let k2 = l.rate(x, v, z + 0.5 * h * k1, i, u);
                    let k3 = l.rate(x, v, z + 0.5 * h * k2, i, u);
                    let k4 = l.rate(x, v, z + h * k3, i, u);
                    z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                }
                (z, l.torque(v, z))
            }
        };
        if !(z.is_finite() && f.is_finite()) {
            self.faults += 1;
            self.z = 0.0;
            self.previous = None;
            return (0.0, 0.0);
        }
        self.z = z;
        let f_dot = self.previous.map_or(0.0, |p| (f - p) / self.dt);
        self.previous = Some(f);
        (f, f_dot)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopResult {
    pub reference: TimeSeries,
    /// velocity as seen by the controller
    pub velocity: TimeSeries,
    pub voltage: TimeSeries,
    pub compensation: TimeSeries,
    pub rms_error: f64,
    pub max_abs_error: f64,
    pub faults: usize,
}

impl ClosedLoopResult {
    pub fn error(&self, k: usize) -> f64 {
        self.reference.values[k] - self.velocity.values[k]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,ref,v,u,vc,err\n");
        for k in 0..self.reference.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_sig(self.reference.time(k)),
                fmt_sig(self.reference.values[k]),
                fmt_sig(self.velocity.values[k]),
                fmt_sig(self.voltage.values[k]),
                fmt_sig(self.compensation.values[k]),
                fmt_sig(self.error(k))
            );
        }
        out
    }

    /// Largest shortfall below a positive reference once the velocity has
    /// first reached 90 % of it, and the time to get there.
    pub fn step_metrics(&self) -> StepMetrics {
        let mut rise = None;
        let mut shortfall: f64 = 0.0;
        for k in 0..self.reference.len() {
            let r = self.reference.values[k];
            if r <= 0.0 {
                continue;
            }
            match rise {
                None if self.velocity.values[k] >= 0.9 * r => rise = Some(self.reference.time(k)),
                Some(_) => shortfall = shortfall.max(r - self.velocity.values[k]),
                None => {}
            }
        }
        let start = self
            .reference
            .values
            .iter()
            .position(|&r| r > 0.0)
            .map_or(0.0, |k| self.reference.time(k));
        StepMetrics {
            rise_time: rise.map(|t| t - start),
            max_shortfall: shortfall,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    pub rise_time: Option<f64>,
    pub max_shortfall: f64,
}

/// `amplitude sin(2π f t)` on the control grid.
pub fn sine_reference(amplitude: f64, frequency: f64, duration: f64, dt: f64) -> Result<TimeSeries> {
    let n = (duration / dt).ceil() as usize;
    TimeSeries::new(0.0, dt, (0..n).map(|k| amplitude * (std::f64::consts::TAU * frequency * k as f64 * dt).sin()).collect())
}

/// Zero until `t_step`, then `level`.
pub fn step_reference(level: f64, t_step: f64, duration: f64, dt: f64) -> Result<TimeSeries> {
    let n = (duration / dt).ceil() as usize;
    TimeSeries::new(0.0, dt, (0..n).map(|k| if k as f64 * dt >= t_step { level } else { 0.0 }).collect())
}

/// Quantised, moving-averaged position differentiated backwards: the causal
/// form of the offline sensor chain.
struct OnlineVelocity {
    resolution: f64,
    window: usize,
    dt: f64,
    history: std::collections::VecDeque<f64>,
    previous_mean: Option<f64>,
}

impl OnlineVelocity {
    fn new(sm: &SensorModel) -> Self {
        Self {
            resolution: sm.position_resolution,
            window: sm.velocity_window,
            dt: sm.sample_dt,
            history: std::collections::VecDeque::with_capacity(sm.velocity_window + 1),
            previous_mean: None,
        }
    }

    fn measure(&mut self, x: f64) -> (f64, f64) {
        let q = if self.resolution > 0.0 { self.resolution * (x / self.resolution).round() } else { x };
        self.history.push_back(q);
        if self.history.len() > self.window {
            self.history.pop_front();
        }
        let mean = self.history.iter().sum::<f64>() / self.history.len() as f64;
        let v = self.previous_mean.map_or(0.0, |p| (mean - p) / self.dt);
        self.previous_mean = Some(mean);
        (mean, v)
    }
}

/// PI speed loop on the measured velocity, optionally with friction
/// compensation added to the controller output, over the reference grid.
pub fn run_closed_loop(
    reference: &TimeSeries,
    plant: &Plant,
    sensor: &SensorModel,
    integrator_dt: f64,
    gains: &ControllerGains,
    compensator: Option<&CompensatorConfig>,
) -> Result<ClosedLoopResult> {
    gains.validate()?;
    sensor.validate()?;
    plant.motor.validate()?;
    plant.friction.validate()?;
    ensure((reference.dt - sensor.sample_dt).abs() <= 1e-12 * sensor.sample_dt, || {
        format!("reference step {} differs from control period {}", reference.dt, sensor.sample_dt)
    })?;
    if let Some(c) = compensator {
        c.validate()?;
    }
    let dt = sensor.sample_dt;
    let n = reference.len();
    let mut estimator = compensator.map(|c| FrictionEstimator::new(c.source.clone(), dt));
    let mut meter = OnlineVelocity::new(sensor);
    let mut state = MotorState::ZERO;
    let mut integral = 0.0;
    let (mut vel, mut volt, mut comp) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let mut last_u = 0.0;
    for k in 0..n {
        let (x_meas, v_meas) = meter.measure(state.x);
        let e = reference.values[k] - v_meas;
        let vc = match (compensator, estimator.as_mut()) {
            (Some(c), Some(est)) => {
                let (f, f_dot) = est.update(x_meas, v_meas, state.i, last_u);
                compensation_voltage(f, f_dot, &plant.motor, c)
            }
            _ => 0.0,
        };
        let trial = integral + e * dt;
        let unclamped = gains.kp * e + gains.ki * trial + vc;
        if !(gains.anti_windup && unclamped.abs() > gains.clamp) {
            integral = trial;
        }
        let u = (gains.kp * e + gains.ki * integral + vc).clamp(-gains.clamp, gains.clamp);
        vel.push(v_meas);
        volt.push(u);
        comp.push(vc);
        last_u = u;
        if k + 1 < n {
            state = plant.advance(&state, u, dt, integrator_dt, reference.time(k))?;
        }
    }
    let errors: Vec<f64> = (0..n).map(|k| reference.values[k] - vel[k]).collect();
    let rms_error = (errors.iter().map(|e| e * e).sum::<f64>() / n as f64).sqrt();
    let max_abs_error = errors.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    Ok(ClosedLoopResult {
        velocity: reference.with_values(vel),
        voltage: reference.with_values(volt),
        compensation: reference.with_values(comp),
        reference: reference.clone(),
        rms_error,
        max_abs_error,
        faults: estimator.map_or(0, |e| e.faults),
    })
}

/// Velocity traces of several runs over their common reference.
pub fn overlay_svg(title: &str, runs: &[(&str, &ClosedLoopResult)]) -> String {
    let Some((_, first)) = runs.first() else {
        return Plot::new(title, "t [s]", "velocity [rad/s]").to_svg();
    };
    let t: Vec<f64> = first.reference.times().collect();
    let mut plot = Plot::new(title, "t [s]", "velocity [rad/s]").line("reference", &t, &first.reference.values);
    for (label, r) in runs {
        let tr: Vec<f64> = r.velocity.times().collect();
        plot = plot.line(&format!("{label} (rms {:.3})", r.rms_error), &tr, &r.velocity.values);
    }
    plot.to_svg()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motor_sim::FrictionModel;
    use crate::sindyc::{Term, N_TERMS};

    const T2: LuGreParams = LuGreParams::REFERENCE;

    fn lugre_plant() -> Plant {
        Plant::new(MotorParams::default(), FrictionModel::LuGre(T2))
    }

    fn cfg(lambda: f64) -> CompensatorConfig {
        CompensatorConfig::new(FrictionSource::LuGre(T2), lambda)
    }

    #[test]
    fn compensation_voltage_examples() {
        let mp = MotorParams::default();
        assert_eq!(compensation_voltage(0.0, 0.0, &mp, &cfg(1.0)), 0.0);
        let v = compensation_voltage(mp.torque_constant, 0.0, &mp, &cfg(1.0));
        assert!((v - mp.resistance).abs() < 1e-15);
        assert_eq!(compensation_voltage(0.3, 50.0, &mp, &cfg(0.0)), 0.0);
        let with_l = compensation_voltage(0.0, mp.torque_constant, &mp, &cfg(1.0));
        assert!((with_l - mp.inductance).abs() < 1e-18);
        let mut literal = cfg(1.0);
        literal.literal_inductive_term = true;
        assert!((compensation_voltage(0.0, mp.torque_constant, &mp, &literal) - 1.0).abs() < 1e-15);
        let mut off = cfg(1.0);
        off.include_inductive_term = false;
        assert_eq!(compensation_voltage(0.0, 5.0, &mp, &off), 0.0);
    }

    #[test]
    fn estimator_at_rest_and_in_steady_sliding() {
        let mut est = FrictionEstimator::new(FrictionSource::LuGre(T2), 0.012);
        for _ in 0..10 {
            assert_eq!(est.update(0.0, 0.0, 0.0, 0.0), (0.0, 0.0));
        }
        for _ in 0..2000 {
            est.update(0.0, 1.0, 0.0, 0.0);
        }
        let (f, fd) = est.update(0.0, 1.0, 0.0, 0.0);
        assert!((f - 0.0978517).abs() < 1e-6, "{f}");
        assert!(fd.abs() < 1e-9);
        for _ in 0..2000 {
            est.update(0.0, -1.0, 0.0, 0.0);
        }
        let (fneg, _) = est.update(0.0, -1.0, 0.0, 0.0);
        assert!((fneg + f).abs() < 1e-12);
    }

    #[test]
    fn estimator_fault_latches_to_zero() {
        let mut row = [0.0; N_TERMS];
        row[Term::Z.index()] = 1.0;
        let mut rate = [0.0; N_TERMS];
        rate[Term::AbsZZ2.index()] = 1e300;
        let l = LearnedFriction::new(100.0, 4e-4, &row, &rate);
        let mut est = FrictionEstimator::new(FrictionSource::Learned(Arc::new(l)), 0.012);
        est.z = 1e10;
        assert_eq!(est.update(0.0, 1.0, 0.0, 0.0), (0.0, 0.0));
        assert_eq!(est.faults, 1);
        assert_eq!(est.deformation(), 0.0);
    }

    #[test]
    fn zero_reference_stays_at_rest() {
        let r = TimeSeries::new(0.0, 0.012, vec![0.0; 200]).unwrap();
        let out = run_closed_loop(&r, &lugre_plant(), &SensorModel::HARDWARE, 1e-4, &ControllerGains::default(), None).unwrap();
        assert_eq!(out.rms_error, 0.0);
        assert!(out.voltage.values.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn zero_lambda_is_bit_identical() {
        let r = sine_reference(10.0, 0.5, 4.0, 0.012).unwrap();
        let g = ControllerGains::default();
        let none = run_closed_loop(&r, &lugre_plant(), &SensorModel::HARDWARE, 1e-4, &g, None).unwrap();
        let zero = run_closed_loop(&r, &lugre_plant(), &SensorModel::HARDWARE, 1e-4, &g, Some(&cfg(0.0))).unwrap();
        assert_eq!(none, zero);
        assert_eq!(none.to_csv(), zero.to_csv());
    }

    #[test]
    fn output_respects_clamp_and_freezes_integrator() {
        let r = step_reference(1000.0, 0.0, 1.0, 0.012).unwrap();
        let g = ControllerGains { clamp: 2.0, ..Default::default() };
        let out = run_closed_loop(&r, &lugre_plant(), &SensorModel::HARDWARE, 1e-4, &g, None).unwrap();
        assert!(out.voltage.values.iter().all(|u| u.abs() <= 2.0));
        // without anti-windup the integrator keeps growing; with it the output
        // comes off the limit as soon as the error sign allows
        let r2 = step_reference(1000.0, 0.0, 1.0, 0.012).unwrap();
        let mut back = r2.values.clone();
        for v in back.iter_mut().skip(40) {
            *v = 0.0;
        }
        let r2 = r2.with_values(back);
        let frozen = run_closed_loop(&r2, &lugre_plant(), &SensorModel::HARDWARE, 1e-4, &g, None).unwrap();
        let wound = run_closed_loop(&r2, &lugre_plant(), &SensorModel::HARDWARE, 1e-4, &ControllerGains { anti_windup: false, ..g }, None).unwrap();
        let first_off = |o: &ClosedLoopResult| o.voltage.values.iter().skip(40).position(|u| *u < 2.0).unwrap_or(usize::MAX);
        assert!(first_off(&frozen) < first_off(&wound));
    }

    #[test]
    fn lugre_compensation_reduces_tracking_error() {
        let r = sine_reference(10.0, 0.5, 8.0, 0.012).unwrap();
        let g = ControllerGains::default();
        let none = run_closed_loop(&r, &lugre_plant(), &SensorModel::HARDWARE, 1e-4, &g, None).unwrap();
        let comp = run_closed_loop(&r, &lugre_plant(), &SensorModel::HARDWARE, 1e-4, &g, Some(&cfg(0.8))).unwrap();
        assert!(comp.rms_error < none.rms_error, "{} vs {}", comp.rms_error, none.rms_error);
    }

    #[test]
    fn step_shortfall_is_smaller_with_compensation() {
        let r = step_reference(10.0, 0.5, 6.0, 0.012).unwrap();
        let g = ControllerGains::default();
        let none = run_closed_loop(&r, &lugre_plant(), &SensorModel::HARDWARE, 1e-4, &g, None).unwrap();
        let comp = run_closed_loop(&r, &lugre_plant(), &SensorModel::HARDWARE, 1e-4, &g, Some(&cfg(0.8))).unwrap();
        let (a, b) = (none.step_metrics(), comp.step_metrics());
        assert!(b.rise_time.unwrap() <= a.rise_time.unwrap(), "{a:?} {b:?}");
    }

    #[test]
    fn csv_and_svg() {
        let r = sine_reference(1.0, 1.0, 0.1, 0.012).unwrap();
        let out = run_closed_loop(&r, &lugre_plant(), &SensorModel::HARDWARE, 1e-4, &ControllerGains::default(), None).unwrap();
        let csv = out.to_csv();
        assert!(csv.starts_with("t,ref,v,u,vc,err\n"));
        assert_eq!(csv.lines().count(), r.len() + 1);
        let svg = overlay_svg("x", &[("none", &out)]);
        assert!(svg.contains("none (rms"));
    }

    #[test]
    fn rejects_bad_settings() {
        let r = sine_reference(1.0, 1.0, 0.1, 0.01).unwrap();
        assert!(run_closed_loop(&r, &lugre_plant(), &SensorModel::HARDWARE, 1e-4, &ControllerGains::default(), None).is_err());
        let r = sine_reference(1.0, 1.0, 0.1, 0.012).unwrap();
        let g = ControllerGains { clamp: 30.0, ..Default::default() };
        assert!(run_closed_loop(&r, &lugre_plant(), &SensorModel::HARDWARE, 1e-4, &g, None).is_err());
        assert!(run_closed_loop(&r, &lugre_plant(), &SensorModel::HARDWARE, 1e-4, &ControllerGains::default(), Some(&cfg(1.5))).is_err());
    }
}
