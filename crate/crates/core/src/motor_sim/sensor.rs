use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Provenance};
use super::friction::FrictionModel;
use super::params::MotorParams;
use super::plant::{MotorState, Plant};
use crate::error::{ensure, Error, Result};
use crate::signals::{
    differentiate, fmt_sig, generate_excitation, moving_average, quantize, ExcitationSpec,
    TimeSeries,
};

/// Measurement chain: sample period, encoder resolution, velocity smoothing
/// window and current-sensor noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorModel {
    pub sample_dt: f64,
    /// rad; 0 disables quantisation
    pub position_resolution: f64,
    pub velocity_window: usize,
    /// A, standard deviation
    pub current_noise_sd: f64,
}

impl SensorModel {
    /// Hall-sensor drive: 12 ms sampling, 0.095 rad resolution, 10-sample
    /// moving average before differentiation.
    pub const HARDWARE: SensorModel = SensorModel {
        sample_dt: 0.012,
        position_resolution: 0.095,
        velocity_window: 10,
        current_noise_sd: 0.0,
    };

    /// Same sampling, no quantisation or smoothing.
    pub const IDEAL: SensorModel = SensorModel {
        sample_dt: 0.012,
        position_resolution: 0.0,
        velocity_window: 1,
        current_noise_sd: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        ensure(self.sample_dt > 0.0, || format!("sample_dt must be > 0, got {}", self.sample_dt))?;
        ensure(self.position_resolution >= 0.0, || {
            format!("position_resolution must be >= 0, got {}", self.position_resolution)
        })?;
        ensure(self.velocity_window >= 1, || "velocity_window must be >= 1".into())?;
        ensure(self.current_noise_sd >= 0.0, || {
            format!("current_noise_sd must be >= 0, got {}", self.current_noise_sd)
        })
    }

    /// Velocity granularity produced by the chain, rad/s.
    pub fn velocity_resolution(&self) -> f64 {
        self.position_resolution / (self.sample_dt * self.velocity_window as f64)
    }

    /// Quantise, smooth, differentiate. Returns (measured position, velocity).
    pub fn measure_position(&self, x_true: &TimeSeries) -> Result<(TimeSeries, TimeSeries)> {
        let q = if self.position_resolution > 0.0 {
            quantize(x_true, self.position_resolution)?
        } else {
            x_true.clone()
        };
        let x = moving_average(&q, self.velocity_window.min(q.len()))?;
        let v = differentiate(&x)?;
        Ok((x, v))
    }

    pub fn record(&self, p: &mut Provenance) {
        p.set("sensor.sample_dt", fmt_sig(self.sample_dt));
        p.set("sensor.position_resolution", fmt_sig(self.position_resolution));
        p.set("sensor.velocity_window", self.velocity_window);
        p.set("sensor.current_noise_sd", fmt_sig(self.current_noise_sd));
    }
}

/// True states and their derivatives at the sample instants.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<MotorState>,
    pub derivatives: Vec<MotorState>,
}

impl Trajectory {
    pub fn channel(&self, f: impl Fn(&MotorState) -> f64) -> TimeSeries {
        TimeSeries {
            t0: 0.0,
            dt: self.dt,
            values: self.states.iter().map(f).collect(),
        }
    }
}

pub const DEFAULT_INTEGRATOR_DT: f64 = 1e-4;

/// Simulates the plant from rest under `spec` and passes the result through
/// the sensor chain.
pub fn simulate(
    spec: &ExcitationSpec,
    mp: &MotorParams,
    fm: &FrictionModel,
    sm: &SensorModel,
    integrator_dt: f64,
    seed: u64,
) -> Result<Dataset> {
    Ok(simulate_with_truth(spec, mp, fm, sm, integrator_dt, seed)?.0)
}

pub fn simulate_with_truth(
    spec: &ExcitationSpec,
    mp: &MotorParams,
    fm: &FrictionModel,
    sm: &SensorModel,
    integrator_dt: f64,
    seed: u64,
) -> Result<(Dataset, Trajectory)> {
    sm.validate()?;
    let u = generate_excitation(spec, sm.sample_dt)?;
    let (mut ds, truth) = simulate_input(
        &u,
        &Plant::new(*mp, fm.clone()),
        sm,
        integrator_dt,
        seed,
        MotorState::ZERO,
    )?;
    ds.provenance.set("excitation", format!("{:?}", spec.kind));
    ds.provenance.set("excitation.duration", fmt_sig(spec.duration));
    Ok((ds, truth))
}

/// Simulates an arbitrary sampled input (zero-order hold) from `x0`.
pub fn simulate_input(
    u: &TimeSeries,
    plant: &Plant,
    sm: &SensorModel,
    integrator_dt: f64,
    seed: u64,
    x0: MotorState,
) -> Result<(Dataset, Trajectory)> {
    sm.validate()?;
    plant.motor.validate()?;
    plant.friction.validate()?;
    ensure((u.dt - sm.sample_dt).abs() <= 1e-12 * sm.sample_dt, || {
        format!("input step {} differs from sensor sample_dt {}", u.dt, sm.sample_dt)
    })?;
    ensure(integrator_dt > 0.0 && integrator_dt <= sm.sample_dt, || {
        format!("integrator_dt must be in (0, sample_dt], got {integrator_dt}")
    })?;
    let ratio = sm.sample_dt / integrator_dt;
    ensure((ratio - ratio.round()).abs() <= 1e-6 * ratio, || {
        format!("integrator_dt {integrator_dt} does not divide sample_dt {}", sm.sample_dt)
    })?;
    ensure(u.len() >= 3, || "input needs at least 3 samples".into())?;

    let n = u.len();
    let mut states = Vec::with_capacity(n);
    let mut derivatives = Vec::with_capacity(n);
    let mut s = x0;
    for k in 0..n {
        states.push(s);
        derivatives.push(plant.derivative(&s, u.values[k]));
        if k + 1 < n {
            s = plant.advance(&s, u.values[k], sm.sample_dt, integrator_dt, u.time(k))?;
        }
    }
    let truth = Trajectory {
        dt: sm.sample_dt,
        states,
        derivatives,
    };

    let x_true = u.with_values(truth.states.iter().map(|s| s.x).collect());
    let (x, xdot) = sm.measure_position(&x_true)?;
    let z = u.with_values(truth.states.iter().map(|s| s.z).collect());
    let mut current: Vec<f64> = truth.states.iter().map(|s| s.i).collect();
    if sm.current_noise_sd > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sm.current_noise_sd)
            .map_err(|e| Error::Validation(format!("noise distribution: {e}")))?;
        for c in &mut current {
            *c += noise.sample(&mut rng);
        }
    }
    let i = u.with_values(current);

    let mut prov = Provenance::new();
    record_plant(&mut prov, plant);
    sm.record(&mut prov);
    prov.set("integrator", "rk4");
    prov.set("integrator_dt", fmt_sig(integrator_dt));
    prov.set("seed", seed);
    prov.set("samples", n);
    prov.set("x_channel", "moving average of quantised position");
    let ds = Dataset::new(u.clone(), x, xdot, z, i, prov)?;
    Ok((ds, truth))
}

pub fn record_plant(p: &mut Provenance, plant: &Plant) {
    let mp = &plant.motor;
    p.set("motor.inertia", fmt_sig(mp.inertia));
    p.set("motor.inertia_source", "config default (not derived from datasheet)");
    p.set("motor.torque_constant", fmt_sig(mp.torque_constant));
    p.set("motor.back_emf_constant", fmt_sig(mp.back_emf_constant));
    p.set("motor.resistance", fmt_sig(mp.resistance));
    p.set("motor.inductance", fmt_sig(mp.inductance));
    p.set("motor.inductance_source", "config default (not derived from datasheet)");
    p.set("friction.model", plant.friction.name());
    match &plant.friction {
        FrictionModel::Viscous { b } => p.set("friction.b", fmt_sig(*b)),
        FrictionModel::Dahl(d) => {
            p.set("friction.stiffness", fmt_sig(d.stiffness));
            p.set("friction.coulomb", fmt_sig(d.coulomb));
        }
        FrictionModel::LuGre(l) => {
            for (k, v) in [
                ("alpha0", l.alpha0),
                ("alpha1", l.alpha1),
                ("alpha2", l.alpha2),
                ("v_s", l.v_s),
                ("sigma0", l.sigma0),
                ("sigma1", l.sigma1),
            ] {
                p.set(format!("friction.{k}"), fmt_sig(v));
            }
        }
        FrictionModel::Learned(_) => p.set("friction.source", "sindyc"),
    }
}
