//! End-to-end workflow: run configuration, signal generation, the three
//! model fits, grid evaluation and the compensation comparison.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::control::{
    run_closed_loop, sine_reference, step_reference, ClosedLoopResult, CompensatorConfig, ControllerGains,
    FrictionSource,
};
use crate::error::{ensure, Error, Result};
use crate::greybox::{
    dynamic_fit_config, fit_dynamic_params, fit_static_params_from, init_dynamic_params, initial_static_params,
    run_steady_state_sweep, static_fit_config, DynamicFit, FitResult, SettlingConfig, StaticParams,
    SteadyStatePoint,
};
use crate::metrics::FitReport;
use crate::models::{free_run, score_run, MotorModel};
use crate::motor_sim::{
    sidecar_path, simulate_with_truth, Dataset, FrictionModel, LuGreParams, MotorParams, Plant, Provenance,
    SensorModel, Trajectory,
};
use crate::signals::{fmt_sig, ExcitationKind, ExcitationSpec};
use crate::sindyc::{
    estimate_derivatives, extract_friction, lasso_fit, threshold_iteratively, validation_fit, CandidateLibrary,
    SindycModel, ThresholdConfig, ThresholdStep, TrainingRecord,
};
use crate::tde::{extract_internal_state, Extraction};

pub const SIGNAL_IDS: [&str; 4] = ["a", "b", "c", "d"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    pub motor: MotorParams,
    pub friction: FrictionModel,
    pub integrator_dt: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            motor: MotorParams::default(),
            friction: FrictionModel::LuGre(LuGreParams::REFERENCE),
            integrator_dt: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalSet {
    /// training
    pub a: ExcitationSpec,
    pub b: ExcitationSpec,
    pub c: ExcitationSpec,
    pub d: ExcitationSpec,
}

fn chirp(amp_hi: f64, f_lo: f64, f_hi: f64, duration: f64) -> ExcitationSpec {
    ExcitationSpec::new(ExcitationKind::Chirp { amp_lo: 0.0, amp_hi, f_lo, f_hi }, duration)
}

impl Default for SignalSet {
    fn default() -> Self {
        let levels = [2.0, 4.0, 6.0, 8.0, 10.0, 7.0, 5.0, 3.0, 1.0, 0.0];
        Self {
            a: chirp(12.0, 0.1, 1.0, 200.0),
            b: chirp(6.0, 0.05, 1.0, 200.0),
            c: chirp(0.5, 0.25, 1.0, 200.0),
            d: ExcitationSpec::new(ExcitationKind::Steps { steps: levels.iter().map(|&l| (20.0, l)).collect() }, 200.0),
        }
    }
}

impl SignalSet {
    pub fn get(&self, id: &str) -> Result<&ExcitationSpec> {
        match id {
            "a" => Ok(&self.a),
            "b" => Ok(&self.b),
            "c" => Ok(&self.c),
            "d" => Ok(&self.d),
            other => Err(Error::Validation(format!("unknown signal `{other}`, expected one of a, b, c, d"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TdeConfig {
    pub m: usize,
    pub threshold: f64,
}

impl Default for TdeConfig {
    fn default() -> Self {
        Self { m: 60, threshold: 0.001 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SindycConfig {
    pub a: f64,
    pub min_fit_drop: f64,
    /// replaces thresholding by a single lasso fit when set
    pub lasso_alpha: Option<f64>,
    pub substeps: usize,
}

impl Default for SindycConfig {
    fn default() -> Self {
        Self {
            a: 100.0,
            min_fit_drop: 0.5,
            lasso_alpha: None,
            substeps: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreyboxConfig {
    /// constant voltages of the steady-state sweep, V
    pub sweep_voltages: Vec<f64>,
    pub settling: SettlingConfig,
    /// V/s
    pub ramp_gradients: Vec<f64>,
    pub ramp_duration: f64,
    /// transient experiment for the stiffness and damping refinement
    pub dynamic: ExcitationSpec,
    /// sensor used for the ramp and transient experiments
    pub sensor: SensorModel,
    /// start of the refinement when the ramp initialisation fails
    pub fallback_sigma0: f64,
    pub fallback_sigma1: f64,
    pub static_max_iterations: usize,
    pub dynamic_max_iterations: usize,
    pub sigma0_bounds: [f64; 2],
    pub sigma1_bounds: [f64; 2],
}

impl Default for GreyboxConfig {
    fn default() -> Self {
        Self {
            sweep_voltages: vec![0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.8, 1.0, 1.5, 2.0, 3.0],
            settling: SettlingConfig::default(),
            ramp_gradients: vec![0.0095, 0.012],
            ramp_duration: 6.0,
            dynamic: ExcitationSpec::new(
                ExcitationKind::Chirp { amp_lo: 0.3, amp_hi: 1.0, f_lo: 0.2, f_hi: 2.0 },
                10.0,
            ),
            sensor: SensorModel { sample_dt: 1e-4, ..SensorModel::IDEAL },
            fallback_sigma0: 100.0,
            fallback_sigma1: 1.0,
            static_max_iterations: 500,
            dynamic_max_iterations: 100,
            sigma0_bounds: [1.0, 1e5],
            sigma1_bounds: [0.0, 1e3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSpec {
    Sine { amplitude: f64, frequency: f64 },
    Step { level: f64, t_step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    pub gains: ControllerGains,
    pub lambda: f64,
    pub include_inductive_term: bool,
    pub literal_inductive_term: bool,
    pub reference: ReferenceSpec,
    pub duration: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            gains: ControllerGains::default(),
            lambda: 0.8,
            include_inductive_term: true,
            literal_inductive_term: false,
            reference: ReferenceSpec::Sine { amplitude: 10.0, frequency: 0.5 },
            duration: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub plant: PlantConfig,
    #[serde(default = "hardware_sensor")]
    pub sensor: SensorModel,
    pub signals: SignalSet,
    pub tde: TdeConfig,
    pub sindyc: SindycConfig,
    pub greybox: GreyboxConfig,
    pub control: ControlConfig,
}

fn hardware_sensor() -> SensorModel {
    SensorModel::HARDWARE
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out: PathBuf::from("out"),
            plant: PlantConfig::default(),
            sensor: SensorModel::HARDWARE,
            signals: SignalSet::default(),
            tde: TdeConfig::default(),
            sindyc: SindycConfig::default(),
            greybox: GreyboxConfig::default(),
            control: ControlConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.motor.validate()?;
        self.plant.friction.validate()?;
        self.sensor.validate()?;
        self.greybox.sensor.validate()?;
        ensure(self.plant.integrator_dt > 0.0 && self.plant.integrator_dt <= self.sensor.sample_dt, || {
            format!("integrator_dt must be in (0, sample_dt], got {}", self.plant.integrator_dt)
        })?;
        for id in SIGNAL_IDS {
            self.signals.get(id)?.validate()?;
        }
        ensure(self.tde.m >= 2, || format!("tde.m must be >= 2, got {}", self.tde.m))?;
        ensure(self.tde.threshold > 0.0 && self.tde.threshold < 1.0, || {
            format!("tde.threshold must be in (0, 1), got {}", self.tde.threshold)
        })?;
        CandidateLibrary::new(self.sindyc.a)?;
        ensure(self.sindyc.min_fit_drop >= 0.0, || "sindyc.min_fit_drop must be >= 0".into())?;
        ensure(self.sindyc.substeps >= 1, || "sindyc.substeps must be >= 1".into())?;
        if let Some(alpha) = self.sindyc.lasso_alpha {
            ensure(alpha >= 0.0 && alpha.is_finite(), || format!("sindyc.lasso_alpha must be >= 0, got {alpha}"))?;
        }
        let g = &self.greybox;
        ensure(!g.sweep_voltages.is_empty() && g.sweep_voltages.iter().all(|&u| u > 0.0), || {
            "greybox.sweep_voltages must be non-empty and positive".into()
        })?;
        ensure(g.ramp_gradients.iter().all(|&r| r > 0.0) && g.ramp_duration > 0.0, || {
            "greybox ramps must have positive gradients and duration".into()
        })?;
        g.dynamic.validate()?;
        for (name, b) in [("sigma0_bounds", g.sigma0_bounds), ("sigma1_bounds", g.sigma1_bounds)] {
            ensure(b[0] >= 0.0 && b[0] < b[1], || format!("greybox.{name} must satisfy 0 <= lo < hi"))?;
        }
        self.control.gains.validate()?;
        ensure((0.0..=1.0).contains(&self.control.lambda), || {
            format!("control.lambda must be in [0, 1], got {}", self.control.lambda)
        })?;
        ensure(self.control.duration > 0.0, || "control.duration must be > 0".into())
    }

    pub fn plant(&self) -> Plant {
        Plant::new(self.plant.motor, self.plant.friction.clone())
    }

    /// Seed used for signal `id`, distinct per signal.
    pub fn signal_seed(&self, id: &str) -> u64 {
        let k = SIGNAL_IDS.iter().position(|s| *s == id).unwrap_or(0) as u64;
        self.seed.wrapping_mul(31).wrapping_add(k)
    }

    pub fn compensator(&self, source: FrictionSource) -> CompensatorConfig {
        CompensatorConfig {
            source,
            lambda: self.control.lambda,
            include_inductive_term: self.control.include_inductive_term,
            literal_inductive_term: self.control.literal_inductive_term,
        }
    }
}

pub fn simulate_signal(cfg: &RunConfig, id: &str) -> Result<(Dataset, Trajectory)> {
    let spec = cfg.signals.get(id)?;
    let (mut ds, truth) = simulate_with_truth(
        spec,
        &cfg.plant.motor,
        &cfg.plant.friction,
        &cfg.sensor,
        cfg.plant.integrator_dt,
        cfg.signal_seed(id),
    )?;
    ds.provenance.set("signal", id);
    Ok((ds, truth))
}

/// Several signals, one thread each, in the order given.
pub fn simulate_signals(cfg: &RunConfig, ids: &[&str]) -> Result<Vec<(Dataset, Trajectory)>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = ids.iter().map(|id| s.spawn(move || simulate_signal(cfg, id))).collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    })
}

/// Extracts the deformation estimate from the velocity channel and returns
/// the dataset cut to the extracted length with `z` replaced.
pub fn with_extracted_state(cfg: &RunConfig, ds: &Dataset) -> Result<(Dataset, Extraction)> {
    let ex = extract_internal_state(&ds.xdot, cfg.tde.m, cfg.tde.threshold)?;
    let mut out = ds.with_z(ex.z_hat.clone())?;
    out.provenance.set("z_channel", format!("delay-embedding estimate, m = {}, components {}", ex.m, ex.describe_range()));
    Ok((out, ex))
}

#[derive(Debug, Clone)]
pub struct SindycFit {
    pub model: SindycModel,
    pub history: Vec<ThresholdStep>,
}

/// Sparse fit on `train` (with extracted z) selected against `validation`.
pub fn fit_sindyc(cfg: &RunConfig, train: &Dataset, validation: &Dataset, z_scale: f64) -> Result<SindycFit> {
    let library = CandidateLibrary::new(cfg.sindyc.a)?;
    let theta = library.build(train)?;
    let xdot = estimate_derivatives(train)?;
    if let Some(alpha) = cfg.sindyc.lasso_alpha {
        let mut model = SindycModel::new(library, lasso_fit(&theta, &xdot, alpha)?, z_scale)?;
        let fit = validation_fit(&model, validation, cfg.sindyc.substeps)?;
        model.training = TrainingRecord {
            validation_fit: fit,
            full_model_fit: fit,
            accepted_removals: 0,
        };
        return Ok(SindycFit { model, history: Vec::new() });
    }
    let tcfg = ThresholdConfig {
        library,
        z_scale,
        min_fit_drop: cfg.sindyc.min_fit_drop,
        substeps: cfg.sindyc.substeps,
    };
    let out = threshold_iteratively(&theta, &xdot, validation, &tcfg)?;
    Ok(SindycFit {
        model: out.model,
        history: out.history,
    })
}

#[derive(Debug, Clone)]
pub struct LuGreIdentification {
    pub points: Vec<SteadyStatePoint>,
    pub statics: StaticParams,
    pub static_fit: FitResult,
    /// `(σ0, σ1)` the refinement started from
    pub dynamic_init: (f64, f64),
    /// set when the ramp initialisation failed and the fallback was used
    pub init_warning: Option<String>,
    pub dynamic: DynamicFit,
    pub params: LuGreParams,
}

impl LuGreIdentification {
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.params).expect("parameters serialise")
    }

    pub fn sweep_csv(&self) -> String {
        let mut out = String::from("voltage,v_ss,f_ss\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", fmt_sig(p.voltage), fmt_sig(p.v_ss), fmt_sig(p.f_ss)));
        }
        out
    }
}

/// Steady-state sweep, static fit, ramp initialisation and transient
/// refinement on the configured plant. `init` replaces the data-driven
/// starting points of both fits.
pub fn identify_lugre(cfg: &RunConfig, init: Option<LuGreParams>) -> Result<LuGreIdentification> {
    let plant = cfg.plant();
    let g = &cfg.greybox;
    let points = run_steady_state_sweep(
        &g.sweep_voltages,
        &plant,
        cfg.sensor.sample_dt,
        cfg.plant.integrator_dt,
        &g.settling,
    )?;
    let mut scfg = static_fit_config();
    scfg.max_iterations = g.static_max_iterations;
    let static_init = match init {
        Some(p) => StaticParams { alpha0: p.alpha0, alpha1: p.alpha1, alpha2: p.alpha2, v_s: p.v_s },
        None => initial_static_params(&points)?,
    };
    let (statics, static_fit) = fit_static_params_from(&points, static_init, &scfg)?;
    let experiment = |spec: &ExcitationSpec, seed: u64| -> Result<Dataset> {
        Ok(simulate_with_truth(spec, &plant.motor, &plant.friction, &g.sensor, cfg.plant.integrator_dt.min(g.sensor.sample_dt), seed)?.0)
    };
    let (dynamic_init, init_warning) = match init {
        Some(p) => ((p.sigma0, p.sigma1), None),
        None => {
            let ramps = g
                .ramp_gradients
                .iter()
                .map(|&gradient| experiment(&ExcitationSpec::new(ExcitationKind::Ramp { gradient }, g.ramp_duration), cfg.seed))
                .collect::<Result<Vec<_>>>()?;
            match init_dynamic_params(&ramps, &statics, &plant.motor, g.sensor.position_resolution) {
                Ok(s) => (s, None),
                Err(Error::InitFailed(msg)) => ((g.fallback_sigma0, g.fallback_sigma1), Some(msg)),
                Err(e) => return Err(e),
            }
        }
    };
    let transient = experiment(&g.dynamic, cfg.seed)?;
    let mut dcfg = dynamic_fit_config();
    dcfg.max_iterations = g.dynamic_max_iterations;
    dcfg.lower = vec![g.sigma0_bounds[0], g.sigma1_bounds[0]];
    dcfg.upper = vec![g.sigma0_bounds[1], g.sigma1_bounds[1]];
    let dynamic = fit_dynamic_params(&transient, &statics, dynamic_init, &plant.motor, &dcfg)?;
    let params = LuGreParams {
        alpha0: statics.alpha0,
        alpha1: statics.alpha1,
        alpha2: statics.alpha2,
        v_s: statics.v_s,
        sigma0: dynamic.sigma0,
        sigma1: dynamic.sigma1,
    };
    Ok(LuGreIdentification {
        points,
        statics,
        static_fit,
        dynamic_init,
        init_warning,
        dynamic,
        params,
    })
}

/// One cell of the evaluation grid with the simulated velocity, if the run
/// stayed finite.
#[derive(Debug, Clone)]
pub struct GridCell {
    pub report: FitReport,
    pub velocity: Option<Vec<f64>>,
}

/// Every model on every dataset, one thread per model. Cells are ordered by
/// model, then dataset.
pub fn evaluate_grid(models: &[MotorModel], datasets: &[(String, Dataset)]) -> Result<Vec<GridCell>> {
    ensure(!models.is_empty(), || "no models to evaluate".into())?;
    ensure(!datasets.is_empty(), || "no datasets to evaluate on".into())?;
    let rows: Vec<Result<Vec<GridCell>>> = std::thread::scope(|s| {
        let handles: Vec<_> = models
            .iter()
            .map(|m| {
                s.spawn(move || {
                    datasets
                        .iter()
                        .map(|(name, ds)| {
                            let run = free_run(m, ds);
                            let velocity = run.as_ref().ok().map(|t| t.iter().map(|st| st.v).collect());
                            Ok(GridCell { report: score_run(m, ds, name, run)?, velocity })
                        })
                        .collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("evaluation thread panicked")).collect()
    });
    let mut out = Vec::with_capacity(models.len() * datasets.len());
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

pub fn control_reference(cfg: &RunConfig) -> Result<crate::signals::TimeSeries> {
    let dt = cfg.sensor.sample_dt;
    match cfg.control.reference {
        ReferenceSpec::Sine { amplitude, frequency } => sine_reference(amplitude, frequency, cfg.control.duration, dt),
        ReferenceSpec::Step { level, t_step } => step_reference(level, t_step, cfg.control.duration, dt),
    }
}

/// Closed-loop runs without compensation and with each available friction
/// estimate, in parallel. Labels are `none`, `lugre` and `sindyc`.
pub fn compare_compensators(
    cfg: &RunConfig,
    lugre: Option<LuGreParams>,
    learned: Option<&SindycModel>,
) -> Result<Vec<(String, ClosedLoopResult)>> {
    let reference = control_reference(cfg)?;
    let plant = cfg.plant();
    let mut jobs: Vec<(String, Option<CompensatorConfig>)> = vec![("none".into(), None)];
    if let Some(p) = lugre {
        jobs.push(("lugre".into(), Some(cfg.compensator(FrictionSource::LuGre(p)))));
    }
    if let Some(m) = learned {
        let f = extract_friction(m, cfg.plant.motor.inertia);
        jobs.push(("sindyc".into(), Some(cfg.compensator(FrictionSource::Learned(Arc::new(f))))));
    }
    let results: Vec<Result<ClosedLoopResult>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(_, c)| {
                let (reference, plant) = (&reference, &plant);
                s.spawn(move || {
                    run_closed_loop(reference, plant, &cfg.sensor, cfg.plant.integrator_dt, &cfg.control.gains, c.as_ref())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("closed-loop thread panicked")).collect()
    });
    jobs.into_iter().zip(results).map(|((name, _), r)| r.map(|r| (name, r))).collect()
}

/// Writes `content` and a `.provenance` sidecar next to it.
pub fn write_artifact(path: &Path, content: &str, provenance: &Provenance) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, content)?;
    std::fs::write(sidecar_path(path), provenance.to_text())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg = RunConfig::from_toml("seed = 7\n[plant.motor]\ninertia = 5e-4\n[tde]\nm = 40\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.plant.motor.inertia, 5e-4);
        assert_eq!(cfg.plant.motor.resistance, MotorParams::default().resistance);
        assert_eq!(cfg.tde.m, 40);
        assert_eq!(cfg.sensor, SensorModel::HARDWARE);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(matches!(RunConfig::from_toml("sed = 1"), Err(Error::Parse(_))));
        assert!(matches!(RunConfig::from_toml("[tde]\nthreshold = 2.0"), Err(Error::Validation(_))));
        assert!(RunConfig::from_toml("[plant.friction]\ntype = \"lugre\"\nalpha0 = 0.1").is_err());
        let lugre = "[plant.friction]\ntype = \"lugre\"\nalpha0 = 0.08\nalpha1 = 0.0175\nalpha2 = 0.0016\nv_s = 3.676\nsigma0 = 317.225\nsigma1 = 22.2464\n";
        assert!(RunConfig::from_toml(lugre).is_ok());
        assert!(RunConfig::from_toml(&format!("{lugre}extra = 1\n")).is_err());
        assert!(RunConfig::from_toml("[control]\nlambda = 1.5").is_err());
    }

    #[test]
    fn signal_lookup_and_seeds() {
        let cfg = RunConfig::default();
        assert!(cfg.signals.get("e").is_err());
        let seeds: Vec<u64> = SIGNAL_IDS.iter().map(|id| cfg.signal_seed(id)).collect();
        assert!(seeds.windows(2).all(|w| w[0] != w[1]));
        match cfg.signals.c.kind {
            ExcitationKind::Chirp { amp_hi, .. } => assert_eq!(amp_hi, 0.5),
            _ => panic!(),
        }
    }

    #[test]
    fn short_signal_is_deterministic() {
        let mut cfg = RunConfig::default();
        cfg.signals.c.duration = 3.0;
        let (a, _) = simulate_signal(&cfg, "c").unwrap();
        let (b, _) = simulate_signal(&cfg, "c").unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert!(a.u.max_abs() <= 0.5);
        assert_eq!(a.provenance.get("signal"), Some("c"));
    }

    #[test]
    fn comparison_labels() {
        let mut cfg = RunConfig::default();
        cfg.control.duration = 1.0;
        let runs = compare_compensators(&cfg, Some(LuGreParams::REFERENCE), None).unwrap();
        let names: Vec<&str> = runs.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["none", "lugre"]);
    }
}
