use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::friction::LearnedFriction;
use super::library::{CandidateLibrary, Sample, Term, N_TERMS, TERMS};
use super::regression::{CoefficientMatrix, N_STATES, STATE_NAMES};
use crate::error::{ensure, Error, Result};
use crate::motor_sim::{Dataset, MotorState};
use crate::signals::{differentiate, TimeSeries};

/// Numerical derivatives of x, xdot, z and I (central differences), one
/// column per state.
pub fn estimate_derivatives(ds: &Dataset) -> Result<DMatrix<f64>> {
    ds.check_aligned()?;
    let n = ds.len();
    let mut out = DMatrix::zeros(n, N_STATES);
    for (k, s) in [&ds.x, &ds.xdot, &ds.z, &ds.i].into_iter().enumerate() {
        let d = differentiate(s)?;
        for (r, v) in d.values.iter().enumerate() {
            out[(r, k)] = *v;
        }
    }
    Ok(out)
}

/// How the model was selected; carried through serialisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingRecord {
    /// mean of the x and xdot fits on the validation signal, percent
    pub validation_fit: f64,
    pub full_model_fit: f64,
    pub accepted_removals: usize,
}

impl Default for TrainingRecord {
    fn default() -> Self {
        Self {
            validation_fit: f64::NEG_INFINITY,
            full_model_fit: f64::NEG_INFINITY,
            accepted_removals: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SindycModel {
    pub library: CandidateLibrary,
    pub xi: CoefficientMatrix,
    /// factor that was divided out of the extracted deformation signal
    pub z_scale: f64,
    pub training: TrainingRecord,
}

/// States rejected as numerically blown up even while still finite.
const BLOWUP: f64 = 1e12;

impl SindycModel {
    pub fn new(library: CandidateLibrary, xi: CoefficientMatrix, z_scale: f64) -> Result<Self> {
        let m = Self {
            library,
            xi,
            z_scale,
            training: TrainingRecord::default(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.z_scale > 0.0 && self.z_scale.is_finite(), || {
            format!("z_scale must be > 0, got {}", self.z_scale)
        })?;
        ensure(self.xi.is_finite(), || "coefficient matrix has non-finite entries".into())?;
        for row in 0..N_STATES {
            for j in 0..N_TERMS {
                ensure(self.xi.active[row][j] || self.xi.xi[row][j] == 0.0, || {
                    format!("inactive entry ({}, {}) is not zero", STATE_NAMES[row], TERMS[j].name())
                })?;
            }
        }
        Ok(())
    }

    #[inline]
    pub fn derivative(&self, s: &MotorState, u: f64) -> MotorState {
        let theta = self.library.evaluate(&Sample::new(s.x, s.v, s.z, s.i, u));
        MotorState::from_array(self.xi.apply(&theta))
    }

    fn rk4(&self, s: &MotorState, u: f64, h: f64) -> MotorState {
        let k1 = self.derivative(s, u).to_array();
        let s0 = s.to_array();
        let at = |k: &[f64; 4], c: f64| {
            MotorState::from_array([s0[0] + c * k[0], s0[1] + c * k[1], s0[2] + c * k[2], s0[3] + c * k[3]])
        };
        let k2 = self.derivative(&at(&k1, 0.5 * h), u).to_array();
        let k3 = self.derivative(&at(&k2, 0.5 * h), u).to_array();
        let k4 = self.derivative(&at(&k3, h), u).to_array();
        let mut out = [0.0; 4];
        for j in 0..4 {
            out[j] = s0[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        MotorState::from_array(out)
    }

    /// Position-equation structure check: only the velocity column survives
    /// and its coefficient is within `tol` of one.
    pub fn position_row_is_kinematic(&self, tol: f64) -> bool {
        let v = Term::V.index();
        (0..N_TERMS).all(|j| j == v || !self.xi.active[0][j]) && (self.xi.xi[0][v] - 1.0).abs() <= tol
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# sindyc model");
        let _ = writeln!(out, "a = {:?}", self.library.a);
        let _ = writeln!(out, "z_scale = {:?}", self.z_scale);
        let _ = writeln!(out, "validation_fit = {:?}", self.training.validation_fit);
        let _ = writeln!(out, "full_model_fit = {:?}", self.training.full_model_fit);
        let _ = writeln!(out, "accepted_removals = {}", self.training.accepted_removals);
        let names: Vec<&str> = TERMS.iter().map(|t| t.name()).collect();
        let _ = writeln!(out, "terms = {}", names.join(" "));
        for row in 0..N_STATES {
            let vals: Vec<String> = self.xi.xi[row].iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(out, "xi.{} = {}", STATE_NAMES[row], vals.join(" "));
            let mask: Vec<&str> = self.xi.active[row].iter().map(|&a| if a { "1" } else { "0" }).collect();
            let _ = writeln!(out, "mask.{} = {}", STATE_NAMES[row], mask.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut a = None;
        let mut z_scale = None;
        let mut training = TrainingRecord::default();
        let mut xi = CoefficientMatrix::default();
        let mut seen = [[false; 2]; N_STATES];
        let num = |key: &str, v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number for `{key}`: `{v}`")))
        };
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (key, value) = line
                .split_once(" = ")
                .ok_or_else(|| Error::Parse(format!("model line without ` = `: `{line}`")))?;
            match key {
                "a" => a = Some(num(key, value)?),
                "z_scale" => z_scale = Some(num(key, value)?),
                "validation_fit" => training.validation_fit = num(key, value)?,
                "full_model_fit" => training.full_model_fit = num(key, value)?,
                "accepted_removals" => {
                    training.accepted_removals = value
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad count `{value}`")))?
                }
                "terms" => {
                    let names: Vec<&str> = value.split_whitespace().collect();
                    let expected: Vec<&str> = TERMS.iter().map(|t| t.name()).collect();
                    if names != expected {
                        return Err(Error::Parse("library term list does not match".into()));
                    }
                }
                _ => {
                    let (kind, state) = key
                        .split_once('.')
                        .ok_or_else(|| Error::Parse(format!("unknown model key `{key}`")))?;
                    let row = STATE_NAMES
                        .iter()
                        .position(|s| *s == state)
                        .ok_or_else(|| Error::Parse(format!("unknown state `{state}`")))?;
                    let fields: Vec<&str> = value.split_whitespace().collect();
                    if fields.len() != N_TERMS {
                        return Err(Error::Parse(format!("`{key}` needs {N_TERMS} entries")));
                    }
                    match kind {
                        "xi" => {
                            for (j, f) in fields.iter().enumerate() {
                                xi.xi[row][j] = num(key, f)?;
                            }
                            seen[row][0] = true;
                        }
                        "mask" => {
                            for (j, f) in fields.iter().enumerate() {
                                xi.active[row][j] = match *f {
                                    "1" => true,
                                    "0" => false,
                                    _ => return Err(Error::Parse(format!("bad mask entry `{f}`"))),
                                };
                            }
                            seen[row][1] = true;
                        }
                        _ => return Err(Error::Parse(format!("unknown model key `{key}`"))),
                    }
                }
            }
        }
        if seen.iter().flatten().any(|s| !s) {
            return Err(Error::Parse("model file is missing coefficient rows".into()));
        }
        let a = a.ok_or_else(|| Error::Parse("model file has no `a`".into()))?;
        let z_scale = z_scale.ok_or_else(|| Error::Parse("model file has no `z_scale`".into()))?;
        let library = CandidateLibrary::new(a)?;
        let mut m = SindycModel::new(library, xi, z_scale)?;
        m.training = training;
        Ok(m)
    }
}

/// Free-run RK4 simulation of `d/dt state = Ξ Θ(state, u)` with the input held
/// over each sample and `substeps` steps per sample. Returns one state per
/// input sample, starting with `x0`.
pub fn simulate_model(
    model: &SindycModel,
    u: &TimeSeries,
    x0: MotorState,
    substeps: usize,
) -> Result<Vec<MotorState>> {
    ensure(substeps >= 1, || "substeps must be >= 1".into())?;
    let n = u.len();
    let h = u.dt / substeps as f64;
    let mut out = Vec::with_capacity(n);
    let mut s = x0;
    out.push(s);
    for k in 0..n.saturating_sub(1) {
        let uk = u.values[k];
        for _ in 0..substeps {
            s = model.rk4(&s, uk, h);
        }
        if !s.is_finite() || s.to_array().iter().any(|v| v.abs() > BLOWUP) {
            return Err(Error::ModelDiverged {
                t: u.time(k + 1),
                partial: out.iter().map(|s| s.to_array()).collect(),
            });
        }
        out.push(s);
    }
    Ok(out)
}

/// Friction function of the discovered model in physical units of torque.
pub fn extract_friction(model: &SindycModel, inertia: f64) -> LearnedFriction {
    LearnedFriction::new(model.library.a, inertia, &model.xi.xi[1], &model.xi.xi[2])
}
