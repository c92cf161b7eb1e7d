use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Electromechanical constants of the linear motor model.
///
/// Defaults follow the drive's datasheet: torque constant from nominal
/// torque over nominal current (0.457 N·m / 6.39 A), resistance from supply
/// voltage over stall current (24 V / 111 A), back-EMF constant equal to the
/// torque constant in SI units. Inertia and inductance are typical values for
/// the frame size, not measured ones. With the reference LuGre parameters,
/// steady sliding in the Stribeck region is only stable for J above roughly
/// 3e-4 kg·m²; smaller rotors stick-slip under constant voltage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotorParams {
    /// kg·m²
    pub inertia: f64,
    /// N·m/A
    pub torque_constant: f64,
    /// V·s/rad
    pub back_emf_constant: f64,
    /// Ω
    pub resistance: f64,
    /// H
    pub inductance: f64,
}

impl Default for MotorParams {
    fn default() -> Self {
        let kt = 0.457 / 6.39;
        Self {
            inertia: 4e-4,
            torque_constant: kt,
            back_emf_constant: kt,
            resistance: 24.0 / 111.0,
            inductance: 1.4e-4,
        }
    }
}

impl MotorParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("inertia", self.inertia),
            ("torque_constant", self.torque_constant),
            ("back_emf_constant", self.back_emf_constant),
            ("resistance", self.resistance),
            ("inductance", self.inductance),
        ] {
            ensure(v > 0.0 && v.is_finite(), || format!("motor {name} must be > 0, got {v}"))?;
        }
        Ok(())
    }
}

/// LuGre friction parameters. `sigma0` is the bristle stiffness and `sigma1`
/// the bristle damping; `alpha0` is the Coulomb level and `alpha0 + alpha1`
/// the breakaway level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LuGreParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub v_s: f64,
    pub sigma0: f64,
    pub sigma1: f64,
}

impl LuGreParams {
    /// Parameters identified on the reference BLDC drive.
    pub const REFERENCE: LuGreParams = LuGreParams {
        alpha0: 0.0800,
        alpha1: 0.0175,
        alpha2: 0.0016,
        v_s: 3.6760,
        sigma0: 317.2250,
        sigma1: 22.2464,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha0", self.alpha0), ("v_s", self.v_s), ("sigma0", self.sigma0)] {
            ensure(v > 0.0 && v.is_finite(), || format!("LuGre {name} must be > 0, got {v}"))?;
        }
        for (name, v) in [("alpha1", self.alpha1), ("alpha2", self.alpha2), ("sigma1", self.sigma1)] {
            ensure(v >= 0.0 && v.is_finite(), || format!("LuGre {name} must be >= 0, got {v}"))?;
        }
        Ok(())
    }

    /// Stribeck curve `s(v) = alpha0 + alpha1 * exp(-(v/v_s)^2)`.
    pub fn stribeck(&self, v: f64) -> f64 {
        let r = v / self.v_s;
        self.alpha0 + self.alpha1 * (-r * r).exp()
    }

    /// d s / d v
    pub fn stribeck_slope(&self, v: f64) -> f64 {
        let r = v / self.v_s;
        -2.0 * r / self.v_s * self.alpha1 * (-r * r).exp()
    }

    /// Friction torque in steady sliding: `s(v) sgn(v) + alpha2 v`.
    pub fn steady_state_friction(&self, v: f64) -> f64 {
        sgn(v) * self.stribeck(v) + self.alpha2 * v
    }

    pub fn breakaway(&self) -> f64 {
        self.alpha0 + self.alpha1
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.alpha0, self.alpha1, self.alpha2, self.v_s, self.sigma0, self.sigma1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DahlParams {
    /// N·m/rad
    pub stiffness: f64,
    /// N·m
    pub coulomb: f64,
}

impl DahlParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.stiffness > 0.0 && self.coulomb > 0.0, || {
            format!("Dahl stiffness and Coulomb level must be > 0, got {self:?}")
        })
    }
}

/// Sign with `sgn(0) = 0`.
pub fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
