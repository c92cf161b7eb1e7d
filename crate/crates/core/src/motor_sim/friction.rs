use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::params::{sgn, DahlParams, LuGreParams};
use crate::error::{Error, Result};
use crate::sindyc::LearnedFriction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FrictionModel {
    Viscous { b: f64 },
    Dahl(DahlParams),
    #[serde(rename = "lugre")]
    LuGre(LuGreParams),
    /// Friction law discovered by sparse regression; not expressible in a
    /// config file.
    #[serde(skip)]
    Learned(Arc<LearnedFriction>),
}

impl FrictionModel {
    pub fn name(&self) -> &'static str {
        match self {
            FrictionModel::Viscous { .. } => "viscous",
            FrictionModel::Dahl(_) => "dahl",
            FrictionModel::LuGre(_) => "lugre",
            FrictionModel::Learned(_) => "learned",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FrictionModel::Viscous { b } => crate::error::ensure(*b >= 0.0 && b.is_finite(), || {
                format!("viscous coefficient must be >= 0, got {b}")
            }),
            FrictionModel::Dahl(p) => p.validate(),
            FrictionModel::LuGre(p) => p.validate(),
            FrictionModel::Learned(_) => Ok(()),
        }
    }

    pub fn has_asperity_state(&self) -> bool {
        matches!(self, FrictionModel::Dahl(_) | FrictionModel::LuGre(_))
    }
}

/// Friction torque for the given velocity, deformation and deformation rate.
pub fn friction_torque(model: &FrictionModel, v: f64, z: f64, zdot: f64) -> Result<f64> {
    if !(v.is_finite() && z.is_finite() && zdot.is_finite()) {
        return Err(Error::Validation(format!(
            "non-finite friction input (v = {v}, z = {z}, zdot = {zdot})"
        )));
    }
    Ok(friction_torque_unchecked(model, v, z, zdot))
}

#[inline]
pub(crate) fn friction_torque_unchecked(model: &FrictionModel, v: f64, z: f64, zdot: f64) -> f64 {
    match model {
        FrictionModel::Viscous { b } => b * v,
        FrictionModel::Dahl(p) => p.stiffness * z,
        FrictionModel::LuGre(p) => p.sigma0 * z + p.sigma1 * zdot + p.alpha2 * v,
        FrictionModel::Learned(l) => l.torque(v, z),
    }
}

/// Asperity deformation rate `dz/dt` for the dynamic friction laws.
pub fn asperity_rate(model: &FrictionModel, v: f64, z: f64) -> Result<f64> {
    match model {
        FrictionModel::Dahl(_) | FrictionModel::LuGre(_) => Ok(asperity_rate_unchecked(model, v, z)),
        FrictionModel::Viscous { .. } => Err(Error::UnsupportedModel("viscous")),
        FrictionModel::Learned(_) => Err(Error::UnsupportedModel("learned")),
    }
}

#[inline]
pub(crate) fn asperity_rate_unchecked(model: &FrictionModel, v: f64, z: f64) -> f64 {
    match model {
        FrictionModel::LuGre(p) => lugre_rate(p, v, z),
        FrictionModel::Dahl(p) => v * (1.0 - sgn(v) * p.stiffness * z / p.coulomb),
        _ => 0.0,
    }
}

#[inline]
pub(crate) fn lugre_rate(p: &LuGreParams, v: f64, z: f64) -> f64 {
    v - p.sigma0 * v.abs() * z / p.stribeck(v)
}
