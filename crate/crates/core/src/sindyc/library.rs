use nalgebra::DMatrix;

use crate::error::{ensure, Result};
use crate::motor_sim::Dataset;

/// Candidate functions over `(x, v, z, i, u)` in their fixed column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Term {
    X,
    V,
    Z,
    I,
    TanhV,
    TanhZ,
    AbsVV,
    AbsVV2,
    AbsZZ,
    AbsZZ2,
    ZV,
    Z2V,
    ZV2,
    U,
    ZU,
    Z2U,
    ZU2,
}

pub const N_TERMS: usize = 17;

pub const TERMS: [Term; N_TERMS] = [
    Term::X,
    Term::V,
    Term::Z,
    Term::I,
    Term::TanhV,
    Term::TanhZ,
    Term::AbsVV,
    Term::AbsVV2,
    Term::AbsZZ,
    Term::AbsZZ2,
    Term::ZV,
    Term::Z2V,
    Term::ZV2,
    Term::U,
    Term::ZU,
    Term::Z2U,
    Term::ZU2,
];

/// Columns that make up the learned friction torque: everything in the
/// velocity equation except current and voltage terms (and position).
pub const FRICTION_TERMS: [Term; 10] = [
    Term::V,
    Term::Z,
    Term::TanhV,
    Term::AbsVV,
    Term::AbsVV2,
    Term::AbsZZ,
    Term::AbsZZ2,
    Term::ZV,
    Term::Z2V,
    Term::ZV2,
];

impl Term {
    pub fn index(self) -> usize {
        TERMS.iter().position(|&t| t == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            Term::X => "x",
            Term::V => "xdot",
            Term::Z => "z",
            Term::I => "I",
            Term::TanhV => "tanh(a*xdot)",
            Term::TanhZ => "tanh(a*z)",
            Term::AbsVV => "|xdot|*xdot",
            Term::AbsVV2 => "|xdot|*xdot^2",
            Term::AbsZZ => "|z|*z",
            Term::AbsZZ2 => "|z|*z^2",
            Term::ZV => "z*xdot",
            Term::Z2V => "z^2*xdot",
            Term::ZV2 => "z*xdot^2",
            Term::U => "u",
            Term::ZU => "z*u",
            Term::Z2U => "z^2*u",
            Term::ZU2 => "z*u^2",
        }
    }

    pub fn from_name(name: &str) -> Option<Term> {
        TERMS.iter().copied().find(|t| t.name() == name)
    }

    /// Whether the term flips sign when `(x, v, z, i, u)` are all negated.
    /// `|v|v^2`, `|z|z^2`, `z v` and `z u` are even.
    pub fn is_odd(self) -> bool {
        !matches!(self, Term::AbsVV2 | Term::AbsZZ2 | Term::ZV | Term::ZU)
    }

    #[inline]
    pub fn eval(self, a: f64, s: &Sample) -> f64 {
        let Sample { x, v, z, i, u } = *s;
        match self {
            Term::X => x,
            Term::V => v,
            Term::Z => z,
            Term::I => i,
            Term::TanhV => (a * v).tanh(),
            Term::TanhZ => (a * z).tanh(),
            Term::AbsVV => v.abs() * v,
            Term::AbsVV2 => v.abs() * v * v,
            Term::AbsZZ => z.abs() * z,
            Term::AbsZZ2 => z.abs() * z * z,
            Term::ZV => z * v,
            Term::Z2V => z * z * v,
            Term::ZV2 => z * v * v,
            Term::U => u,
            Term::ZU => z * u,
            Term::Z2U => z * z * u,
            Term::ZU2 => z * u * u,
        }
    }
}

/// One point in library space.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sample {
    pub x: f64,
    pub v: f64,
    pub z: f64,
    pub i: f64,
    pub u: f64,
}

impl Sample {
    pub fn new(x: f64, v: f64, z: f64, i: f64, u: f64) -> Self {
        Self { x, v, z, i, u }
    }
}

/// The 17-term candidate library with its step-sharpness coefficient `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateLibrary {
    pub a: f64,
}

impl Default for CandidateLibrary {
    fn default() -> Self {
        Self { a: 100.0 }
    }
}

impl CandidateLibrary {
    pub fn new(a: f64) -> Result<Self> {
        ensure(a > 0.0 && a.is_finite(), || format!("library coefficient a must be > 0, got {a}"))?;
        Ok(Self { a })
    }

    pub fn terms(&self) -> &'static [Term; N_TERMS] {
        &TERMS
    }

    #[inline]
    pub fn evaluate(&self, s: &Sample) -> [f64; N_TERMS] {
        let mut out = [0.0; N_TERMS];
        for (o, t) in out.iter_mut().zip(TERMS) {
            *o = t.eval(self.a, s);
        }
        out
    }

    /// Design matrix Θ, one row per sample.
    pub fn build(&self, ds: &Dataset) -> Result<DMatrix<f64>> {
        ds.check_aligned()?;
        let n = ds.len();
        let mut theta = DMatrix::zeros(n, N_TERMS);
        for k in 0..n {
            let s = Sample::new(
                ds.x.values[k],
                ds.xdot.values[k],
                ds.z.values[k],
                ds.i.values[k],
                ds.u.values[k],
            );
            for (j, v) in self.evaluate(&s).into_iter().enumerate() {
                theta[(k, j)] = v;
            }
        }
        Ok(theta)
    }
}

/// Free-function form of [`CandidateLibrary::build`].
pub fn build_library(ds: &Dataset, a: f64) -> Result<DMatrix<f64>> {
    CandidateLibrary::new(a)?.build(ds)
}
