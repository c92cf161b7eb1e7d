use super::library::{Sample, Term, FRICTION_TERMS, N_TERMS};

/// Friction law read off a discovered model: the velocity-equation terms that
/// depend only on velocity and deformation, scaled by the rotor inertia, plus
/// the model's own deformation dynamics.
///
/// Sign convention: `torque` returns the torque opposing motion, so that
/// `J v' = Kt I - torque(v, z)` as for the physical friction laws.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedFriction {
    pub a: f64,
    pub inertia: f64,
    /// velocity-row coefficients; non-friction columns are zero
    pub accel_coefficients: [f64; N_TERMS],
    /// deformation-row coefficients over the full library
    pub rate_coefficients: [f64; N_TERMS],
}

impl LearnedFriction {
    pub fn new(a: f64, inertia: f64, accel_row: &[f64; N_TERMS], rate_row: &[f64; N_TERMS]) -> Self {
        let mut accel_coefficients = [0.0; N_TERMS];
        for t in FRICTION_TERMS {
            accel_coefficients[t.index()] = accel_row[t.index()];
        }
        Self {
            a,
            inertia,
            accel_coefficients,
            rate_coefficients: *rate_row,
        }
    }

    /// `-J * sum_j b_j theta_j(v, z)` over the friction columns.
    #[inline]
    pub fn torque(&self, v: f64, z: f64) -> f64 {
        let s = Sample::new(0.0, v, z, 0.0, 0.0);
        let acc: f64 = FRICTION_TERMS
            .iter()
            .map(|t| self.accel_coefficients[t.index()] * t.eval(self.a, &s))
            .sum();
        -self.inertia * acc
    }

    #[inline]
    pub fn rate(&self, x: f64, v: f64, z: f64, i: f64, u: f64) -> f64 {
        let s = Sample::new(x, v, z, i, u);
        let mut acc = 0.0;
        for (k, c) in self.rate_coefficients.iter().enumerate() {
            if *c != 0.0 {
                acc += c * super::library::TERMS[k].eval(self.a, &s);
            }
        }
        acc
    }

    pub fn coefficient(&self, term: Term) -> f64 {
        self.accel_coefficients[term.index()]
    }
}
