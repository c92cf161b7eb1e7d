use super::friction::{asperity_rate_unchecked, friction_torque_unchecked, FrictionModel};
use super::params::MotorParams;
use crate::error::{Error, Result};

/// Rotor position, velocity, asperity deformation and winding current.
/// Also used for time derivatives of the same quantities.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MotorState {
    pub x: f64,
    pub v: f64,
    pub z: f64,
    pub i: f64,
}

impl MotorState {
    pub const ZERO: MotorState = MotorState { x: 0.0, v: 0.0, z: 0.0, i: 0.0 };

    pub fn new(x: f64, v: f64, z: f64, i: f64) -> Self {
        Self { x, v, z, i }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.v, self.z, self.i]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.v.is_finite() && self.z.is_finite() && self.i.is_finite()
    }

    #[inline]
    fn axpy(self, h: f64, d: MotorState) -> MotorState {
        MotorState {
            x: self.x + h * d.x,
            v: self.v + h * d.v,
            z: self.z + h * d.z,
            i: self.i + h * d.i,
        }
    }
}

/// Motor plus friction law.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub motor: MotorParams,
    pub friction: FrictionModel,
}

/// RK4's stability interval on the negative real axis is about 2.785; stay
/// well inside it.
const STABILITY_FACTOR: f64 = 1.5;

impl Plant {
    pub fn new(motor: MotorParams, friction: FrictionModel) -> Self {
        Self { motor, friction }
    }

    #[inline]
    pub fn derivative(&self, s: &MotorState, u: f64) -> MotorState {
        let mp = &self.motor;
        let zdot = match &self.friction {
            FrictionModel::Learned(l) => l.rate(s.x, s.v, s.z, s.i, u),
            fm => asperity_rate_unchecked(fm, s.v, s.z),
        };
        let f = friction_torque_unchecked(&self.friction, s.v, s.z, zdot);
        MotorState {
            x: s.v,
            v: (mp.torque_constant * s.i - f) / mp.inertia,
            z: zdot,
            i: (-mp.resistance * s.i - mp.back_emf_constant * s.v + u) / mp.inductance,
        }
    }

    /// One classical Runge–Kutta step with the input held constant.
    #[inline]
    pub fn rk4(&self, s: &MotorState, u: f64, h: f64) -> MotorState {
        let k1 = self.derivative(s, u);
        let k2 = self.derivative(&s.axpy(0.5 * h, k1), u);
        let k3 = self.derivative(&s.axpy(0.5 * h, k2), u);
        let k4 = self.derivative(&s.axpy(h, k3), u);
        MotorState {
            x: s.x + h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
            v: s.v + h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
            z: s.z + h / 6.0 * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z),
            i: s.i + h / 6.0 * (k1.i + 2.0 * k2.i + 2.0 * k3.i + k4.i),
        }
    }

    /// Upper estimate of the fastest local decay/growth rate (1/s) at `s`.
    pub fn stiffness_bound(&self, s: &MotorState) -> f64 {
        let mp = &self.motor;
        let electrical = mp.resistance / mp.inductance
            + (mp.torque_constant * mp.back_emf_constant / (mp.inertia * mp.inductance)).sqrt();
        let friction = match &self.friction {
            FrictionModel::Viscous { b } => b / mp.inertia,
            FrictionModel::Dahl(p) => {
                (p.stiffness / mp.inertia).sqrt() + p.stiffness * s.v.abs() / p.coulomb
            }
            FrictionModel::LuGre(p) => {
                // Bristle relaxation rate, amplified in the Stribeck region where
                // a large damping coefficient makes the slow manifold repulsive.
                let g = p.sigma0 * s.v.abs() / p.stribeck(s.v);
                let amplification = p.sigma1 * p.stribeck_slope(s.v).abs() / (p.sigma0 * mp.inertia);
                (p.sigma1 + p.alpha2) / mp.inertia
                    + (p.sigma0 / mp.inertia).sqrt()
                    + g * (1.0 + amplification)
            }
            FrictionModel::Learned(_) => 0.0,
        };
        electrical + friction
    }

    /// Advances `s` by `duration` with zero-order-hold input, using steps no
    /// longer than `max_step` and short enough for RK4 stability at the
    /// current state. `t` is only used for error reporting.
    pub fn advance(
        &self,
        s: &MotorState,
        u: f64,
        duration: f64,
        max_step: f64,
        t: f64,
    ) -> Result<MotorState> {
        let mut state = *s;
        let mut elapsed = 0.0;
        // Nominal grid first; refine only where the dynamics demand it.
        let nominal = (duration / max_step).round().max(1.0);
        let h_nominal = duration / nominal;
        while elapsed < duration * (1.0 - 1e-12) {
            let remaining = duration - elapsed;
            let stable = STABILITY_FACTOR / self.stiffness_bound(&state).max(1e-300);
            let h = if stable >= h_nominal {
                h_nominal.min(remaining)
            } else {
                // integer number of sub-steps per nominal step keeps grids aligned
                let k = (h_nominal / stable).ceil();
                (h_nominal / k).min(remaining)
            };
            state = self.rk4(&state, u, h);
            elapsed += h;
            if !state.is_finite() {
                return Err(Error::Diverged {
                    t: t + elapsed,
                    state: state.to_array(),
                });
            }
        }
        Ok(state)
    }
}

/// Right-hand side of the electromechanical model with the chosen friction law.
pub fn motor_derivative(
    state: &MotorState,
    u: f64,
    mp: &MotorParams,
    fm: &FrictionModel,
) -> MotorState {
    Plant::new(*mp, fm.clone()).derivative(state, u)
}

/// A single RK4 step of length `h` (no sub-stepping).
pub fn integrate_step(
    state: &MotorState,
    u: f64,
    mp: &MotorParams,
    fm: &FrictionModel,
    h: f64,
) -> Result<MotorState> {
    crate::error::ensure(h > 0.0 && h.is_finite(), || format!("step must be > 0, got {h}"))?;
    let next = Plant::new(*mp, fm.clone()).rk4(state, u, h);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::Diverged {
            t: h,
            state: next.to_array(),
        })
    }
}
