//! Ground-truth BLDC plant: electromechanical model with pluggable friction
//! (viscous, Dahl, LuGre, learned), RK4 integration and the sensor chain.

mod dataset;
mod friction;
mod params;
mod plant;
mod sensor;

pub use dataset::{sidecar_path, Dataset, Provenance, DATASET_HEADER};
pub use friction::{asperity_rate, friction_torque, FrictionModel};
pub use params::{sgn, DahlParams, LuGreParams, MotorParams};
pub use plant::{integrate_step, motor_derivative, MotorState, Plant};
pub use sensor::{
    record_plant, simulate, simulate_input, simulate_with_truth, SensorModel, Trajectory,
    DEFAULT_INTEGRATOR_DT,
};
