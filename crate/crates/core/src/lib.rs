//! Excitation control of a single-machine infinite-bus power system.
//!
//! The crate is generic over the real scalar ([`Scalar`], implemented for
//! `f32` and `f64`). The `*64` aliases below fix it to `f64`, which is what the
//! command-line front end uses.

// `!(x > 0)` is deliberate throughout: NaN has to fail these checks.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod controllers;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod scalar;
pub mod sim;

pub use controllers::{
    BsflGains, ChainCoords, ControllerError, CpssParams, CpssState, DflGains, FieldCommand, FieldLimits,
};
pub use model::{
    Coefficients, Deviation, Equilibrium, MachineParams, ModelError, NetworkMode, OperatingPoint, PlantOutputs,
    PlantState, Smib,
};
pub use scalar::Scalar;
pub use sim::{
    run_scenario, ControllerKind, ControllerSet, Event, EventKind, Scenario, SimError, SimOutcome, TimeSeries,
};

pub type MachineParams64 = MachineParams<f64>;
pub type OperatingPoint64 = OperatingPoint<f64>;
pub type Equilibrium64 = Equilibrium<f64>;
pub type Coefficients64 = Coefficients<f64>;
pub type Smib64 = Smib<f64>;
pub type BsflGains64 = BsflGains<f64>;
pub type DflGains64 = DflGains<f64>;
pub type CpssParams64 = CpssParams<f64>;
pub type Scenario64 = Scenario<f64>;
pub type ControllerSet64 = ControllerSet<f64>;
pub type TimeSeries64 = TimeSeries<f64>;
pub type SimOutcome64 = SimOutcome<f64>;

pub type Smib32 = Smib<f32>;
