//! Excitation controllers.
//!
//! The two feedback-linearizing laws are stateless functions of the measured
//! deviation; the conventional AVR + PSS carries its own filter states which
//! are integrated alongside the plant.

pub mod bsfl;
pub mod cpss;
pub mod dfl;

use thiserror::Error;

use crate::scalar::Scalar;

pub use bsfl::{bsfl_a3, bsfl_control, bsfl_partials, bsfl_transform, BsflGains, BsflPartials};
pub use cpss::{cpss_derivatives, cpss_init, cpss_reference, CpssOutput, CpssParams, CpssState};
pub use dfl::{dfl_control, dfl_transform, DflGains};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControllerError {
    #[error("invalid gain `{field}`: {reason}")]
    InvalidGain { field: &'static str, reason: String },
    #[error("steady field voltage {efd0} lies outside the exciter ceiling [{min}, {max}]")]
    CeilingExceeded { efd0: f64, min: f64, max: f64 },
}

pub(crate) fn bad_gain(field: &'static str, reason: impl Into<String>) -> ControllerError {
    ControllerError::InvalidGain { field, reason: reason.into() }
}

/// Closed interval the commanded field voltage is clamped to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldLimits<T> {
    pub min: T,
    pub max: T,
}

impl<T: Scalar> FieldLimits<T> {
    pub fn new(min: T, max: T) -> Result<Self, ControllerError> {
        if !(max > T::zero() && min < T::zero()) {
            return Err(bad_gain("field_limits", "require max > 0 > min"));
        }
        Ok(Self { min, max })
    }

    pub fn apply(&self, efd: T) -> (T, bool) {
        let clamped = efd.clamp_to(self.min, self.max);
        (clamped, clamped != efd)
    }
}

/// Transformed coordinates of a linearizing law: ξ for backstepping, z for DFL.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChainCoords<T> {
    pub c1: T,
    pub c2: T,
    pub c3: T,
}

impl<T: Scalar> ChainCoords<T> {
    pub fn to_array(self) -> [T; 3] {
        [self.c1, self.c2, self.c3]
    }
}

/// Output of one control-law evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldCommand<T> {
    pub efd: T,
    /// The output limiter was active.
    pub saturated: bool,
    /// The singularity guard replaced the law by a hold.
    pub guarded: bool,
}

/// Applies the ZOH singularity guard, the `ke` scaling and the optional
/// limiter shared by both linearizing laws.
pub(crate) fn finish_command<T: Scalar>(
    delta_uf: Option<T>,
    uf0: T,
    ke: T,
    limits: Option<&FieldLimits<T>>,
    held_efd: T,
) -> FieldCommand<T> {
    match delta_uf {
        None => FieldCommand { efd: held_efd, saturated: false, guarded: true },
        Some(du) => {
            let raw = ke * (uf0 + du);
            let (efd, saturated) = match limits {
                Some(l) => l.apply(raw),
                None => (raw, false),
            };
            FieldCommand { efd, saturated, guarded: false }
        }
    }
}
