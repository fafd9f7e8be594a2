//! Conventional bus-fed thyristor exciter with AVR and a speed-input PSS.
//!
//! ```text
//!  vt ─► 1/(1+s·tr) ──────────────────────────┐ −
//!  Δω ─► kstab ─► s·tw/(1+s·tw) ─► LL1 ─► LL2 ─► [limit] ─► (+) ◄─ vref
//!                                                           │
//!                   ┌─────── kfe·s/(1+s·tfe) ◄─────────────┐│ −
//!                   ▼                                       ││
//!              (+)────► ke/(1+s·te) ─► [efd_min, efd_max] ──┴┴─► efd
//! ```
//!
//! Each lead-lag `(1+s·Tn)/(1+s·Td)` is realized as `ẋ = (u − x)/Td`,
//! `y = x + (Tn/Td)(u − x)`.

use crate::controllers::{bad_gain, ControllerError};
use crate::model::Smib;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpssParams<T> {
    pub ke: T,
    pub te: T,
    pub kfe: T,
    pub tfe: T,
    pub tr: T,
    pub kstab: T,
    pub tw: T,
    pub t1: T,
    pub t2: T,
    pub t3: T,
    pub t4: T,
    pub vpss_max: T,
    pub vpss_min: T,
    pub efd_max: T,
    pub efd_min: T,
    /// Voltage reference; `None` back-computes the value that puts the loop in
    /// equilibrium at the initial operating point.
    pub vref: Option<T>,
}

impl<T: Scalar> CpssParams<T> {
    pub fn validate(&self) -> Result<(), ControllerError> {
        let tcs = [
            ("te", self.te),
            ("tfe", self.tfe),
            ("tr", self.tr),
            ("tw", self.tw),
            ("t1", self.t1),
            ("t2", self.t2),
            ("t3", self.t3),
            ("t4", self.t4),
        ];
        for (name, v) in tcs {
            if !(v > T::zero() && v.is_finite()) {
                return Err(bad_gain(name, "time constants must be positive"));
            }
        }
        for (name, v) in [("ke", self.ke), ("kfe", self.kfe), ("kstab", self.kstab)] {
            if !v.is_finite() || v < T::zero() {
                return Err(bad_gain(name, "must be finite and non-negative"));
            }
        }
        if !(self.ke > T::zero()) {
            return Err(bad_gain("ke", "must be positive"));
        }
        if !(self.vpss_max > T::zero() && self.vpss_min < T::zero()) {
            return Err(bad_gain("vpss_max", "require vpss_max > 0 > vpss_min"));
        }
        if !(self.efd_max > T::zero() && self.efd_min < T::zero()) {
            return Err(bad_gain("efd_max", "require efd_max > 0 > efd_min"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CpssState<T> {
    /// Voltage transducer output.
    pub x_tr: T,
    /// Washout low-pass memory (washout output is `kstab·Δω − x_w`).
    pub x_w: T,
    pub x_ll1: T,
    pub x_ll2: T,
    /// Amplifier output before the ceiling.
    pub x_amp: T,
    /// Low-pass memory of the rate-feedback block.
    pub x_fb: T,
}

impl<T: Scalar> CpssState<T> {
    pub const LEN: usize = 6;

    pub fn to_array(self) -> [T; 6] {
        [self.x_tr, self.x_w, self.x_ll1, self.x_ll2, self.x_amp, self.x_fb]
    }

    pub fn from_slice(v: &[T]) -> Self {
        Self { x_tr: v[0], x_w: v[1], x_ll1: v[2], x_ll2: v[3], x_amp: v[4], x_fb: v[5] }
    }

    /// Non-windup projection of the amplifier state onto the ceiling, applied
    /// after every accepted integration step.
    pub fn project(&mut self, p: &CpssParams<T>) {
        self.x_amp = self.x_amp.clamp_to(p.efd_min, p.efd_max);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpssOutput<T> {
    pub rates: CpssState<T>,
    pub efd: T,
    /// PSS signal after its limiter.
    pub vpss: T,
    pub saturated: bool,
}

pub fn cpss_reference<T: Scalar>(p: &CpssParams<T>, m: &Smib<T>) -> T {
    p.vref.unwrap_or(m.op.vt0 + m.eq.efd0 / p.ke)
}

pub fn cpss_init<T: Scalar>(p: &CpssParams<T>, m: &Smib<T>) -> Result<CpssState<T>, ControllerError> {
    p.validate()?;
    let efd0 = m.eq.efd0;
    if efd0 > p.efd_max || efd0 < p.efd_min {
        return Err(ControllerError::CeilingExceeded {
            efd0: efd0.as_f64(),
            min: p.efd_min.as_f64(),
            max: p.efd_max.as_f64(),
        });
    }
    Ok(CpssState {
        x_tr: m.op.vt0,
        x_w: T::zero(),
        x_ll1: T::zero(),
        x_ll2: T::zero(),
        x_amp: efd0,
        x_fb: efd0,
    })
}

/// Washout and both lead-lags: returns `(ẋ_w, ẋ_ll1, ẋ_ll2)` and the PSS
/// signal before its limiter.
pub fn pss_path<T: Scalar>(s: &CpssState<T>, p: &CpssParams<T>, domega: T) -> ([T; 3], T) {
    let u = p.kstab * domega;
    let y_w = u - s.x_w;
    let y1 = s.x_ll1 + (p.t1 / p.t2) * (y_w - s.x_ll1);
    let y2 = s.x_ll2 + (p.t3 / p.t4) * (y1 - s.x_ll2);
    ([(u - s.x_w) / p.tw, (y_w - s.x_ll1) / p.t2, (y1 - s.x_ll2) / p.t4], y2)
}

pub fn cpss_derivatives<T: Scalar>(
    s: &CpssState<T>,
    p: &CpssParams<T>,
    vref: T,
    vt: T,
    domega: T,
) -> CpssOutput<T> {
    let ([dw, dll1, dll2], pss_raw) = pss_path(s, p, domega);
    let vpss = pss_raw.clamp_to(p.vpss_min, p.vpss_max);

    let efd = s.x_amp.clamp_to(p.efd_min, p.efd_max);
    let rate_fb = (p.kfe / p.tfe) * (efd - s.x_fb);
    let error = vref - s.x_tr + vpss - rate_fb;
    let mut damp = (p.ke * error - s.x_amp) / p.te;
    // Non-windup: the amplifier state may not integrate further into the ceiling.
    if (s.x_amp >= p.efd_max && damp > T::zero()) || (s.x_amp <= p.efd_min && damp < T::zero()) {
        damp = T::zero();
    }

    CpssOutput {
        rates: CpssState {
            x_tr: (vt - s.x_tr) / p.tr,
            x_w: dw,
            x_ll1: dll1,
            x_ll2: dll2,
            x_amp: damp,
            x_fb: (efd - s.x_fb) / p.tfe,
        },
        efd,
        vpss,
        saturated: s.x_amp >= p.efd_max || s.x_amp <= p.efd_min || vpss != pss_raw,
    }
}
