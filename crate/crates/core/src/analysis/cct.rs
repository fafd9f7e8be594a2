//! Critical clearing time by bisection on the fault duration.

use thiserror::Error;

use crate::model::Smib;
use crate::scalar::Scalar;
use crate::sim::{simulate, ControllerKind, ControllerSet, Scenario, SimError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CctError {
    #[error("invalid bracket: {0}")]
    InvalidBracket(String),
    #[error("bracket lower end {lo} s is already unstable")]
    LowerUnstable { lo: f64 },
    #[error("bracket upper end {hi} s is still stable")]
    UpperStable { hi: f64 },
    #[error("stability is not monotone in fault duration: {duration} s is unstable below the threshold")]
    NonMonotone { duration: f64 },
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe<T> {
    pub duration: T,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bisection<T> {
    /// Largest duration found stable.
    pub stable: T,
    /// Smallest duration found unstable.
    pub unstable: T,
    pub trace: Vec<Probe<T>>,
}

/// Bisects a monotone stability oracle on `[lo, hi]` down to `tol`.
///
/// Midpoints are snapped to multiples of `grid` (pass zero for none). After
/// convergence, `confirm` evenly spaced durations in `[lo, stable]` are
/// re-probed and must all be stable.
pub fn bisect<T, F>(lo: T, hi: T, tol: T, grid: T, confirm: usize, mut probe: F) -> Result<Bisection<T>, CctError>
where
    T: Scalar,
    F: FnMut(T) -> Result<bool, CctError>,
{
    if !(lo.is_finite() && hi.is_finite() && lo >= T::zero()) {
        return Err(CctError::InvalidBracket("bounds must be finite and non-negative".into()));
    }
    if !(lo < hi) {
        return Err(CctError::InvalidBracket(format!("lo = {lo} must be below hi = {hi}")));
    }
    if !(tol > T::zero()) || tol < grid {
        return Err(CctError::InvalidBracket(format!("tol = {tol} must be positive and at least the step {grid}")));
    }
    let snap = |v: T| if grid > T::zero() { (v / grid).round() * grid } else { v };
    let (mut a, mut b) = (snap(lo), snap(hi));
    let mut trace = Vec::new();
    let mut run = |d: T, trace: &mut Vec<Probe<T>>| -> Result<bool, CctError> {
        let s = probe(d)?;
        trace.push(Probe { duration: d, stable: s });
        Ok(s)
    };

    if !run(a, &mut trace)? {
        return Err(CctError::LowerUnstable { lo: a.as_f64() });
    }
    if run(b, &mut trace)? {
        return Err(CctError::UpperStable { hi: b.as_f64() });
    }
    while b - a > tol {
        let mid = snap((a + b) * T::lit(0.5));
        if mid <= a || mid >= b {
            break;
        }
        if run(mid, &mut trace)? {
            a = mid;
        } else {
            b = mid;
        }
    }
    for i in 1..=confirm {
        let d = snap(lo + (a - lo) * T::of_usize(i) / T::of_usize(confirm + 1));
        if !run(d, &mut trace)? {
            return Err(CctError::NonMonotone { duration: d.as_f64() });
        }
    }
    Ok(Bisection { stable: a, unstable: b, trace })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CctResult<T> {
    /// Longest fault duration found stable.
    pub duration: T,
    /// Absolute instant the fault is cleared at that duration.
    pub clearing_time: T,
    pub fault_start: T,
    pub trace: Vec<Probe<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CctSearch<T> {
    pub controller: ControllerKind,
    pub fault_start: T,
    /// Simulated time per probe.
    pub horizon: T,
    /// Duration bracket.
    pub lo: T,
    pub hi: T,
    pub tol: T,
    pub dt: T,
}

impl<T: Scalar> CctSearch<T> {
    pub fn new(controller: ControllerKind, fault_start: T, lo: T, hi: T) -> Self {
        Self { controller, fault_start, horizon: T::lit(5.0), lo, hi, tol: T::lit(1e-3), dt: T::lit(1e-4) }
    }

    /// Scenario probed at fault duration `d`.
    pub fn scenario(&self, d: T) -> Scenario<T> {
        Scenario::fault(self.controller, self.horizon, self.fault_start, d).with_dt(self.dt).with_stride(100)
    }
}

pub fn cct_search<T: Scalar>(model: &Smib<T>, gains: &ControllerSet<T>, s: &CctSearch<T>) -> Result<CctResult<T>, CctError> {
    if s.fault_start + s.hi > s.horizon {
        return Err(CctError::InvalidBracket("fault_start + hi exceeds the horizon".into()));
    }
    let b = bisect(s.lo, s.hi, s.tol, s.dt, 5, |d| Ok(simulate(model, &s.scenario(d), gains)?.stable))?;
    Ok(CctResult { duration: b.stable, clearing_time: s.fault_start + b.stable, fault_start: s.fault_start, trace: b.trace })
}
