//! How exactly a recorded closed loop follows its target linear chain.

use thiserror::Error;

use crate::linalg::{matvec, Mat3};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResidualError {
    #[error("segment has {len} samples, at least 10 are needed")]
    SegmentTooShort { len: usize },
    #[error("time and chain lengths differ")]
    LengthMismatch,
    #[error("samples are not on a uniform grid")]
    NonUniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainResidual<T> {
    pub max_abs: [T; 3],
    /// `max |ξᵢ|` over the segment.
    pub scale: [T; 3],
}

impl<T: Scalar> ChainResidual<T> {
    pub fn relative(&self) -> [T; 3] {
        let mut r = [T::zero(); 3];
        for i in 0..3 {
            r[i] = if self.scale[i] > T::zero() { self.max_abs[i] / self.scale[i] } else { self.max_abs[i] };
        }
        r
    }

    pub fn within(&self, rel_tol: T) -> bool {
        self.relative().iter().all(|&r| r < rel_tol)
    }
}

/// Largest `|ξ̇ − Aξ|` per component, with `ξ̇` from fourth-order central
/// differences on the recorded grid.
pub fn linearization_residual<T: Scalar>(t: &[T], chain: &[[T; 3]], a: &Mat3<T>) -> Result<ChainResidual<T>, ResidualError> {
    let n = chain.len();
    if t.len() != n {
        return Err(ResidualError::LengthMismatch);
    }
    if n < 10 {
        return Err(ResidualError::SegmentTooShort { len: n });
    }
    let h = t[1] - t[0];
    let tol = T::lit(1e-6) * h;
    if !(h > T::zero()) || t.windows(2).any(|w| (w[1] - w[0] - h).abs() > tol) {
        return Err(ResidualError::NonUniform);
    }

    let mut max_abs = [T::zero(); 3];
    let mut scale = [T::zero(); 3];
    for c in chain {
        for i in 0..3 {
            scale[i] = scale[i].max(c[i].abs());
        }
    }
    let eight = T::lit(8.0);
    let twelve_h = T::lit(12.0) * h;
    for k in 2..n - 2 {
        let target = matvec(a, &chain[k]);
        for i in 0..3 {
            let d = (chain[k - 2][i] - eight * chain[k - 1][i] + eight * chain[k + 1][i] - chain[k + 2][i]) / twelve_h;
            max_abs[i] = max_abs[i].max((d - target[i]).abs());
        }
    }
    Ok(ChainResidual { max_abs, scale })
}

/// Longest run of consecutive samples in `[from, to]` with no flag set.
pub fn clean_segment(t: &[f64], flags: &[bool], from: f64, to: f64) -> std::ops::Range<usize> {
    let mut best = 0..0;
    let mut start = None;
    for i in 0..=t.len() {
        let ok = i < t.len() && t[i] >= from && t[i] <= to && !flags[i];
        match (ok, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s > best.len() {
                    best = s..i;
                }
                start = None;
            }
            _ => {}
        }
    }
    best
}
