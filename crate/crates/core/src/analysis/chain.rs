//! Closed-form behaviour of the target linear chains.

use crate::controllers::DflGains;
use crate::linalg::{expm, matvec, scale, Mat3, Vec3};
use crate::scalar::Scalar;

pub use crate::analysis::lyapunov::chain_matrix;

/// Brunovsky companion matrix closed by `v = −Kz`.
pub fn brunovsky_matrix<T: Scalar>(g: &DflGains<T>) -> Mat3<T> {
    g.closed_loop_matrix()
}

/// `x(t) = e^{At} x0`.
pub fn propagate<T: Scalar>(a: &Mat3<T>, x0: &Vec3<T>, t: T) -> Vec3<T> {
    matvec(&expm(&scale(a, t)), x0)
}

/// Explicit solution of the upper-bidiagonal chain for distinct poles.
pub fn bidiagonal_solution<T: Scalar>(l: [T; 3], x0: Vec3<T>, t: T) -> Vec3<T> {
    let e = |k: usize| (-l[k] * t).exp();
    // ẋ3 = −λ3 x3
    let x3 = x0[2] * e(2);
    // ẋ2 = −λ2 x2 + x3
    let c23 = x0[2] / (l[1] - l[2]);
    let x2 = (x0[1] - c23) * e(1) + c23 * e(2);
    // ẋ1 = −λ1 x1 + x2, x2 = (x0[1] − c23) e₂ + c23 e₃
    let b2 = (x0[1] - c23) / (l[0] - l[1]);
    let b3 = c23 / (l[0] - l[2]);
    let x1 = (x0[0] - b2 - b3) * e(0) + b2 * e(1) + b3 * e(2);
    [x1, x2, x3]
}
