//! Lyapunov equation and the robustness margins of the linear ξ-chain.

use thiserror::Error;

use crate::linalg::{add, cholesky, is_hurwitz, is_symmetric, matmul, norm2_vec, norm_inf, solve_dense, sym_eigenvalues, transpose, Mat3};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LyapunovError {
    #[error("A is not Hurwitz")]
    NotHurwitz,
    #[error("Q must be symmetric positive definite")]
    QNotSpd,
    #[error("Kronecker system is singular")]
    Singular,
    #[error("solution P is not positive definite")]
    PNotSpd,
    #[error("pole magnitude λ{index} = {value} must be positive")]
    BadLambda { index: usize, value: f64 },
}

/// Upper-bidiagonal closed-loop matrix of the backstepping chain.
pub fn chain_matrix<T: Scalar>(l: [T; 3]) -> Mat3<T> {
    let (o, one) = (T::zero(), T::one());
    [[-l[0], one, o], [o, -l[1], one], [o, o, -l[2]]]
}

/// `‖PA + AᵀP + Q‖∞`
pub fn lyapunov_residual<T: Scalar>(a: &Mat3<T>, p: &Mat3<T>, q: &Mat3<T>) -> T {
    norm_inf(&add(&add(&matmul(p, a), &matmul(&transpose(a), p)), q))
}

/// Solves `PA + AᵀP = −Q` through the 9×9 system
/// `(I⊗Aᵀ + Aᵀ⊗I) vec P = −vec Q`.
pub fn solve_lyapunov<T: Scalar>(a: &Mat3<T>, q: &Mat3<T>) -> Result<Mat3<T>, LyapunovError> {
    if !is_hurwitz(a) {
        return Err(LyapunovError::NotHurwitz);
    }
    if !is_symmetric(q, T::lit(1e-12) * norm_inf(q).max(T::one())) || cholesky(q).is_none() {
        return Err(LyapunovError::QNotSpd);
    }
    let idx = |r: usize, c: usize| 3 * r + c;
    let mut m = vec![vec![T::zero(); 9]; 9];
    let mut rhs = vec![T::zero(); 9];
    for i in 0..3 {
        for j in 0..3 {
            let row = idx(i, j);
            for k in 0..3 {
                // (PA)_ij = Σ_k P_ik A_kj ; (AᵀP)_ij = Σ_k A_ki P_kj
                m[row][idx(i, k)] = m[row][idx(i, k)] + a[k][j];
                m[row][idx(k, j)] = m[row][idx(k, j)] + a[k][i];
            }
            rhs[row] = -q[i][j];
        }
    }
    let v = solve_dense(&mut m, &mut rhs).ok_or(LyapunovError::Singular)?;
    let half = T::lit(0.5);
    let mut p = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            p[i][j] = half * (v[idx(i, j)] + v[idx(j, i)]);
        }
    }
    cholesky(&p).ok_or(LyapunovError::PNotSpd)?;
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovReport<T> {
    pub a: Mat3<T>,
    pub p: Mat3<T>,
    pub q: Mat3<T>,
    /// `‖PB‖₂` with `B = (0, 0, 1)ᵀ`.
    pub pb_norm: T,
    pub lambda_min_q: T,
    /// Largest admissible gain of the state-dependent perturbation.
    pub gamma1_max: T,
    /// Ultimate-bound radius per unit of the constant perturbation bound γ₂.
    pub ultimate_bound_coeff: T,
    pub residual: T,
}

impl<T: Scalar> LyapunovReport<T> {
    pub fn ultimate_bound(&self, gamma2: T) -> T {
        self.ultimate_bound_coeff * gamma2
    }
}

pub fn robustness_margin<T: Scalar>(lambdas: [T; 3], q: &Mat3<T>) -> Result<LyapunovReport<T>, LyapunovError> {
    for (i, &l) in lambdas.iter().enumerate() {
        if !(l > T::zero() && l.is_finite()) {
            return Err(LyapunovError::BadLambda { index: i + 1, value: l.as_f64() });
        }
    }
    let a = chain_matrix(lambdas);
    let p = solve_lyapunov(&a, q)?;
    let pb_norm = norm2_vec(&[p[0][2], p[1][2], p[2][2]]);
    let lambda_min_q = sym_eigenvalues(q)[0];
    let four = T::lit(4.0);
    Ok(LyapunovReport {
        a,
        p,
        q: *q,
        pb_norm,
        lambda_min_q,
        gamma1_max: lambda_min_q / (four * pb_norm),
        ultimate_bound_coeff: T::lit(8.0) * pb_norm / lambda_min_q,
        residual: lyapunov_residual(&a, &p, q),
    })
}
