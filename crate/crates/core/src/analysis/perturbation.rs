//! Empirical bounds on the model-mismatch term seen by the backstepping chain.
//!
//! With the law designed on a nominal model and applied to a plant with
//! different parameters, the chain becomes `ξ̇ = Aξ + δ(ξ)`. This helper
//! samples `δ` on a deterministic grid and fits `‖δ(ξ)‖ ≤ γ1‖ξ‖ + γ2`.

use crate::controllers::bsfl::phi2_of_xi as phi2;
use crate::controllers::{bsfl_control, bsfl_partials, bsfl_transform, BsflGains};
use crate::analysis::lyapunov::chain_matrix;
use crate::linalg::{matvec, norm2_vec};
use crate::model::{compute_coefficients, plant_derivatives, Deviation, MachineParams, NetworkMode, Smib};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationBounds<T> {
    /// Smallest γ1 with `‖δ(ξ)‖ − γ2 ≤ γ1‖ξ‖` over the grid.
    pub gamma1: T,
    /// `‖δ(0)‖`
    pub gamma2: T,
    pub samples: usize,
}

/// `δ(ξ)` at deviation `x` for a plant with parameters `actual`.
pub fn mismatch<T: Scalar>(nominal: &Smib<T>, actual: &MachineParams<T>, g: &BsflGains<T>, x: &Deviation<T>) -> [T; 3] {
    let m = nominal;
    let coeffs = compute_coefficients(actual, &m.eq);
    let cmd = bsfl_control(x, g, m, m.eq.efd0);
    let s = m.state_from_deviation(x);
    let f = plant_derivatives(&s, cmd.efd, m.eq.pm, NetworkMode::Normal, actual, &coeffs);

    let xi = bsfl_transform(x, g, m);
    let p = bsfl_partials(xi.c1, g, m);
    let a1 = m.coeffs.a1;
    // Jacobian rows of ξ(x)
    let j3 = [p.dphi2_dxi1 * x.x3 + p.da2_dxi1 + p.da2_dxi2 * g.l1, p.da2_dxi2 * a1, phi2(m, xi.c1)];
    let xi_dot = [f[0], g.l1 * f[0] + a1 * f[1], j3[0] * f[0] + j3[1] * f[1] + j3[2] * f[2]];
    let lin = matvec(&chain_matrix(g.lambdas()), &xi.to_array());
    [xi_dot[0] - lin[0], xi_dot[1] - lin[1], xi_dot[2] - lin[2]]
}

/// Samples `per_axis³` deviations in the box `|xᵢ| ≤ radius[i]`.
pub fn perturbation_bounds<T: Scalar>(
    nominal: &Smib<T>,
    actual: &MachineParams<T>,
    g: &BsflGains<T>,
    radius: [T; 3],
    per_axis: usize,
) -> PerturbationBounds<T> {
    let gamma2 = norm2_vec(&mismatch(nominal, actual, g, &Deviation::default()));
    let n = per_axis.max(2);
    let coord = |k: usize, r: T| -r + T::lit(2.0) * r * T::of_usize(k) / T::of_usize(n - 1);
    let mut gamma1 = T::zero();
    let mut samples = 0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x = Deviation::new(coord(i, radius[0]), coord(j, radius[1]), coord(k, radius[2]));
                if x.x1 == T::zero() && x.x2 == T::zero() && x.x3 == T::zero() {
                    continue;
                }
                let r = norm2_vec(&bsfl_transform(&x, g, nominal).to_array());
                let d = norm2_vec(&mismatch(nominal, actual, g, &x));
                gamma1 = gamma1.max((d - gamma2) / r);
                samples += 1;
            }
        }
    }
    PerturbationBounds { gamma1, gamma2, samples }
}
