//! Feedback linearization built by backstepping.
//!
//! The plant in deviation form is strict-feedback,
//!
//! ```text
//! ẋ1 = α1 x2
//! ẋ2 = f2(x1, x2) + g2(x1) x3,       g2 = −α3 sin(x1 + δ0)
//! ẋ3 = f3(x1, x3) + a Δu_f
//! ```
//!
//! and three recursive steps define ξ1 = x1, ξ2 = α1 x2 + λ1 ξ1 and
//! ξ3 = φ2(ξ1) x3 + a2(ξ1, ξ2). The resulting control makes the closed loop
//! exactly the upper-bidiagonal chain ξ̇ᵢ = −λᵢ ξᵢ + ξᵢ₊₁.

use crate::controllers::{bad_gain, finish_command, ChainCoords, ControllerError, FieldCommand, FieldLimits};
use crate::model::{Deviation, Smib};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsflGains<T> {
    pub l1: T,
    pub l2: T,
    pub l3: T,
    /// Below this |sin(δ)| the law is replaced by a hold of the last command.
    pub sin_eps: T,
    pub field_limits: Option<FieldLimits<T>>,
}

impl<T: Scalar> BsflGains<T> {
    pub fn new(l1: T, l2: T, l3: T) -> Result<Self, ControllerError> {
        let g = Self { l1, l2, l3, sin_eps: T::lit(1e-3), field_limits: None };
        g.validate()?;
        Ok(g)
    }

    pub fn with_sin_eps(mut self, eps: T) -> Result<Self, ControllerError> {
        self.sin_eps = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn with_limits(mut self, limits: Option<FieldLimits<T>>) -> Self {
        self.field_limits = limits;
        self
    }

    pub fn lambdas(&self) -> [T; 3] {
        [self.l1, self.l2, self.l3]
    }

    pub fn validate(&self) -> Result<(), ControllerError> {
        for (name, v) in [("l1", self.l1), ("l2", self.l2), ("l3", self.l3)] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(bad_gain(name, "pole magnitudes must be positive"));
            }
        }
        if !(self.sin_eps > T::zero() && self.sin_eps < T::lit(0.1)) {
            return Err(bad_gain("sin_eps", "must lie in (0, 0.1)"));
        }
        Ok(())
    }
}

/// ξ-partials of φ2 and a2 evaluated at a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsflPartials<T> {
    pub dphi2_dxi1: T,
    pub dphi2_dxi2: T,
    pub da2_dxi1: T,
    pub da2_dxi2: T,
}

fn f2<T: Scalar>(m: &Smib<T>, x1: T, x2: T) -> T {
    let c = &m.coeffs;
    let d = x1 + m.eq.delta0;
    -c.a2 * x2 - c.a3 * m.eq.eqp0 * d.sin() + c.a4 * (T::lit(2.0) * d).sin() + c.a7
}

fn f3<T: Scalar>(m: &Smib<T>, x: &Deviation<T>) -> T {
    let c = &m.coeffs;
    -c.a5 * x.x3 + c.a6 * ((x.x1 + m.eq.delta0).cos() - m.eq.delta0.cos())
}

/// φ2 as a function of ξ1 alone.
pub fn phi2_of_xi<T: Scalar>(m: &Smib<T>, xi1: T) -> T {
    -m.coeffs.a1 * m.coeffs.a3 * (xi1 + m.eq.delta0).sin()
}

/// a2 expressed in ξ coordinates (x1 = ξ1, x2 = (ξ2 − λ1 ξ1)/α1).
pub fn a2_of_xi<T: Scalar>(m: &Smib<T>, g: &BsflGains<T>, xi1: T, xi2: T) -> T {
    let x2 = (xi2 - g.l1 * xi1) / m.coeffs.a1;
    g.l2 * xi2 + m.coeffs.a1 * f2(m, xi1, x2) + g.l1 * (-g.l1 * xi1 + xi2)
}

pub fn bsfl_transform<T: Scalar>(x: &Deviation<T>, g: &BsflGains<T>, m: &Smib<T>) -> ChainCoords<T> {
    let xi1 = x.x1;
    let xi2 = m.coeffs.a1 * x.x2 + g.l1 * x.x1;
    let xi3 = phi2_of_xi(m, xi1) * x.x3 + a2_of_xi(m, g, xi1, xi2);
    ChainCoords { c1: xi1, c2: xi2, c3: xi3 }
}

pub fn bsfl_partials<T: Scalar>(xi1: T, g: &BsflGains<T>, m: &Smib<T>) -> BsflPartials<T> {
    let c = &m.coeffs;
    let d = xi1 + m.eq.delta0;
    let two = T::lit(2.0);
    BsflPartials {
        dphi2_dxi1: -c.a1 * c.a3 * d.cos(),
        dphi2_dxi2: T::zero(),
        da2_dxi1: c.a2 * g.l1 - g.l1 * g.l1 - c.a1 * c.a3 * m.eq.eqp0 * d.cos()
            + two * c.a1 * c.a4 * (two * d).cos(),
        da2_dxi2: g.l1 + g.l2 - c.a2,
    }
}

/// The drift term the control has to cancel in ξ̇3.
pub fn bsfl_a3<T: Scalar>(x: &Deviation<T>, g: &BsflGains<T>, m: &Smib<T>) -> T {
    let xi = bsfl_transform(x, g, m);
    let p = bsfl_partials(xi.c1, g, m);
    let xi1_dot = -g.l1 * xi.c1 + xi.c2;
    let xi2_dot = -g.l2 * xi.c2 + xi.c3;
    let phi3 = phi2_of_xi(m, xi.c1) * f3(m, x);
    g.l3 * xi.c3
        + phi3
        + (p.dphi2_dxi1 * x.x3 + p.da2_dxi1) * xi1_dot
        + (p.dphi2_dxi2 * x.x3 + p.da2_dxi2) * xi2_dot
}

/// Field voltage from the backstepping law. `held_efd` is returned while the
/// singularity guard is active.
pub fn bsfl_control<T: Scalar>(x: &Deviation<T>, g: &BsflGains<T>, m: &Smib<T>, held_efd: T) -> FieldCommand<T> {
    let s = (x.x1 + m.eq.delta0).sin();
    let du = if s.abs() < g.sin_eps {
        None
    } else {
        let c = &m.coeffs;
        let input_gain = -c.a * c.a1 * c.a3 * s;
        Some(-bsfl_a3(x, g, m) / input_gain)
    };
    finish_command(du, m.eq.uf0, m.params.ke, g.field_limits.as_ref(), held_efd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::smib;
    use crate::model::NetworkMode;
    use proptest::prelude::*;

    fn gains() -> BsflGains<f64> {
        BsflGains::new(5.0, 10.0, 15.0).unwrap()
    }

    #[test]
    fn equilibrium_maps_to_origin() {
        let m = smib();
        let xi = bsfl_transform(&Deviation::default(), &gains(), &m);
        assert!(xi.c1.abs() < 1e-15 && xi.c2.abs() < 1e-15 && xi.c3.abs() < 1e-9, "{xi:?}");
        assert!(bsfl_a3(&Deviation::default(), &gains(), &m).abs() < 1e-9);
        let cmd = bsfl_control(&Deviation::default(), &gains(), &m, 0.0);
        assert!((cmd.efd - m.eq.efd0).abs() < 1e-9);
        assert!(!cmd.saturated && !cmd.guarded);
    }

    #[test]
    fn speed_only_deviation() {
        let m = smib();
        let xi = bsfl_transform(&Deviation::new(0.0, 0.003, 0.0), &gains(), &m);
        assert_eq!(xi.c1, 0.0);
        assert!((xi.c2 - m.coeffs.a1 * 0.003).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_gains() {
        assert!(BsflGains::new(0.0, 1.0, 1.0).is_err());
        assert!(BsflGains::new(1.0, -1.0, 1.0).is_err());
        assert!(gains().with_sin_eps(0.2).is_err());
        assert!(gains().with_sin_eps(0.0).is_err());
    }

    #[test]
    fn guard_holds_previous_command_near_pi() {
        let m = smib();
        let x = Deviation::new(std::f64::consts::PI - m.eq.delta0 - 1e-4, 0.01, 0.2);
        let cmd = bsfl_control(&x, &gains(), &m, 3.25);
        assert!(cmd.guarded);
        assert_eq!(cmd.efd, 3.25);
    }

    fn xi_rate_along_flow(m: &Smib<f64>, g: &BsflGains<f64>, x: &Deviation<f64>, du: f64) -> [f64; 3] {
        // Directional derivative of ξ along the plant flow by central differences in time.
        let h = 1e-6;
        let s0 = m.state_from_deviation(x);
        let efd = m.params.ke * (m.eq.uf0 + du);
        let f = m.derivatives(&s0, efd, m.eq.pm, NetworkMode::Normal);
        let shift = |k: f64| {
            let s = crate::model::PlantState::new(s0.delta + k * h * f[0], s0.domega + k * h * f[1], s0.eqp + k * h * f[2]);
            bsfl_transform(&m.deviation(&s), g, m).to_array()
        };
        let (p, n) = (shift(1.0), shift(-1.0));
        [(p[0] - n[0]) / (2.0 * h), (p[1] - n[1]) / (2.0 * h), (p[2] - n[2]) / (2.0 * h)]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn analytic_partials_match_finite_differences(
            xi1 in -0.7f64..1.5, xi2 in -20.0f64..20.0,
        ) {
            let m = smib();
            let g = gains();
            let p = bsfl_partials(xi1, &g, &m);
            let h = 1e-6;
            let fd_phi1 = (phi2_of_xi(&m, xi1 + h) - phi2_of_xi(&m, xi1 - h)) / (2.0 * h);
            let fd_a1 = (a2_of_xi(&m, &g, xi1 + h, xi2) - a2_of_xi(&m, &g, xi1 - h, xi2)) / (2.0 * h);
            let fd_a2 = (a2_of_xi(&m, &g, xi1, xi2 + h) - a2_of_xi(&m, &g, xi1, xi2 - h)) / (2.0 * h);
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-3 * 1.0f64.max(a.abs()));
            prop_assert!(rel(p.dphi2_dxi1, fd_phi1) < 1e-6);
            prop_assert!(rel(p.da2_dxi1, fd_a1) < 1e-6);
            prop_assert!(rel(p.da2_dxi2, fd_a2) < 1e-6);
            prop_assert_eq!(p.dphi2_dxi2, 0.0);
        }

        #[test]
        fn closed_loop_chain_holds_pointwise(
            x1 in -0.5f64..0.8, x2 in -0.01f64..0.01, x3 in -0.5f64..0.5,
        ) {
            let m = smib();
            let g = gains();
            let x = Deviation::new(x1, x2, x3);
            let cmd = bsfl_control(&x, &g, &m, 0.0);
            let du = cmd.efd / m.params.ke - m.eq.uf0;
            let xi = bsfl_transform(&x, &g, &m);
            let rate = xi_rate_along_flow(&m, &g, &x, du);
            let want = [-g.l1 * xi.c1 + xi.c2, -g.l2 * xi.c2 + xi.c3, -g.l3 * xi.c3];
            let scale = xi.c1.abs().max(xi.c2.abs()).max(xi.c3.abs()).max(1.0);
            for i in 0..3 {
                prop_assert!((rate[i] - want[i]).abs() < 1e-5 * scale, "component {} got {} want {}", i, rate[i], want[i]);
            }
        }
    }

    #[test]
    fn limits_clamp_output() {
        let m = smib();
        let g = gains().with_limits(Some(FieldLimits::new(-4.5, 4.5).unwrap()));
        let cmd = bsfl_control(&Deviation::new(0.3, 0.0, 0.0), &g, &m, 0.0);
        assert!(cmd.saturated);
        assert_eq!(cmd.efd, -4.5);
    }
}
