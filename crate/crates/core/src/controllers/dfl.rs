//! Direct feedback linearization.
//!
//! `z = (x1, α1 x2, α1 ẋ2)` puts the plant in Brunovsky form; the law
//! cancels the full drift of `z3` so that `ż3 = v` with `v = −K z`.

use crate::controllers::{bad_gain, finish_command, ChainCoords, ControllerError, FieldCommand, FieldLimits};
use crate::linalg::cubic_is_hurwitz;
use crate::model::{Deviation, Smib};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DflGains<T> {
    pub k1: T,
    pub k2: T,
    pub k3: T,
    pub sin_eps: T,
    pub field_limits: Option<FieldLimits<T>>,
}

impl<T: Scalar> DflGains<T> {
    pub fn new(k1: T, k2: T, k3: T) -> Result<Self, ControllerError> {
        let g = Self { k1, k2, k3, sin_eps: T::lit(1e-3), field_limits: None };
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

    /// Closed loop `ż = A z` in companion form.
    pub fn closed_loop_matrix(&self) -> [[T; 3]; 3] {
        let (o, l) = (T::zero(), T::one());
        [[o, l, o], [o, o, l], [-self.k1, -self.k2, -self.k3]]
    }

    pub fn validate(&self) -> Result<(), ControllerError> {
        if !(self.k1.is_finite() && self.k2.is_finite() && self.k3.is_finite()) {
            return Err(bad_gain("k", "gains must be finite"));
        }
        // s³ + k3 s² + k2 s + k1
        if !cubic_is_hurwitz([self.k3, self.k2, self.k1]) {
            return Err(bad_gain("k", "s^3 + k3 s^2 + k2 s + k1 is not Hurwitz"));
        }
        if !(self.sin_eps > T::zero() && self.sin_eps < T::lit(0.1)) {
            return Err(bad_gain("sin_eps", "must lie in (0, 0.1)"));
        }
        Ok(())
    }
}

/// ẋ2 of the deviation model under the nominal mechanical power.
fn x2_rate<T: Scalar>(m: &Smib<T>, x: &Deviation<T>) -> T {
    let c = &m.coeffs;
    let d = x.x1 + m.eq.delta0;
    -c.a2 * x.x2 - c.a3 * (m.eq.eqp0 + x.x3) * d.sin() + c.a4 * (T::lit(2.0) * d).sin() + c.a7
}

pub fn dfl_transform<T: Scalar>(x: &Deviation<T>, m: &Smib<T>) -> ChainCoords<T> {
    let a1 = m.coeffs.a1;
    ChainCoords { c1: x.x1, c2: a1 * x.x2, c3: a1 * x2_rate(m, x) }
}

pub fn dfl_control<T: Scalar>(x: &Deviation<T>, g: &DflGains<T>, m: &Smib<T>, held_efd: T) -> FieldCommand<T> {
    let c = &m.coeffs;
    let d = x.x1 + m.eq.delta0;
    let s = d.sin();
    let du = if s.abs() < g.sin_eps {
        None
    } else {
        let two = T::lit(2.0);
        let z = dfl_transform(x, m);
        let v = -(g.k1 * z.c1 + g.k2 * z.c2 + g.k3 * z.c3);

        let dz3_dx1 = c.a1 * (-c.a3 * (m.eq.eqp0 + x.x3) * d.cos() + two * c.a4 * (two * d).cos());
        let dz3_dx2 = -c.a1 * c.a2;
        let dz3_dx3 = -c.a1 * c.a3 * s;
        let f3 = -c.a5 * x.x3 + c.a6 * (d.cos() - m.eq.delta0.cos());
        let drift = dz3_dx1 * c.a1 * x.x2 + dz3_dx2 * x2_rate(m, x) + dz3_dx3 * f3;

        let beta = -T::one() / (c.a * c.a1 * c.a3 * s);
        let alpha = -beta * drift;
        Some(alpha + beta * v)
    };
    finish_command(du, m.eq.uf0, m.params.ke, g.field_limits.as_ref(), held_efd)
}
