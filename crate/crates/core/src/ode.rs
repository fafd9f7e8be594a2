//! Classical fixed-step fourth-order Runge–Kutta.

use crate::scalar::Scalar;

#[inline]
fn axpy<T: Scalar, const N: usize>(y: &[T; N], h: T, k: &[T; N]) -> [T; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] = out[i] + h * k[i];
    }
    out
}

/// One RK4 step of `ẏ = f(y)`.
pub fn rk4_step<T, F, const N: usize>(y: &[T; N], dt: T, f: F) -> [T; N]
where
    T: Scalar,
    F: Fn(&[T; N]) -> [T; N],
{
    let inc = rk4_increment(y, dt, f);
    let mut out = *y;
    for i in 0..N {
        out[i] = out[i] + inc[i];
    }
    out
}

/// `y(t + dt) − y(t)` of one RK4 step, before it is added to the state.
pub fn rk4_increment<T, F, const N: usize>(y: &[T; N], dt: T, f: F) -> [T; N]
where
    T: Scalar,
    F: Fn(&[T; N]) -> [T; N],
{
    let half = dt * T::lit(0.5);
    let k1 = f(y);
    let k2 = f(&axpy(y, half, &k1));
    let k3 = f(&axpy(y, half, &k2));
    let k4 = f(&axpy(y, dt, &k3));
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let mut inc = [T::zero(); N];
    for i in 0..N {
        inc[i] = sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
    }
    inc
}

/// Kahan-compensated accumulation of step increments.
///
/// Over 10⁵ steps plain `y += Δy` loses about `√n · ε|y|` to rounding, which
/// swamps the truncation error of RK4 at millisecond-scale steps. Carrying the
/// rounding residue forward keeps the accumulated error at a few ulps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compensated<T, const N: usize> {
    carry: [T; N],
}

impl<T: Scalar, const N: usize> Default for Compensated<T, N> {
    fn default() -> Self {
        Self { carry: [T::zero(); N] }
    }
}

impl<T: Scalar, const N: usize> Compensated<T, N> {
    pub fn add(&mut self, y: &mut [T; N], inc: &[T; N]) {
        for i in 0..N {
            let d = inc[i] - self.carry[i];
            let next = y[i] + d;
            self.carry[i] = (next - y[i]) - d;
            y[i] = next;
        }
    }

    /// Drops the residue of component `i` after it was overwritten.
    pub fn reset(&mut self, i: usize) {
        self.carry[i] = T::zero();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_exponential_matches_taylor_polynomial() {
        // For ẏ = −y one step multiplies by 1 − h + h²/2 − h³/6 + h⁴/24.
        let h = 0.1f64;
        let y = rk4_step(&[1.0], h, |y| [-y[0]]);
        let poly = 1.0 - h + h * h / 2.0 - h.powi(3) / 6.0 + h.powi(4) / 24.0;
        assert!((y[0] - poly).abs() < 1e-15);
        assert!((y[0] - (-h).exp()).abs() < h.powi(5) / 120.0 * 1.01);
    }

    #[test]
    fn fixed_point_is_preserved_exactly() {
        let y0 = [0.3f64, -2.0];
        let y = rk4_step(&y0, 0.01, |_| [0.0, 0.0]);
        assert_eq!(y, y0);
    }

    #[test]
    fn local_error_scales_as_fifth_power() {
        // Nonlinear pendulum; compare one step of h against two of h/2.
        let f = |y: &[f64; 2]| [y[1], -y[0].sin() - 0.3 * y[1]];
        let y0 = [1.1, -0.4];
        let gap = |h: f64| {
            let one = rk4_step(&y0, h, f);
            let two = rk4_step(&rk4_step(&y0, h / 2.0, f), h / 2.0, f);
            ((one[0] - two[0]).powi(2) + (one[1] - two[1]).powi(2)).sqrt()
        };
        let hs = [0.1, 0.05, 0.025];
        let e: Vec<f64> = hs.iter().map(|&h| gap(h)).collect();
        for w in e.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 5.0).abs() < 0.3, "observed {order}");
        }
    }

    #[test]
    fn compensated_sum_keeps_rounding_bounded() {
        let (mut plain, mut kahan) = ([1.0f64], [1.0f64]);
        let mut acc = Compensated::default();
        for _ in 0..1_000_000 {
            plain[0] += 0.1;
            acc.add(&mut kahan, &[0.1]);
        }
        let exact = 1.0 + 1e6 * 0.1;
        assert!((plain[0] - exact).abs() > 1e-7);
        assert!((kahan[0] - exact).abs() < 1e-10, "{}", kahan[0] - exact);
    }

    #[test]
    fn increment_matches_step() {
        let f = |y: &[f64; 2]| [y[1], -y[0]];
        let y0 = [0.7, 0.2];
        let inc = rk4_increment(&y0, 0.05, f);
        assert_eq!(rk4_step(&y0, 0.05, f), [y0[0] + inc[0], y0[1] + inc[1]]);
    }
}
