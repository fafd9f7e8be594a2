//! Single-machine infinite-bus plant: one-axis synchronous machine behind a
//! lossless line, with a bolted terminal fault as the only alternative
//! network configuration.
//!
//! State is `(δ, Δω, E'q)`. Internally all angles are radians and all
//! electrical quantities are per unit on the machine base.

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("degenerate operating point: {0}")]
    Degenerate(String),
    #[error("equilibrium rotor angle {delta0} rad lies outside (0, pi)")]
    AngleOutOfRange { delta0: f64 },
    #[error("equilibrium cross-check failed for {quantity}: phasor route {phasor}, coefficient route {coefficient}")]
    CrossCheck { quantity: &'static str, phasor: f64, coefficient: f64 },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParameter { field, reason: reason.into() }
}

/// Machine and exciter constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineParams<T> {
    pub xd: T,
    pub xq: T,
    /// d-axis transient reactance X'd.
    pub xdp: T,
    pub xe: T,
    /// d-axis open-circuit transient time constant T'd0 (s).
    pub tdop: T,
    /// Inertia constant M (s).
    pub m: T,
    pub d: T,
    /// Excitation amplifier gain, `E_fd = ke * u_f`.
    pub ke: T,
    /// Synchronous angular speed (rad/s) used to turn Δω (pu) into δ̇.
    pub omega_base: T,
    pub efd_max: T,
    pub efd_min: T,
}

impl<T: Scalar> MachineParams<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        let all = [
            ("xd", self.xd),
            ("xq", self.xq),
            ("xdp", self.xdp),
            ("xe", self.xe),
            ("tdop", self.tdop),
            ("m", self.m),
            ("d", self.d),
            ("ke", self.ke),
            ("omega_base", self.omega_base),
            ("efd_max", self.efd_max),
            ("efd_min", self.efd_min),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        let zero = T::zero();
        if !(self.xdp > zero) {
            return Err(invalid("xdp", "must be > 0"));
        }
        if !(self.xd > self.xdp) {
            return Err(invalid("xd", "must exceed xdp (xd > xdp > 0)"));
        }
        if !(self.xq > zero) {
            return Err(invalid("xq", "must be > 0"));
        }
        if self.xe < zero {
            return Err(invalid("xe", "must be >= 0"));
        }
        if !(self.tdop > zero) {
            return Err(invalid("tdop", "must be > 0"));
        }
        if !(self.m > zero) {
            return Err(invalid("m", "must be > 0"));
        }
        if self.d < zero {
            return Err(invalid("d", "must be >= 0"));
        }
        if !(self.ke > zero) {
            return Err(invalid("ke", "must be > 0"));
        }
        if !(self.omega_base > zero) {
            return Err(invalid("omega_base", "must be > 0"));
        }
        if !(self.efd_max > zero) {
            return Err(invalid("efd_max", "must be > 0"));
        }
        if !(self.efd_min < zero) {
            return Err(invalid("efd_min", "must be < 0"));
        }
        Ok(())
    }
}

/// Dispatch point at the machine terminals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint<T> {
    pub p0: T,
    pub q0: T,
    pub vt0: T,
}

impl<T: Scalar> OperatingPoint<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.p0.is_finite() && self.q0.is_finite() && self.vt0.is_finite()) {
            return Err(invalid("operating_point", "values must be finite"));
        }
        if !(self.vt0 > T::zero()) {
            return Err(ModelError::Degenerate(format!(
                "terminal voltage vt0 = {} must be > 0",
                self.vt0
            )));
        }
        if !(self.p0 > T::zero()) {
            return Err(invalid("p0", "must be > 0"));
        }
        Ok(())
    }
}

/// Steady state consistent with an operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium<T> {
    pub delta0: T,
    pub eqp0: T,
    pub uf0: T,
    pub efd0: T,
    pub pm: T,
    pub vb: T,
    pub id0: T,
    pub iq0: T,
}

/// Lumped model coefficients α₁…α₇ and the input gain `a`.
///
/// With these (all of a3…a6 positive) the plant reads
/// `Δω̇ = −a2 Δω − a3 E'q sin δ + a4 sin 2δ + a7` and
/// `Ė'q = −a5 E'q + a6 cos δ + a u_f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients<T> {
    pub a1: T,
    pub a2: T,
    pub a3: T,
    pub a4: T,
    pub a5: T,
    pub a6: T,
    pub a7: T,
    pub a: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState<T> {
    pub delta: T,
    pub domega: T,
    pub eqp: T,
}

impl<T: Scalar> PlantState<T> {
    pub fn new(delta: T, domega: T, eqp: T) -> Self {
        Self { delta, domega, eqp }
    }

    pub fn to_array(self) -> [T; 3] {
        [self.delta, self.domega, self.eqp]
    }

    pub fn from_slice(v: &[T]) -> Self {
        Self { delta: v[0], domega: v[1], eqp: v[2] }
    }

    pub fn is_finite(&self) -> bool {
        self.delta.is_finite() && self.domega.is_finite() && self.eqp.is_finite()
    }
}

/// Deviation coordinates around the equilibrium: `x1 = Δδ, x2 = Δω, x3 = ΔE'q`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Deviation<T> {
    pub x1: T,
    pub x2: T,
    pub x3: T,
}

impl<T: Scalar> Deviation<T> {
    pub fn new(x1: T, x2: T, x3: T) -> Self {
        Self { x1, x2, x3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NetworkMode {
    #[default]
    Normal,
    BoltedFault,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantOutputs<T> {
    pub pe: T,
    pub vt: T,
    pub id: T,
    pub iq: T,
    pub vtd: T,
    pub vtq: T,
}

impl<T: Scalar> PlantOutputs<T> {
    /// Reactive power delivered at the terminals.
    pub fn qe(&self) -> T {
        self.vtq * self.id - self.vtd * self.iq
    }
}

/// Steady state by phasor algebra, cross-checked against the coefficient
/// form of the steady-state equations.
pub fn compute_equilibrium<T: Scalar>(
    params: &MachineParams<T>,
    op: &OperatingPoint<T>,
) -> Result<Equilibrium<T>, ModelError> {
    params.validate()?;
    op.validate()?;

    let j = Complex::new(T::zero(), T::one());
    let vt = Complex::new(op.vt0, T::zero());
    let current = Complex::new(op.p0, -op.q0) / vt.conj();
    let vbus = vt - j * params.xe * current;
    let emf_q = vt + j * params.xq * current;
    if vbus.norm() == T::zero() || emf_q.norm() == T::zero() {
        return Err(ModelError::Degenerate("zero bus or internal EMF phasor".into()));
    }
    let q_axis = emf_q.arg();
    let delta0 = q_axis - vbus.arg();
    if !(delta0 > T::zero() && delta0 < T::PI()) {
        return Err(ModelError::AngleOutOfRange { delta0: delta0.as_f64() });
    }

    // d axis lags q by 90 degrees: d + jq = phasor · e^{-j(θq − π/2)}.
    let to_rotor = Complex::from_polar(T::one(), -(q_axis - T::FRAC_PI_2()));
    let i_dq = current * to_rotor;
    let v_dq = vt * to_rotor;
    let (id0, iq0) = (i_dq.re, i_dq.im);
    let vtq = v_dq.im;

    let eqp0 = vtq + params.xdp * id0;
    let efd0 = eqp0 + (params.xd - params.xdp) * id0;
    let uf0 = efd0 / params.ke;
    let vb = vbus.norm();
    let pm = electrical_power(params, vb, delta0, eqp0);

    let eq = Equilibrium { delta0, eqp0, uf0, efd0, pm, vb, id0, iq0 };

    let c = compute_coefficients(params, &eq);
    let (eqp_alpha, uf_alpha) = coefficient_route(&c, delta0, eqp0);
    let tol = T::cross_check_tol();
    if (eqp_alpha - eqp0).abs() > tol * eqp0.abs().max(T::one()) {
        return Err(ModelError::CrossCheck {
            quantity: "eqp0",
            phasor: eqp0.as_f64(),
            coefficient: eqp_alpha.as_f64(),
        });
    }
    if (uf_alpha - uf0).abs() > tol * uf0.abs().max(T::one()) {
        return Err(ModelError::CrossCheck {
            quantity: "uf0",
            phasor: uf0.as_f64(),
            coefficient: uf_alpha.as_f64(),
        });
    }
    Ok(eq)
}

/// `(E'q0, u_f0)` recovered from the steady-state coefficient relations.
pub fn coefficient_route<T: Scalar>(c: &Coefficients<T>, delta0: T, eqp0: T) -> (T, T) {
    let two = T::lit(2.0);
    let eqp = (c.a7 + c.a4 * (two * delta0).sin()) / (c.a3 * delta0.sin());
    let uf = (c.a5 * eqp0 - c.a6 * delta0.cos()) / c.a;
    (eqp, uf)
}

pub fn compute_coefficients<T: Scalar>(params: &MachineParams<T>, eq: &Equilibrium<T>) -> Coefficients<T> {
    let p = params;
    let xd_sum = p.xdp + p.xe;
    let xq_sum = p.xq + p.xe;
    let two = T::lit(2.0);
    Coefficients {
        a1: p.omega_base,
        a2: p.d / p.m,
        a3: eq.vb / (p.m * xd_sum),
        a4: (eq.vb * eq.vb / (two * p.m)) * (T::one() / xd_sum - T::one() / xq_sum),
        a5: (T::one() + (p.xd - p.xdp) / xd_sum) / p.tdop,
        a6: eq.vb * (p.xd - p.xdp) / (p.tdop * xd_sum),
        a7: eq.pm / p.m,
        a: p.ke / p.tdop,
    }
}

fn electrical_power<T: Scalar>(p: &MachineParams<T>, vb: T, delta: T, eqp: T) -> T {
    let two = T::lit(2.0);
    (vb / (p.xdp + p.xe)) * eqp * delta.sin()
        + (vb * vb / two) * (T::one() / (p.xq + p.xe) - T::one() / (p.xdp + p.xe)) * (two * delta).sin()
}

/// State derivative `(δ̇, Δω̇, Ė'q)` for field voltage `efd` and the mechanical
/// power actually applied to the shaft.
pub fn plant_derivatives<T: Scalar>(
    state: &PlantState<T>,
    efd: T,
    pm: T,
    mode: NetworkMode,
    params: &MachineParams<T>,
    coeffs: &Coefficients<T>,
) -> [T; 3] {
    let c = coeffs;
    let ddelta = c.a1 * state.domega;
    let accel = pm / params.m;
    match mode {
        NetworkMode::Normal => {
            let two = T::lit(2.0);
            let (s, co) = state.delta.sin_cos();
            [
                ddelta,
                -c.a2 * state.domega - c.a3 * state.eqp * s + c.a4 * (two * state.delta).sin() + accel,
                -c.a5 * state.eqp + c.a6 * co + efd / params.tdop,
            ]
        }
        NetworkMode::BoltedFault => [
            ddelta,
            -c.a2 * state.domega + accel,
            (efd - (params.xd / params.xdp) * state.eqp) / params.tdop,
        ],
    }
}

pub fn plant_outputs<T: Scalar>(
    state: &PlantState<T>,
    mode: NetworkMode,
    params: &MachineParams<T>,
    eq: &Equilibrium<T>,
) -> PlantOutputs<T> {
    match mode {
        NetworkMode::Normal => {
            let (s, c) = state.delta.sin_cos();
            let id = (state.eqp - eq.vb * c) / (params.xdp + params.xe);
            let iq = eq.vb * s / (params.xq + params.xe);
            let vtq = eq.vb * c + params.xe * id;
            let vtd = eq.vb * s - params.xe * iq;
            PlantOutputs {
                pe: electrical_power(params, eq.vb, state.delta, state.eqp),
                vt: vtd.hypot(vtq),
                id,
                iq,
                vtd,
                vtq,
            }
        }
        NetworkMode::BoltedFault => PlantOutputs {
            pe: T::zero(),
            vt: T::zero(),
            id: state.eqp / params.xdp,
            iq: T::zero(),
            vtd: T::zero(),
            vtq: T::zero(),
        },
    }
}

/// Plant with its derived steady state and coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smib<T> {
    pub params: MachineParams<T>,
    pub op: OperatingPoint<T>,
    pub eq: Equilibrium<T>,
    pub coeffs: Coefficients<T>,
}

impl<T: Scalar> Smib<T> {
    pub fn new(params: MachineParams<T>, op: OperatingPoint<T>) -> Result<Self, ModelError> {
        let eq = compute_equilibrium(&params, &op)?;
        let coeffs = compute_coefficients(&params, &eq);
        Ok(Self { params, op, eq, coeffs })
    }

    pub fn equilibrium_state(&self) -> PlantState<T> {
        PlantState::new(self.eq.delta0, T::zero(), self.eq.eqp0)
    }

    pub fn deviation(&self, s: &PlantState<T>) -> Deviation<T> {
        Deviation::new(s.delta - self.eq.delta0, s.domega, s.eqp - self.eq.eqp0)
    }

    pub fn state_from_deviation(&self, x: &Deviation<T>) -> PlantState<T> {
        PlantState::new(x.x1 + self.eq.delta0, x.x2, x.x3 + self.eq.eqp0)
    }

    pub fn derivatives(&self, s: &PlantState<T>, efd: T, pm: T, mode: NetworkMode) -> [T; 3] {
        plant_derivatives(s, efd, pm, mode, &self.params, &self.coeffs)
    }

    pub fn outputs(&self, s: &PlantState<T>, mode: NetworkMode) -> PlantOutputs<T> {
        plant_outputs(s, mode, &self.params, &self.eq)
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    /// Independent evaluator written straight from the machine equations,
    /// without the lumped coefficients.
    fn unreduced_derivatives(m: &Smib<f64>, s: &PlantState<f64>, efd: f64, pm: f64) -> [f64; 3] {
        let p = &m.params;
        let vb = m.eq.vb;
        let id = (s.eqp - vb * s.delta.cos()) / (p.xdp + p.xe);
        let iq = vb * s.delta.sin() / (p.xq + p.xe);
        let vd = vb * s.delta.sin();
        let vq = vb * s.delta.cos();
        let pe = vd * id + vq * iq;
        [
            p.omega_base * s.domega,
            -p.d / p.m * s.domega + (pm - pe) / p.m,
            (-s.eqp - (p.xd - p.xdp) * id + efd) / p.tdop,
        ]
    }

    #[test]
    fn reference_equilibrium_values() {
        let m = smib();
        // Frozen from an independent complex-phasor computation of the same
        // network (numpy, separate script).
        assert!((m.eq.delta0 - 0.8021022323016751).abs() < 1e-12);
        assert!((m.eq.vb - 0.9148992512839871).abs() < 1e-12);
        assert!((m.eq.eqp0 - 1.0235353265913234).abs() < 1e-12);
        assert!((m.eq.efd0 - 2.2905297097775392).abs() < 1e-12);
        assert!((m.eq.id0 - 0.8707865176537566).abs() < 1e-12);
        assert!((m.eq.iq0 - 0.35741690037328094).abs() < 1e-12);
        assert!((m.eq.pm - 0.8).abs() < 1e-12);
        assert!((m.eq.efd0 - m.params.ke * m.eq.uf0).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let m = smib();
        let d = m.derivatives(&m.equilibrium_state(), m.eq.efd0, m.eq.pm, NetworkMode::Normal);
        for v in d {
            assert!(v.abs() < 1e-10, "{d:?}");
        }
    }

    #[test]
    fn equilibrium_closure_recovers_operating_point() {
        let m = smib();
        let out = m.outputs(&m.equilibrium_state(), NetworkMode::Normal);
        assert!((out.pe - 0.8).abs() < 1e-9);
        assert!((out.qe() - 0.496).abs() < 1e-9);
        assert!((out.vt - 1.0).abs() < 1e-9);
    }

    #[test]
    fn coefficient_route_agrees_with_phasor_route() {
        let m = smib();
        let (eqp, uf) = coefficient_route(&m.coeffs, m.eq.delta0, m.eq.eqp0);
        assert!((eqp - m.eq.eqp0).abs() < 1e-9);
        assert!((uf - m.eq.uf0).abs() < 1e-9);
    }

    #[test]
    fn reference_coefficients() {
        let c = smib().coeffs;
        assert!((c.a1 - 376.99111843077515).abs() < 1e-9);
        assert_eq!(c.a2, 0.0);
        assert!(c.a3 > 0.0 && c.a4 > 0.0 && c.a5 > 0.0 && c.a6 > 0.0);
        // 1/a5 is the effective time constant T'd0 (X'd + Xe)/(Xd + Xe).
        let p = reference_machine();
        let t_eff = p.tdop * (p.xdp + p.xe) / (p.xd + p.xe);
        assert!((1.0 / c.a5 - t_eff).abs() < 1e-12);
        assert!((1.0 / c.a5 - 1.382).abs() < 1e-3);
        assert!((c.a - 400.0 / 5.9).abs() < 1e-12);
    }

    #[test]
    fn bolted_fault_gives_full_accelerating_power() {
        let m = smib();
        let s = m.equilibrium_state();
        let d = m.derivatives(&s, m.eq.efd0, m.eq.pm, NetworkMode::BoltedFault);
        assert!((d[1] - m.coeffs.a7).abs() < 1e-15);
        let out = m.outputs(&s, NetworkMode::BoltedFault);
        assert_eq!(out.pe, 0.0);
        assert_eq!(out.vt, 0.0);
        assert!((out.id - m.eq.eqp0 / m.params.xdp).abs() < 1e-15);
    }

    #[test]
    fn quadrature_angle_power() {
        let m = smib();
        let s = PlantState::new(std::f64::consts::FRAC_PI_2, 0.0, 1.3);
        let out = m.outputs(&s, NetworkMode::Normal);
        assert!((out.pe - m.coeffs.a3 * m.params.m * 1.3).abs() < 1e-12);
    }

    #[test]
    fn no_load_limit() {
        let mut p = reference_machine();
        p.xe = 0.0;
        let op = OperatingPoint { p0: 1e-9, q0: 0.0, vt0: 1.05 };
        let eq = compute_equilibrium(&p, &op).unwrap();
        assert!(eq.delta0 > 0.0 && eq.delta0 < 1e-8);
        assert!(eq.id0.abs() < 1e-8);
        assert!((eq.eqp0 - 1.05).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut p = reference_machine();
        p.xdp = 1.8;
        assert!(matches!(
            compute_equilibrium(&p, &reference_op()),
            Err(ModelError::InvalidParameter { field: "xd", .. })
        ));
        let op = OperatingPoint { p0: 0.8, q0: 0.496, vt0: 0.0 };
        assert!(matches!(compute_equilibrium(&reference_machine(), &op), Err(ModelError::Degenerate(_))));
        let mut p = reference_machine();
        p.efd_min = 1.0;
        assert!(compute_equilibrium(&p, &reference_op()).is_err());
    }

    #[test]
    fn heavy_absorption_stays_below_pi() {
        // p0 = |E_Q||V_B| sin δ0 / (xq + xe) > 0 keeps δ0 inside (0, π) even when
        // strong reactive import over a long line drives it close to π.
        let mut p = reference_machine();
        p.xe = 3.0;
        p.xq = 3.0;
        let op = OperatingPoint { p0: 2.0, q0: -3.0, vt0: 1.0 };
        let eq = compute_equilibrium(&p, &op).unwrap();
        assert!(eq.delta0 > 3.0 && eq.delta0 < std::f64::consts::PI);
    }

    #[test]
    fn generic_over_f32() {
        let p = reference_machine();
        let p32 = MachineParams {
            xd: p.xd as f32,
            xq: p.xq as f32,
            xdp: p.xdp as f32,
            xe: p.xe as f32,
            tdop: p.tdop as f32,
            m: p.m as f32,
            d: p.d as f32,
            ke: p.ke as f32,
            omega_base: p.omega_base as f32,
            efd_max: 4.5,
            efd_min: -4.5,
        };
        let m = Smib::new(p32, OperatingPoint { p0: 0.8f32, q0: 0.496, vt0: 1.0 }).unwrap();
        assert!((m.eq.delta0 - 0.8021022f32).abs() < 1e-5);
        let d = m.derivatives(&m.equilibrium_state(), m.eq.efd0, m.eq.pm, NetworkMode::Normal);
        assert!(d.iter().all(|v| v.abs() < 1e-4));
    }

    proptest! {
        #[test]
        fn lumped_form_matches_unreduced_equations(
            delta in 0.01f64..3.13, domega in -0.5f64..0.5, eqp in -1.0f64..4.0,
            efd in -4.5f64..4.5, pm in 0.1f64..1.5,
        ) {
            let m = smib();
            let s = PlantState::new(delta, domega, eqp);
            let got = m.derivatives(&s, efd, pm, NetworkMode::Normal);
            let want = unreduced_derivatives(&m, &s, efd, pm);
            for i in 0..3 {
                prop_assert!((got[i] - want[i]).abs() <= 1e-12 * want[i].abs().max(1.0));
            }
        }

        #[test]
        fn power_equals_terminal_product(delta in 0.01f64..3.13, eqp in -1.0f64..4.0) {
            let m = smib();
            let out = m.outputs(&PlantState::new(delta, 0.0, eqp), NetworkMode::Normal);
            prop_assert!((out.pe - (out.vtd * out.id + out.vtq * out.iq)).abs() < 1e-12);
            prop_assert!((out.vt - (out.vtd.powi(2) + out.vtq.powi(2)).sqrt()).abs() < 1e-15);
        }

        #[test]
        fn terminal_voltage_matches_phasor_oracle(delta in 0.01f64..3.13, eqp in 0.0f64..4.0) {
            // Build terminal voltage from complex network algebra in the bus frame.
            let m = smib();
            let p = &m.params;
            let out = m.outputs(&PlantState::new(delta, 0.0, eqp), NetworkMode::Normal);
            let rot = Complex::from_polar(1.0, delta - std::f64::consts::FRAC_PI_2);
            let i = Complex::new(out.id, out.iq) * rot;
            let vb = Complex::new(m.eq.vb, 0.0);
            let vt = vb + Complex::new(0.0, p.xe) * i;
            prop_assert!((vt.norm() - out.vt).abs() < 1e-9);
        }

        #[test]
        fn equilibrium_holds_across_operating_points(p0 in 0.1f64..1.2, q0 in -0.3f64..0.7, vt0 in 0.9f64..1.1) {
            let m = Smib::new(reference_machine(), OperatingPoint { p0, q0, vt0 }).unwrap();
            let d = m.derivatives(&m.equilibrium_state(), m.eq.efd0, m.eq.pm, NetworkMode::Normal);
            for v in d { prop_assert!(v.abs() < 1e-10); }
            let out = m.outputs(&m.equilibrium_state(), NetworkMode::Normal);
            prop_assert!((out.pe - p0).abs() < 1e-9);
            prop_assert!((out.qe() - q0).abs() < 1e-9);
            prop_assert!((out.vt - vt0).abs() < 1e-9);
        }
    }
}
