mod common;

use common::{gains, model};
use smib_core::analysis::chain::{bidiagonal_solution, brunovsky_matrix, propagate};
use smib_core::analysis::{chain_matrix, compute_metrics, linearization_residual, MetricOptions};
use smib_core::controllers::{bsfl_control, cpss_derivatives, dfl_control};
use smib_core::sim::{simulate, ControllerKind, Scenario};
use smib_core::*;

fn perturbed(kind: ControllerKind, secs: f64) -> Scenario64 {
    Scenario::new(kind, secs).with_initial_deviation(Deviation::new(0.05, 0.0, 0.0))
}

#[test]
fn backstepping_chain_is_exact() {
    let m = model();
    let g = gains();
    let out = simulate(&m, &perturbed(ControllerKind::Bsfl, 2.0), &g).unwrap();
    let s = &out.series;
    assert!(out.stable);
    assert!(s.guard.iter().chain(&s.sat).all(|f| !f));

    let l = g.bsfl.unwrap().lambdas();
    let r = linearization_residual(&s.t, &s.chain, &chain_matrix(l)).unwrap();
    assert!(r.within(1e-5), "relative residuals {:?}", r.relative());

    let xi0 = s.chain[0];
    let worst = s
        .t
        .iter()
        .zip(&s.chain)
        .map(|(&t, xi)| {
            let want = bidiagonal_solution(l, xi0, t);
            (0..3).map(|i| (xi[i] - want[i]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "max |ξ − ξ_analytic| = {worst}");
}

#[test]
fn dfl_chain_is_exact() {
    let m = model();
    let g = gains();
    let out = simulate(&m, &perturbed(ControllerKind::Dfl, 2.0), &g).unwrap();
    let s = &out.series;
    assert!(s.guard.iter().chain(&s.sat).all(|f| !f));

    let a = brunovsky_matrix(&g.dfl.unwrap());
    let r = linearization_residual(&s.t, &s.chain, &a).unwrap();
    assert!(r.within(1e-5), "relative residuals {:?}", r.relative());

    let z0 = s.chain[0];
    for (&t, z) in s.t.iter().zip(&s.chain) {
        let want = propagate(&a, &z0, t);
        for i in 0..3 {
            assert!((z[i] - want[i]).abs() < 1e-4, "t={t} i={i}");
        }
    }
}

#[test]
fn faster_poles_settle_faster() {
    let m = model();
    let mut last = f64::INFINITY;
    for lam in [2.0, 5.0, 10.0] {
        let g = ControllerSet { bsfl: Some(BsflGains::new(lam, lam, lam).unwrap()), ..Default::default() };
        let out = simulate(&m, &perturbed(ControllerKind::Bsfl, 12.0), &g).unwrap();
        let xi1: Vec<f64> = out.series.chain.iter().map(|c| c[0]).collect();
        let ts = compute_metrics(&out.series.t, &xi1, 0.0, &MetricOptions::default().with_final(0.0))
            .unwrap()
            .settling_time_2pct;
        assert!(ts < last, "λ = {lam}: {ts} s is not below {last} s");
        last = ts;
    }
}

#[test]
fn limited_outputs_stay_in_bounds_and_finite() {
    let m = model();
    let lim = Some(FieldLimits::new(-4.5, 4.5).unwrap());
    let b = gains().bsfl.unwrap().with_limits(lim);
    let d = gains().dfl.unwrap().with_limits(lim);
    let p = common::cpss();
    let n = 25;
    let pi = std::f64::consts::PI;
    for i in 0..n {
        let delta = 0.01 + (pi - 0.02) * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let w = -0.5 + j as f64 / (n - 1) as f64;
            for k in 0..n {
                let de = -5.0 + 10.0 * k as f64 / (n - 1) as f64;
                let x = Deviation::new(delta - m.eq.delta0, w, de);
                for cmd in [bsfl_control(&x, &b, &m, m.eq.efd0), dfl_control(&x, &d, &m, m.eq.efd0)] {
                    assert!(cmd.efd.is_finite() && cmd.efd.abs() <= 4.5, "{cmd:?} at {x:?}");
                }
                let cs = CpssState { x_tr: 1.0 + de * 0.1, x_w: w, x_ll1: -w, x_ll2: w, x_amp: de * 2.0, x_fb: de };
                let out = cpss_derivatives(&cs, &p, 1.0, 0.9, w);
                assert!(out.efd.abs() <= 4.5 && out.rates.to_array().iter().all(|v| v.is_finite()));
            }
        }
    }
}

#[test]
fn limited_fault_run_respects_ceiling() {
    let m = model();
    let mut g = gains();
    let lim = Some(FieldLimits::new(-4.5, 4.5).unwrap());
    g.bsfl = g.bsfl.map(|b| b.with_limits(lim));
    g.dfl = g.dfl.map(|d| d.with_limits(lim));
    for k in [ControllerKind::Bsfl, ControllerKind::Dfl, ControllerKind::Cpss] {
        let out = simulate(&m, &Scenario::fault(k, 4.0, 0.6, 0.18), &g).unwrap();
        let s = &out.series;
        assert!(s.efd.iter().all(|e| e.is_finite() && e.abs() <= 4.5), "{k:?}");
        assert!(s.sat.iter().any(|&f| f), "{k:?} never reached the ceiling");
    }
}
