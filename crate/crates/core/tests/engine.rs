mod common;

use common::{gains, model};
use smib_core::analysis::{compute_metrics, MetricOptions, MetricsError};
use smib_core::sim::{simulate, ControllerKind, Event, EventKind, Scenario};
use smib_core::*;

#[test]
fn equilibrium_holds_for_every_controller() {
    let m = model();
    for k in ControllerKind::ALL {
        let out = simulate(&m, &Scenario::new(k, 10.0), &gains()).unwrap();
        let s = &out.series;
        assert!(out.stable);
        for i in 0..s.len() {
            assert!((s.delta[i] - m.eq.delta0).abs() < 1e-9, "{k:?} δ at {}", s.t[i]);
            assert!(s.domega[i].abs() < 1e-9);
            assert!((s.eqp[i] - m.eq.eqp0).abs() < 1e-9);
            assert!((s.efd[i] - m.eq.efd0).abs() < 1e-9);
        }
    }
}

fn final_state(kind: ControllerKind, dt: f64) -> PlantState<f64> {
    let sc = Scenario::fault(kind, 3.0, 0.6, 0.18).with_dt(dt).with_stride(1000);
    simulate(&model(), &sc, &gains()).unwrap().series.last_state().unwrap()
}

fn gap(a: &PlantState<f64>, b: &PlantState<f64>) -> f64 {
    (a.delta - b.delta).abs().max((a.domega - b.domega).abs()).max((a.eqp - b.eqp).abs())
}

#[test]
fn halving_dt_changes_final_state_negligibly() {
    for k in [ControllerKind::Bsfl, ControllerKind::Dfl] {
        let d = gap(&final_state(k, 1e-4), &final_state(k, 5e-5));
        assert!(d < 1e-8, "{k:?}: {d}");
    }
}

#[test]
fn runs_are_bit_identical() {
    let m = model();
    for k in ControllerKind::ALL {
        let sc = Scenario::fault(k, 2.0, 0.6, 0.18);
        let a = simulate(&m, &sc, &gains()).unwrap();
        let b = simulate(&m, &sc, &gains()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.series.to_csv_string(), b.series.to_csv_string());
        assert_eq!(a.series.scenario_digest.len(), 64);
    }
}

#[test]
fn events_switch_exactly_on_grid_points() {
    let m = model();
    let sc = Scenario::fault(ControllerKind::Bsfl, 1.0, 0.6, 0.18).with_stride(1);
    let s = simulate(&m, &sc, &gains()).unwrap().series;
    for (k, &pe) in s.pe.iter().enumerate() {
        let faulted = (6000..7800).contains(&k);
        assert_eq!(pe == 0.0, faulted, "k = {k}, pe = {pe}");
        assert_eq!(s.vt[k] == 0.0, faulted);
    }
}

#[test]
fn load_step_uses_nominal_power_in_the_law() {
    let m = model();
    let sc = Scenario::new(ControllerKind::Bsfl, 8.0).with_events(vec![Event::new(1.0, EventKind::StepPm(1.2))]);
    let s = simulate(&m, &sc, &gains()).unwrap().series;
    // Any equilibrium has Pe = Pm; the new one sits away from the nominal angle.
    let pe_end = *s.pe.last().unwrap();
    assert!((pe_end - 0.96).abs() < 1e-4, "{pe_end}");
    assert!((s.delta.last().unwrap() - m.eq.delta0).abs() > 1e-3);
}

#[test]
fn open_loop_fault_is_only_marginally_damped() {
    let m = model();
    let out = simulate(&m, &Scenario::fault(ControllerKind::OpenLoop, 20.0, 0.6, 0.18), &gains()).unwrap();
    if !out.stable {
        return;
    }
    let s = &out.series;
    let r = compute_metrics(&s.t, &s.delta, 0.78, &MetricOptions::default().with_final(m.eq.delta0));
    assert!(matches!(r, Err(MetricsError::Unsettled { .. })), "{r:?}");

    // Log decrement between successive swing maxima after the first second.
    let dev: Vec<f64> = s.delta.iter().map(|d| d - m.eq.delta0).collect();
    let peaks: Vec<f64> = (1..dev.len() - 1)
        .filter(|&i| s.t[i] > 2.0 && dev[i] > dev[i - 1] && dev[i] >= dev[i + 1] && dev[i] > 0.0)
        .map(|i| dev[i])
        .collect();
    assert!(peaks.len() > 5);
    let decrement = (peaks[0] / peaks[peaks.len() - 1]).ln() / (peaks.len() - 1) as f64;
    let zeta = decrement / (4.0 * std::f64::consts::PI * std::f64::consts::PI + decrement * decrement).sqrt();
    assert!(zeta < 0.05, "open-loop damping ratio {zeta}");
}

#[test]
fn instability_is_monotone_in_fault_duration() {
    let m = model();
    for k in [ControllerKind::Bsfl, ControllerKind::Dfl] {
        let verdicts: Vec<bool> = (0..14)
            .map(|i| {
                let d = 0.18 + 0.01 * i as f64;
                simulate(&m, &Scenario::fault(k, 4.0, 0.6, d).with_stride(100), &gains()).unwrap().stable
            })
            .collect();
        let first_bad = verdicts.iter().position(|s| !s).expect("bracket");
        assert!(verdicts[first_bad..].iter().all(|s| !s), "{k:?}: {verdicts:?}");
        assert!(first_bad > 0);
    }
}

#[test]
fn single_precision_tracks_double() {
    let p = common::reference_machine();
    let cast = MachineParams {
        xd: p.xd as f32,
        xq: p.xq as f32,
        xdp: p.xdp as f32,
        xe: p.xe as f32,
        tdop: p.tdop as f32,
        m: p.m as f32,
        d: p.d as f32,
        ke: p.ke as f32,
        omega_base: p.omega_base as f32,
        efd_max: p.efd_max as f32,
        efd_min: p.efd_min as f32,
    };
    let m32 = Smib::new(cast, OperatingPoint { p0: 0.8f32, q0: 0.496, vt0: 1.0 }).unwrap();
    let g32 = ControllerSet { bsfl: Some(BsflGains::new(5.0f32, 10.0, 15.0).unwrap()), ..Default::default() };
    let sc = Scenario::new(ControllerKind::Bsfl, 2.0f32)
        .with_dt(1e-3)
        .with_initial_deviation(Deviation::new(0.05, 0.0, 0.0));
    let s32 = simulate(&m32, &sc, &g32).unwrap().series;

    let sc64 = Scenario::new(ControllerKind::Bsfl, 2.0).with_dt(1e-3).with_initial_deviation(Deviation::new(0.05, 0.0, 0.0));
    let s64 = simulate(&model(), &sc64, &gains()).unwrap().series;
    assert_eq!(s32.len(), s64.len());
    for i in 0..s32.len() {
        assert!((s32.delta[i] as f64 - s64.delta[i]).abs() < 1e-4, "t = {}", s64.t[i]);
    }
}
