//! Structured summary written next to every run.

use serde::Serialize;
use sha2::{Digest, Sha256};
use smib_core::analysis::{compute_metrics, LyapunovReport, MetricOptions, Metrics};
use smib_core::sim::{EventKind, Scenario};
use smib_core::{Smib64, SimOutcome64};

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<EquilibriumReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<RunReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<Verdict>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cct: Vec<CctReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lyapunov: Option<LyapunovJson>,
}

impl Summary {
    pub fn new(command: &'static str, config_digest: Option<String>) -> Self {
        Self {
            tool: "smib",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_digest,
            equilibrium: None,
            runs: Vec::new(),
            verdicts: Vec::new(),
            cct: Vec::new(),
            lyapunov: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub p0: f64,
    pub q0: f64,
    pub vt0: f64,
    pub delta0_rad: f64,
    pub delta0_deg: f64,
    pub eqp0: f64,
    pub uf0: f64,
    pub efd0: f64,
    pub vb: f64,
    pub pm: f64,
    pub id0: f64,
    pub iq0: f64,
    /// α1 … α7
    pub alpha: [f64; 7],
    pub a: f64,
}

impl EquilibriumReport {
    pub fn of(m: &Smib64) -> Self {
        let (e, c) = (&m.eq, &m.coeffs);
        Self {
            p0: m.op.p0,
            q0: m.op.q0,
            vt0: m.op.vt0,
            delta0_rad: e.delta0,
            delta0_deg: e.delta0.to_degrees(),
            eqp0: e.eqp0,
            uf0: e.uf0,
            efd0: e.efd0,
            vb: e.vb,
            pm: e.pm,
            id0: e.id0,
            iq0: e.iq0,
            alpha: [c.a1, c.a2, c.a3, c.a4, c.a5, c.a6, c.a7],
            a: c.a,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricsJson {
    pub settling_time_2pct: f64,
    pub first_swing_peak: f64,
    pub first_swing_time: f64,
    pub overshoot_pct: f64,
    pub backswing_detected: bool,
    pub final_value: f64,
    pub peak_deviation: f64,
}

impl From<Metrics<f64>> for MetricsJson {
    fn from(m: Metrics<f64>) -> Self {
        Self {
            settling_time_2pct: m.settling_time_2pct,
            first_swing_peak: m.first_swing_peak,
            first_swing_time: m.first_swing_time,
            overshoot_pct: m.overshoot_pct,
            backswing_detected: m.backswing_detected,
            final_value: m.final_value,
            peak_deviation: m.peak_deviation,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SignalReport {
    pub metrics: Option<MetricsJson>,
    /// Why `metrics` is absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Extremes after the reference time.
    pub max: f64,
    pub min: f64,
}

impl SignalReport {
    fn of(t: &[f64], y: &[f64], t_ref: f64, final_value: Option<f64>, stable: bool) -> Self {
        let after = t.iter().zip(y).filter(|(&s, _)| s >= t_ref).map(|(_, &v)| v);
        let (min, max) = after.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if !stable {
            return Self { metrics: None, error: Some("run lost synchronism".into()), max, min };
        }
        let opts = MetricOptions { final_value, ..MetricOptions::default() };
        match compute_metrics(t, y, t_ref, &opts) {
            Ok(m) => Self { metrics: Some(m.into()), error: None, max, min },
            Err(e) => Self { metrics: None, error: Some(e.to_string()), max, min },
        }
    }

    pub fn settling(&self) -> Option<f64> {
        self.metrics.map(|m| m.settling_time_2pct)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub controller: &'static str,
    pub scenario: &'static str,
    pub stable: bool,
    pub instability_time: Option<f64>,
    /// Metrics are taken from the last scheduled event on.
    pub t_ref: f64,
    pub samples: usize,
    pub delta: SignalReport,
    pub pe: SignalReport,
    pub vt: SignalReport,
    pub guard_samples: usize,
    pub saturated_samples: usize,
    pub csv_sha256: String,
}

impl RunReport {
    pub fn of(model: &Smib64, sc: &Scenario<f64>, out: &SimOutcome64, label: &'static str) -> Self {
        let s = &out.series;
        let t_ref = sc.events.last().map_or(0.0, |e| e.t);
        let factor = sc.events.iter().rev().find_map(|e| match e.kind {
            EventKind::StepPm(f) => Some(f),
            _ => None,
        });
        // A new power level moves the rest angle, so δ then settles to its
        // own tail mean.
        let delta_final = if factor.is_some() { None } else { Some(model.eq.delta0) };
        let pe_final = Some(model.eq.pm * factor.unwrap_or(1.0));
        Self {
            controller: sc.controller.name(),
            scenario: label,
            stable: out.stable,
            instability_time: out.instability_time,
            t_ref,
            samples: s.len(),
            delta: SignalReport::of(&s.t, &s.delta, t_ref, delta_final, out.stable),
            pe: SignalReport::of(&s.t, &s.pe, t_ref, pe_final, out.stable),
            vt: SignalReport::of(&s.t, &s.vt, t_ref, None, out.stable),
            guard_samples: s.guard.iter().filter(|&&g| g).count(),
            saturated_samples: s.sat.iter().filter(|&&g| g).count(),
            csv_sha256: sha256_hex(s.to_csv_string().as_bytes()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbeJson {
    pub duration: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CctReport {
    pub controller: &'static str,
    pub p0: f64,
    pub fault_start: f64,
    pub tol: f64,
    pub duration: f64,
    pub clearing_time: f64,
    /// Verdict on the fault duration of the configured scenario.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub configured_fault_stable: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub configured_fault_settling: Option<f64>,
    pub trace: Vec<ProbeJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovJson {
    pub lambdas: [f64; 3],
    pub a: [[f64; 3]; 3],
    pub p: [[f64; 3]; 3],
    pub q: [[f64; 3]; 3],
    pub pb_norm: f64,
    pub lambda_min_q: f64,
    pub gamma1_max: f64,
    pub ultimate_bound_coeff: f64,
    pub gamma2: f64,
    pub ultimate_bound: f64,
    pub residual: f64,
}

impl LyapunovJson {
    pub fn of(lambdas: [f64; 3], r: &LyapunovReport<f64>, gamma2: f64) -> Self {
        Self {
            lambdas,
            a: r.a,
            p: r.p,
            q: r.q,
            pb_norm: r.pb_norm,
            lambda_min_q: r.lambda_min_q,
            gamma1_max: r.gamma1_max,
            ultimate_bound_coeff: r.ultimate_bound_coeff,
            gamma2,
            ultimate_bound: r.ultimate_bound(gamma2),
            residual: r.residual,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
