//! JSON run configuration.
//!
//! The schema is strict: unknown keys are rejected and every optional value
//! has an explicit default, so re-serializing a loaded config writes out the
//! complete, canonical document that the digest is taken over.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use smib_core::sim::{ControllerKind, Event, EventKind, Scenario};
use smib_core::*;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub machine: MachineSection,
    pub operating_point: OperatingPointSection,
    pub controllers: ControllersSection,
    pub scenario: ScenarioSection,
    /// Second experiment run by `compare`.
    #[serde(default = "default_load_step")]
    pub load_step_scenario: ScenarioSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineSection {
    pub xd: f64,
    pub xq: f64,
    pub xdp: f64,
    pub xe: f64,
    pub tdop: f64,
    pub m: f64,
    #[serde(default)]
    pub d: f64,
    pub ke: f64,
    #[serde(default = "default_omega_base")]
    pub omega_base: f64,
    pub efd_max: f64,
    pub efd_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatingPointSection {
    pub p0: f64,
    pub q0: f64,
    pub vt0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllersSection {
    #[serde(default)]
    pub bsfl: Option<BsflSection>,
    #[serde(default)]
    pub dfl: Option<DflSection>,
    #[serde(default)]
    pub cpss: Option<CpssSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsSection {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsflSection {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    #[serde(default = "default_sin_eps")]
    pub sin_eps: f64,
    #[serde(default)]
    pub field_limits: Option<LimitsSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DflSection {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    #[serde(default = "default_sin_eps")]
    pub sin_eps: f64,
    #[serde(default)]
    pub field_limits: Option<LimitsSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpssSection {
    pub ke: f64,
    pub te: f64,
    pub kfe: f64,
    pub tfe: f64,
    pub tr: f64,
    pub kstab: f64,
    pub tw: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub vpss_max: f64,
    pub vpss_min: f64,
    pub efd_max: f64,
    pub efd_min: f64,
    /// Back-computed from the operating point when null.
    #[serde(default)]
    pub vref: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ControllerName {
    Bsfl,
    Dfl,
    Cpss,
    Open,
}

impl From<ControllerName> for ControllerKind {
    fn from(c: ControllerName) -> Self {
        match c {
            ControllerName::Bsfl => ControllerKind::Bsfl,
            ControllerName::Dfl => ControllerKind::Dfl,
            ControllerName::Cpss => ControllerKind::Cpss,
            ControllerName::Open => ControllerKind::OpenLoop,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventName {
    ApplyFault,
    ClearFault,
    StepPm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSection {
    #[serde(default)]
    pub name: String,
    pub t: f64,
    pub kind: EventName,
    /// Multiplier on the nominal mechanical power, `step_pm` only.
    #[serde(default)]
    pub factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_controller")]
    pub controller: ControllerName,
    #[serde(default)]
    pub events: Vec<EventSection>,
    /// `[Δδ, Δω, ΔE'q]` at t = 0.
    #[serde(default)]
    pub initial_deviation: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub csv: Option<String>,
    #[serde(default)]
    pub summary: Option<String>,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { csv: None, summary: None, record_stride: default_stride() }
    }
}

fn default_omega_base() -> f64 {
    2.0 * std::f64::consts::PI * 60.0
}

fn default_sin_eps() -> f64 {
    1e-3
}

fn default_dt() -> f64 {
    1e-4
}

fn default_controller() -> ControllerName {
    ControllerName::Bsfl
}

fn default_stride() -> usize {
    10
}

fn default_load_step() -> ScenarioSection {
    ScenarioSection {
        duration: 10.0,
        dt: default_dt(),
        controller: default_controller(),
        events: vec![EventSection { name: "load_step".into(), t: 1.0, kind: EventName::StepPm, factor: Some(1.2) }],
        initial_deviation: [0.0; 3],
    }
}

fn invalid(path: impl Into<String>, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {reason}", path.into()))
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Canonical form: every default explicit, fixed key order.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn digest(&self) -> String {
        let h = Sha256::digest(self.to_canonical_json().as_bytes());
        h.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Re-checks every module-level invariant that does not need the
    /// equilibrium. A degenerate operating point is left to the equilibrium
    /// stage so it gets its own exit code.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Err(e) = self.machine_params().validate() {
            return Err(match e {
                ModelError::InvalidParameter { field, reason } => invalid(format!("machine.{field}"), reason),
                other => invalid("machine", other),
            });
        }
        let op = &self.operating_point;
        for (name, v) in [("p0", op.p0), ("q0", op.q0), ("vt0", op.vt0)] {
            if !v.is_finite() {
                return Err(invalid(format!("operating_point.{name}"), "must be finite"));
            }
        }
        if !(op.p0 > 0.0) {
            return Err(invalid("operating_point.p0", "must be > 0"));
        }
        self.gains()?;
        self.scenario_for("scenario", &self.scenario, self.scenario.controller.into())?;
        self.scenario_for("load_step_scenario", &self.load_step_scenario, self.load_step_scenario.controller.into())?;
        if self.output.record_stride == 0 {
            return Err(invalid("output.record_stride", "must be at least 1"));
        }
        Ok(())
    }

    pub fn machine_params(&self) -> MachineParams64 {
        let m = &self.machine;
        MachineParams {
            xd: m.xd,
            xq: m.xq,
            xdp: m.xdp,
            xe: m.xe,
            tdop: m.tdop,
            m: m.m,
            d: m.d,
            ke: m.ke,
            omega_base: m.omega_base,
            efd_max: m.efd_max,
            efd_min: m.efd_min,
        }
    }

    pub fn operating_point(&self) -> OperatingPoint64 {
        let o = &self.operating_point;
        OperatingPoint { p0: o.p0, q0: o.q0, vt0: o.vt0 }
    }

    pub fn gains(&self) -> Result<ControllerSet64, CliError> {
        let gain_err = |section: &str, e: ControllerError| match e {
            ControllerError::InvalidGain { field, reason } => invalid(format!("controllers.{section}.{field}"), reason),
            other => invalid(format!("controllers.{section}"), other),
        };
        let limits = |section: &str, l: Option<LimitsSection>| -> Result<Option<FieldLimits<f64>>, CliError> {
            l.map(|l| FieldLimits::new(l.min, l.max))
                .transpose()
                .map_err(|_| invalid(format!("controllers.{section}.field_limits"), "require max > 0 > min"))
        };
        let c = &self.controllers;
        let bsfl = match c.bsfl {
            Some(b) => Some(
                BsflGains::new(b.l1, b.l2, b.l3)
                    .and_then(|g| g.with_sin_eps(b.sin_eps))
                    .map_err(|e| gain_err("bsfl", e))?
                    .with_limits(limits("bsfl", b.field_limits)?),
            ),
            None => None,
        };
        let dfl = match c.dfl {
            Some(d) => Some(
                DflGains::new(d.k1, d.k2, d.k3)
                    .and_then(|g| g.with_sin_eps(d.sin_eps))
                    .map_err(|e| gain_err("dfl", e))?
                    .with_limits(limits("dfl", d.field_limits)?),
            ),
            None => None,
        };
        let cpss = match c.cpss {
            Some(p) => {
                let params = CpssParams {
                    ke: p.ke,
                    te: p.te,
                    kfe: p.kfe,
                    tfe: p.tfe,
                    tr: p.tr,
                    kstab: p.kstab,
                    tw: p.tw,
                    t1: p.t1,
                    t2: p.t2,
                    t3: p.t3,
                    t4: p.t4,
                    vpss_max: p.vpss_max,
                    vpss_min: p.vpss_min,
                    efd_max: p.efd_max,
                    efd_min: p.efd_min,
                    vref: p.vref,
                };
                params.validate().map_err(|e| gain_err("cpss", e))?;
                Some(params)
            }
            None => None,
        };
        Ok(ControllerSet { bsfl, dfl, cpss })
    }

    /// Fails with exit code 2 naming the section when `kind` has no gains.
    pub fn require(&self, kind: ControllerKind) -> Result<(), CliError> {
        let c = &self.controllers;
        let present = match kind {
            ControllerKind::Bsfl => c.bsfl.is_some(),
            ControllerKind::Dfl => c.dfl.is_some(),
            ControllerKind::Cpss => c.cpss.is_some(),
            ControllerKind::OpenLoop => true,
        };
        if present {
            Ok(())
        } else {
            Err(invalid(format!("controllers.{}", kind.name()), "section is missing"))
        }
    }

    pub fn fault_scenario(&self, kind: ControllerKind) -> Result<Scenario64, CliError> {
        self.scenario_for("scenario", &self.scenario, kind)
    }

    pub fn load_step(&self, kind: ControllerKind) -> Result<Scenario64, CliError> {
        self.scenario_for("load_step_scenario", &self.load_step_scenario, kind)
    }

    fn scenario_for(&self, path: &str, s: &ScenarioSection, kind: ControllerKind) -> Result<Scenario64, CliError> {
        let mut events = Vec::with_capacity(s.events.len());
        for (i, e) in s.events.iter().enumerate() {
            let kind = match (e.kind, e.factor) {
                (EventName::ApplyFault, None) => EventKind::ApplyFault,
                (EventName::ClearFault, None) => EventKind::ClearFault,
                (EventName::StepPm, Some(f)) => EventKind::StepPm(f),
                (EventName::StepPm, None) => {
                    return Err(invalid(format!("{path}.events[{i}].factor"), "required for step_pm"))
                }
                (_, Some(_)) => {
                    return Err(invalid(format!("{path}.events[{i}].factor"), "only allowed for step_pm"))
                }
            };
            events.push(Event::new(e.t, kind));
        }
        let [x1, x2, x3] = s.initial_deviation;
        let sc = Scenario::new(kind, s.duration)
            .with_dt(s.dt)
            .with_stride(self.output.record_stride)
            .with_events(events)
            .with_initial_deviation(Deviation::new(x1, x2, x3));
        let cpss = self.gains().ok().and_then(|g| g.cpss);
        sc.validate(cpss.as_ref()).map_err(|e| match e {
            SimError::InvalidScenario { field, reason } => invalid(format!("{path}.{field}"), reason),
            other => invalid(path, other),
        })?;
        Ok(sc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = include_str!("../configs/reference.json");

    fn reference() -> Config {
        Config::from_json(REFERENCE).unwrap()
    }

    fn mutated(f: impl FnOnce(&mut serde_json::Value)) -> Result<Config, CliError> {
        let mut v: serde_json::Value = serde_json::from_str(REFERENCE).unwrap();
        f(&mut v);
        Config::from_json(&v.to_string())
    }

    fn message(r: Result<Config, CliError>) -> String {
        match r {
            Err(CliError::Config(m)) => m,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let a = reference();
        let text = a.to_canonical_json();
        let b = Config::from_json(&text).unwrap();
        assert_eq!(a, b);
        assert_eq!(text, b.to_canonical_json());
        assert_eq!(a.digest(), b.digest());
    }

    #[test]
    fn defaults_are_made_explicit() {
        let c = mutated(|v| {
            v.as_object_mut().unwrap().remove("load_step_scenario");
            v["scenario"].as_object_mut().unwrap().remove("dt");
        })
        .unwrap();
        let text = c.to_canonical_json();
        assert!(text.contains("\"load_step_scenario\""));
        assert!(text.contains("\"dt\":0.0001"));
        assert!(text.contains("\"record_stride\":10"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let m = message(mutated(|v| v["machine"]["xdd"] = 1.0.into()));
        assert!(m.contains("xdd"), "{m}");
        assert!(mutated(|v| v["extra"] = true.into()).is_err());
    }

    #[test]
    fn errors_name_the_field() {
        assert!(message(mutated(|v| v["machine"]["xdp"] = 2.0.into())).starts_with("machine.xd"));
        assert!(message(mutated(|v| v["controllers"]["bsfl"]["l1"] = (-1.0).into())).starts_with("controllers.bsfl.l1"));
        assert!(message(mutated(|v| v["scenario"]["events"][0]["t"] = 0.60005.into())).starts_with("scenario.events[0].t"));
        assert!(message(mutated(|v| v["scenario"]["events"][0]["factor"] = 1.1.into())).starts_with("scenario.events[0].factor"));
        assert!(message(mutated(|v| v["output"]["record_stride"] = 0.into())).contains("record_stride"));
    }

    #[test]
    fn degenerate_voltage_passes_validation() {
        // reported later by the equilibrium stage
        assert!(mutated(|v| v["operating_point"]["vt0"] = 0.0.into()).is_ok());
    }

    #[test]
    fn missing_section_is_named() {
        let c = mutated(|v| {
            v["controllers"].as_object_mut().unwrap().remove("cpss");
        })
        .unwrap();
        assert!(message(c.require(ControllerKind::Cpss).map(|_| c.clone())).contains("controllers.cpss"));
        assert!(c.require(ControllerKind::Bsfl).is_ok());
    }

    #[test]
    fn digest_tracks_content() {
        let a = reference();
        let mut b = a.clone();
        b.operating_point.p0 = 0.81;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
