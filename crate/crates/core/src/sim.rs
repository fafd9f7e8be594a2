//! Fixed-step closed-loop simulation through a timed event schedule.
//!
//! Plant and (for the conventional exciter) controller states are integrated
//! together as one 9-vector. The control law is re-evaluated at every RK4
//! stage. Events are switched between steps, on the step grid.

use std::io::{self, Write};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::controllers::{
    bsfl_control, bsfl_transform, cpss_derivatives, cpss_init, cpss_reference, dfl_control, dfl_transform,
    BsflGains, ControllerError, CpssParams, CpssState, DflGains, FieldCommand,
};
use crate::model::{Deviation, MachineParams, ModelError, NetworkMode, OperatingPoint, PlantState, Smib};
use crate::ode::{rk4_increment, Compensated};
use crate::scalar::Scalar;

pub const CSV_HEADER: &str = "t,delta_rad,domega_pu,eqp_pu,pe_pu,vt_pu,efd_pu,uf_pu,guard,sat";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario `{field}`: {reason}")]
    InvalidScenario { field: String, reason: String },
    #[error("no gains supplied for controller {0:?}")]
    MissingGains(ControllerKind),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
}

fn bad(field: impl Into<String>, reason: impl Into<String>) -> SimError {
    SimError::InvalidScenario { field: field.into(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind<T> {
    ApplyFault,
    ClearFault,
    /// Multiply the *nominal* mechanical power by this factor from now on.
    StepPm(T),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event<T> {
    pub t: T,
    pub kind: EventKind<T>,
}

impl<T: Scalar> Event<T> {
    pub fn new(t: T, kind: EventKind<T>) -> Self {
        Self { t, kind }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControllerKind {
    Bsfl,
    Dfl,
    Cpss,
    /// Field voltage frozen at its steady value.
    OpenLoop,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 4] =
        [ControllerKind::Bsfl, ControllerKind::Dfl, ControllerKind::Cpss, ControllerKind::OpenLoop];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Bsfl => "bsfl",
            ControllerKind::Dfl => "dfl",
            ControllerKind::Cpss => "cpss",
            ControllerKind::OpenLoop => "open",
        }
    }

    /// Whether `delta` still counts as synchronous operation.
    ///
    /// The linearizing laws are only defined on `0 < δ < π`. For the
    /// conventional exciter and the open loop nothing is singular at `δ = 0`,
    /// so only a pole slip (`|δ| ≥ π`) is loss of synchronism.
    pub fn in_stability_region<T: Scalar>(self, delta: T) -> bool {
        match self {
            ControllerKind::Bsfl | ControllerKind::Dfl => delta > T::zero() && delta < T::PI(),
            ControllerKind::Cpss | ControllerKind::OpenLoop => delta.abs() < T::PI(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ControllerSet<T> {
    pub bsfl: Option<BsflGains<T>>,
    pub dfl: Option<DflGains<T>>,
    pub cpss: Option<CpssParams<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub duration: T,
    pub dt: T,
    pub events: Vec<Event<T>>,
    pub controller: ControllerKind,
    pub record_stride: usize,
    /// Offset from the equilibrium at `t = 0`.
    pub initial_deviation: Deviation<T>,
}

impl<T: Scalar> Scenario<T> {
    pub fn new(controller: ControllerKind, duration: T) -> Self {
        Self {
            duration,
            dt: T::lit(1e-4),
            events: Vec::new(),
            controller,
            record_stride: 10,
            initial_deviation: Deviation::default(),
        }
    }

    pub fn with_events(mut self, events: Vec<Event<T>>) -> Self {
        self.events = events;
        self
    }

    pub fn with_dt(mut self, dt: T) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_initial_deviation(mut self, x: Deviation<T>) -> Self {
        self.initial_deviation = x;
        self
    }

    /// Temporary bolted fault from `start` lasting `duration`.
    pub fn fault(controller: ControllerKind, horizon: T, start: T, duration: T) -> Self {
        Self::new(controller, horizon).with_events(vec![
            Event::new(start, EventKind::ApplyFault),
            Event::new(start + duration, EventKind::ClearFault),
        ])
    }

    /// Index of `t` on the step grid, if it lies on it.
    fn grid_index(&self, t: T) -> Option<usize> {
        let k = (t / self.dt).round();
        let tol = T::lit(1e-9) * t.abs().max(T::one());
        if (k * self.dt - t).abs() <= tol && k >= T::zero() {
            k.to_usize()
        } else {
            None
        }
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round().to_usize().unwrap_or(0)
    }

    pub fn validate(&self, cpss: Option<&CpssParams<T>>) -> Result<(), SimError> {
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(bad("dt", "must be positive"));
        }
        if !(self.duration > T::zero() && self.duration.is_finite()) {
            return Err(bad("duration", "must be positive"));
        }
        if self.grid_index(self.duration).is_none() {
            return Err(bad("duration", "must be an integer multiple of dt"));
        }
        if self.record_stride == 0 {
            return Err(bad("record_stride", "must be at least 1"));
        }
        let x = &self.initial_deviation;
        if !(x.x1.is_finite() && x.x2.is_finite() && x.x3.is_finite()) {
            return Err(bad("initial_deviation", "must be finite"));
        }
        let mut prev = T::zero();
        for (i, e) in self.events.iter().enumerate() {
            let field = format!("events[{i}].t");
            if !(e.t >= T::zero()) || e.t > self.duration {
                return Err(bad(field, "must lie in [0, duration]"));
            }
            if e.t < prev {
                return Err(bad(field, "events must be sorted by time"));
            }
            if self.grid_index(e.t).is_none() {
                return Err(bad(field, format!("{} is not a multiple of dt = {}", e.t, self.dt)));
            }
            if let EventKind::StepPm(f) = e.kind {
                if !(f > T::zero() && f.is_finite()) {
                    return Err(bad(format!("events[{i}].factor"), "must be positive"));
                }
            }
            prev = e.t;
        }
        if self.controller == ControllerKind::Cpss {
            if let Some(p) = cpss {
                let five = T::lit(5.0);
                if !(self.dt < p.te / five && self.dt < p.tr / five) {
                    return Err(bad("dt", format!("must be below te/5 and tr/5 ({} and {})", p.te / five, p.tr / five)));
                }
            }
        }
        Ok(())
    }
}

/// Recorded signal selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    Delta,
    Domega,
    Eqp,
    Pe,
    Vt,
    Efd,
    Uf,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries<T> {
    pub t: Vec<T>,
    pub delta: Vec<T>,
    pub domega: Vec<T>,
    pub eqp: Vec<T>,
    pub pe: Vec<T>,
    pub vt: Vec<T>,
    pub efd: Vec<T>,
    pub uf: Vec<T>,
    /// Singularity guard active at any stage since the previous sample.
    pub guard: Vec<bool>,
    /// Output limiter active at any stage since the previous sample.
    pub sat: Vec<bool>,
    /// ξ (backstepping) or z (DFL) coordinates; empty for other controllers.
    pub chain: Vec<[T; 3]>,
    pub scenario_digest: String,
    pub param_digest: String,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn column(&self, c: Column) -> &[T] {
        match c {
            Column::Delta => &self.delta,
            Column::Domega => &self.domega,
            Column::Eqp => &self.eqp,
            Column::Pe => &self.pe,
            Column::Vt => &self.vt,
            Column::Efd => &self.efd,
            Column::Uf => &self.uf,
        }
    }

    pub fn last_state(&self) -> Option<PlantState<T>> {
        let i = self.len().checked_sub(1)?;
        Some(PlantState::new(self.delta[i], self.domega[i], self.eqp[i]))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                self.t[i],
                self.delta[i],
                self.domega[i],
                self.eqp[i],
                self.pe[i],
                self.vt[i],
                self.efd[i],
                self.uf[i],
                u8::from(self.guard[i]),
                u8::from(self.sat[i]),
            )?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome<T> {
    pub series: TimeSeries<T>,
    pub stable: bool,
    pub instability_time: Option<T>,
}

fn sha256_hex(s: &str) -> String {
    Sha256::digest(s.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Plant plus controller evaluated as one vector field.
pub struct ClosedLoop<'a, T> {
    pub model: &'a Smib<T>,
    pub kind: ControllerKind,
    pub bsfl: Option<&'a BsflGains<T>>,
    pub dfl: Option<&'a DflGains<T>>,
    pub cpss: Option<&'a CpssParams<T>>,
    pub vref: T,
}

/// `[δ, Δω, E'q, x_tr, x_w, x_ll1, x_ll2, x_amp, x_fb]`
pub type Bundle<T> = [T; 9];

impl<'a, T: Scalar> ClosedLoop<'a, T> {
    pub fn new(model: &'a Smib<T>, kind: ControllerKind, gains: &'a ControllerSet<T>) -> Result<Self, SimError> {
        let missing = || SimError::MissingGains(kind);
        let mut cl = Self { model, kind, bsfl: None, dfl: None, cpss: None, vref: T::zero() };
        match kind {
            ControllerKind::Bsfl => cl.bsfl = Some(gains.bsfl.as_ref().ok_or_else(missing)?),
            ControllerKind::Dfl => cl.dfl = Some(gains.dfl.as_ref().ok_or_else(missing)?),
            ControllerKind::Cpss => {
                let p = gains.cpss.as_ref().ok_or_else(missing)?;
                cl.vref = cpss_reference(p, model);
                cl.cpss = Some(p);
            }
            ControllerKind::OpenLoop => {}
        }
        Ok(cl)
    }

    pub fn initial_bundle(&self, x0: &Deviation<T>) -> Result<Bundle<T>, SimError> {
        let s = self.model.state_from_deviation(x0);
        let mut y = [T::zero(); 9];
        y[..3].copy_from_slice(&s.to_array());
        if let Some(p) = self.cpss {
            y[3..].copy_from_slice(&cpss_init(p, self.model)?.to_array());
        }
        Ok(y)
    }

    /// Field command at `y`, holding `held` if the singularity guard trips.
    pub fn command(&self, y: &Bundle<T>, mode: NetworkMode, held: T) -> FieldCommand<T> {
        let m = self.model;
        match self.kind {
            ControllerKind::Bsfl => {
                let x = m.deviation(&PlantState::from_slice(y));
                bsfl_control(&x, self.bsfl.expect("bsfl gains"), m, held)
            }
            ControllerKind::Dfl => {
                let x = m.deviation(&PlantState::from_slice(y));
                dfl_control(&x, self.dfl.expect("dfl gains"), m, held)
            }
            ControllerKind::Cpss => {
                let s = PlantState::from_slice(y);
                let vt = m.outputs(&s, mode).vt;
                let out = cpss_derivatives(&CpssState::from_slice(&y[3..]), self.cpss.expect("cpss"), self.vref, vt, y[1]);
                FieldCommand { efd: out.efd, saturated: out.saturated, guarded: false }
            }
            ControllerKind::OpenLoop => FieldCommand { efd: m.eq.efd0, saturated: false, guarded: false },
        }
    }

    /// Vector field and the command used to evaluate it.
    pub fn rates(&self, y: &Bundle<T>, mode: NetworkMode, pm: T, held: T) -> (Bundle<T>, FieldCommand<T>) {
        let m = self.model;
        let s = PlantState::from_slice(y);
        let mut f = [T::zero(); 9];
        let cmd = match (self.kind, self.cpss) {
            (ControllerKind::Cpss, Some(p)) => {
                let vt = m.outputs(&s, mode).vt;
                let out = cpss_derivatives(&CpssState::from_slice(&y[3..]), p, self.vref, vt, s.domega);
                f[3..].copy_from_slice(&out.rates.to_array());
                FieldCommand { efd: out.efd, saturated: out.saturated, guarded: false }
            }
            _ => self.command(y, mode, held),
        };
        f[..3].copy_from_slice(&m.derivatives(&s, cmd.efd, pm, mode));
        (f, cmd)
    }

    /// One RK4 step, accumulated into `y` through `acc`; returns whether any
    /// stage was guarded or saturated.
    pub fn step_rk4(
        &self,
        y: &mut Bundle<T>,
        acc: &mut Compensated<T, 9>,
        dt: T,
        mode: NetworkMode,
        pm: T,
        held: T,
    ) -> (bool, bool) {
        let flags = std::cell::Cell::new((false, false));
        let f = |v: &Bundle<T>| {
            let (r, c) = self.rates(v, mode, pm, held);
            let (g, s) = flags.get();
            flags.set((g || c.guarded, s || c.saturated));
            r
        };
        let inc = rk4_increment(y, dt, f);
        acc.add(y, &inc);
        if let Some(p) = self.cpss {
            let mut c = CpssState::from_slice(&y[3..]);
            c.project(p);
            for (i, v) in c.to_array().into_iter().enumerate() {
                if v != y[3 + i] {
                    y[3 + i] = v;
                    acc.reset(3 + i);
                }
            }
        }
        flags.get()
    }

    pub fn chain(&self, y: &Bundle<T>) -> Option<[T; 3]> {
        let x = self.model.deviation(&PlantState::from_slice(y));
        match self.kind {
            ControllerKind::Bsfl => Some(bsfl_transform(&x, self.bsfl?, self.model).to_array()),
            ControllerKind::Dfl => Some(dfl_transform(&x, self.model).to_array()),
            _ => None,
        }
    }
}

pub fn run_scenario<T: Scalar>(
    sc: &Scenario<T>,
    params: &MachineParams<T>,
    op: &OperatingPoint<T>,
    gains: &ControllerSet<T>,
) -> Result<SimOutcome<T>, SimError> {
    let model = Smib::new(*params, *op)?;
    simulate(&model, sc, gains)
}

/// Runs `sc` on an already initialized plant.
pub fn simulate<T: Scalar>(model: &Smib<T>, sc: &Scenario<T>, gains: &ControllerSet<T>) -> Result<SimOutcome<T>, SimError> {
    sc.validate(gains.cpss.as_ref())?;
    let cl = ClosedLoop::new(model, sc.controller, gains)?;
    let mut y = cl.initial_bundle(&sc.initial_deviation)?;
    let mut acc = Compensated::default();

    let n = sc.steps();
    let stride = sc.record_stride;
    let mut schedule: Vec<(usize, EventKind<T>)> =
        sc.events.iter().map(|e| (sc.grid_index(e.t).expect("validated"), e.kind)).collect();
    schedule.reverse();

    let mut series = TimeSeries {
        scenario_digest: sha256_hex(&format!("{sc:?}")),
        param_digest: sha256_hex(&format!("{:?}|{:?}|{:?}", model.params, model.op, gains)),
        ..TimeSeries::default()
    };
    let cap = n / stride + 1;
    for v in [&mut series.t, &mut series.delta, &mut series.domega, &mut series.eqp, &mut series.pe] {
        v.reserve(cap);
    }

    let mut mode = NetworkMode::Normal;
    let mut pm = model.eq.pm;
    let mut held = model.eq.efd0;
    let (mut guard_acc, mut sat_acc) = (false, false);
    let mut stable = true;
    let mut instability_time = None;

    for k in 0..=n {
        while let Some(&(idx, kind)) = schedule.last() {
            if idx != k {
                break;
            }
            match kind {
                EventKind::ApplyFault => mode = NetworkMode::BoltedFault,
                EventKind::ClearFault => mode = NetworkMode::Normal,
                EventKind::StepPm(f) => pm = model.eq.pm * f,
            }
            schedule.pop();
        }

        let t = T::of_usize(k) * sc.dt;
        let cmd = cl.command(&y, mode, held);
        held = cmd.efd;
        guard_acc |= cmd.guarded;
        sat_acc |= cmd.saturated;

        let finite = y.iter().all(|v| v.is_finite());
        if !finite || !sc.controller.in_stability_region(y[0]) {
            stable = false;
            instability_time = Some(t);
            break;
        }

        if k % stride == 0 {
            let s = PlantState::from_slice(&y);
            let out = model.outputs(&s, mode);
            series.t.push(t);
            series.delta.push(s.delta);
            series.domega.push(s.domega);
            series.eqp.push(s.eqp);
            series.pe.push(out.pe);
            series.vt.push(out.vt);
            series.efd.push(cmd.efd);
            series.uf.push(cmd.efd / model.params.ke);
            series.guard.push(guard_acc);
            series.sat.push(sat_acc);
            if let Some(c) = cl.chain(&y) {
                series.chain.push(c);
            }
            guard_acc = false;
            sat_acc = false;
        }

        if k == n {
            break;
        }
        let (g, s) = cl.step_rk4(&mut y, &mut acc, sc.dt, mode, pm, held);
        guard_acc |= g;
        sat_acc |= s;
    }

    Ok(SimOutcome { series, stable, instability_time })
}
