//! Command-line front end: loads a JSON configuration, runs simulations and
//! analyses from `smib_core`, and writes CSV time series and JSON summaries.
//!
//! Exit codes: 0 success, 2 bad arguments or configuration, 3 no valid
//! equilibrium, 4 a simulated run lost synchronism, 5 I/O failure, 6 invalid
//! CCT bracket.

// `!(x > 0)` is deliberate throughout: NaN has to fail these checks.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod report;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use smib_core::analysis::{cct_search, robustness_margin, CctError, CctSearch, LyapunovError};
use smib_core::linalg::{diag, identity};
use smib_core::sim::{simulate, ControllerKind};
use smib_core::*;
use thiserror::Error;

use config::{Config, ControllerName};
use report::{CctReport, EquilibriumReport, LyapunovJson, ProbeJson, RunReport, Summary, Verdict};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("equilibrium failed: {0}")]
    Equilibrium(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("invalid bracket: {0}")]
    Bracket(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Equilibrium(_) => 3,
            CliError::Io(_) => 5,
            CliError::Bracket(_) => 6,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidScenario { .. } | SimError::MissingGains(_) => CliError::Config(e.to_string()),
            SimError::Model(m) => model_error(m),
            SimError::Controller(c) => CliError::Equilibrium(c.to_string()),
        }
    }
}

fn model_error(e: ModelError) -> CliError {
    match e {
        ModelError::InvalidParameter { .. } => CliError::Config(e.to_string()),
        _ => CliError::Equilibrium(e.to_string()),
    }
}

pub const EXIT_UNSTABLE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "smib", version, about = "Excitation control of a single-machine infinite-bus system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    /// The `scenario` block.
    Fault,
    /// The `load_step_scenario` block.
    LoadStep,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the steady state and model coefficients.
    Equilibrium { config: PathBuf },
    /// Run one scenario and write its time series and summary.
    Simulate {
        config: PathBuf,
        /// Defaults to `scenario.controller`.
        #[arg(long, value_enum)]
        controller: Option<ControllerName>,
        #[arg(long, value_enum, default_value = "fault")]
        scenario: Which,
        /// CSV path, overriding `output.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Summary path, overriding `output.summary`.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Fault and load-step scenarios under all three controllers.
    Compare {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Critical fault duration by bisection.
    Cct {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "bsfl")]
        controller: ControllerName,
        /// Fault-duration bracket (s).
        #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        hi: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Simulated time per probe (s).
        #[arg(long, default_value_t = 5.0)]
        horizon: f64,
        /// Repeat for each active power p0 in this list.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lyapunov margins of the backstepping error chain.
    Robustness {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        lambda: Vec<f64>,
        /// `identity` or `diag:a,b,c`.
        #[arg(long, default_value = "identity")]
        q: String,
        #[arg(long, default_value_t = 0.0)]
        gamma2: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32, CliError> {
    match cmd {
        Command::Equilibrium { config } => cmd_equilibrium(&config),
        Command::Simulate { config, controller, scenario, out, summary } => {
            cmd_simulate(&config, controller, scenario, out, summary)
        }
        Command::Compare { config, out } => cmd_compare(&config, out),
        Command::Cct { config, controller, lo, hi, tol, horizon, sweep, out } => {
            cmd_cct(&config, controller.into(), lo, hi, tol, horizon, sweep, out)
        }
        Command::Robustness { lambda, q, gamma2, out } => cmd_robustness(&lambda, &q, gamma2, out),
    }
}

pub fn build_model(cfg: &Config) -> Result<Smib64, CliError> {
    Smib::new(cfg.machine_params(), cfg.operating_point()).map_err(model_error)
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    f(&mut w).map_err(io)?;
    w.flush().map_err(io)
}

fn write_summary(path: Option<PathBuf>, s: &Summary) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(&p, |w| w.write_all(s.to_json().as_bytes())),
        None => Ok(()),
    }
}

fn or_config(flag: Option<PathBuf>, configured: &Option<String>) -> Option<PathBuf> {
    flag.or_else(|| configured.as_ref().map(PathBuf::from))
}

pub fn cmd_equilibrium(path: &Path) -> Result<i32, CliError> {
    let cfg = Config::load(path)?;
    let m = build_model(&cfg)?;
    let r = EquilibriumReport::of(&m);
    let mut s = String::new();
    let _ = writeln!(s, "operating point  p0 = {} pu, q0 = {} pu, vt0 = {} pu", r.p0, r.q0, r.vt0);
    let _ = writeln!(s, "delta0           {:.9} rad  ({:.6} deg)", r.delta0_rad, r.delta0_deg);
    let _ = writeln!(s, "E'q0             {:.9} pu", r.eqp0);
    let _ = writeln!(s, "uf0              {:.9} pu", r.uf0);
    let _ = writeln!(s, "Efd0             {:.9} pu", r.efd0);
    let _ = writeln!(s, "VB               {:.9} pu", r.vb);
    let _ = writeln!(s, "Pm               {:.9} pu", r.pm);
    for (i, a) in r.alpha.iter().enumerate() {
        let _ = writeln!(s, "alpha{}           {:.9}", i + 1, a);
    }
    let _ = writeln!(s, "a                {:.9}", r.a);
    print!("{s}");
    Ok(0)
}

fn scenario_of(cfg: &Config, which: Which, kind: ControllerKind) -> Result<(Scenario64, &'static str), CliError> {
    Ok(match which {
        Which::Fault => (cfg.fault_scenario(kind)?, "fault"),
        Which::LoadStep => (cfg.load_step(kind)?, "load_step"),
    })
}

pub fn cmd_simulate(
    path: &Path,
    controller: Option<ControllerName>,
    which: Which,
    out: Option<PathBuf>,
    summary: Option<PathBuf>,
) -> Result<i32, CliError> {
    let cfg = Config::load(path)?;
    let kind: ControllerKind = controller.unwrap_or(cfg.scenario.controller).into();
    cfg.require(kind)?;
    let model = build_model(&cfg)?;
    let gains = cfg.gains()?;
    let (sc, label) = scenario_of(&cfg, which, kind)?;
    let outcome = simulate(&model, &sc, &gains)?;

    if let Some(p) = or_config(out, &cfg.output.csv) {
        write_file(&p, |w| outcome.series.write_csv(w))?;
    }
    let run = RunReport::of(&model, &sc, &outcome, label);
    println!(
        "{} / {}: {} ({} samples)",
        kind.name(),
        label,
        if outcome.stable { "stable" } else { "lost synchronism" },
        run.samples
    );
    if let Some(t) = outcome.instability_time {
        println!("  delta left its region at t = {t:.4} s");
    }
    print_signal("delta", &run.delta, true);
    print_signal("Pe", &run.pe, false);

    let mut s = Summary::new("simulate", Some(cfg.digest()));
    s.equilibrium = Some(EquilibriumReport::of(&model));
    s.verdicts.push(Verdict::new("stable", outcome.stable, format!("{} on {label}", kind.name())));
    s.runs.push(run);
    write_summary(or_config(summary, &cfg.output.summary), &s)?;
    Ok(if outcome.stable { 0 } else { EXIT_UNSTABLE })
}

fn print_signal(name: &str, r: &report::SignalReport, degrees: bool) {
    match (&r.metrics, &r.error) {
        (Some(m), _) => {
            let peak = if degrees { format!("{:.3} deg", m.first_swing_peak.to_degrees()) } else { format!("{:.4}", m.first_swing_peak) };
            println!(
                "  {name}: settles in {:.3} s, first swing {peak} at {:.3} s, overshoot {:.2} %, backswing {}",
                m.settling_time_2pct, m.first_swing_time, m.overshoot_pct, m.backswing_detected
            );
        }
        (None, Some(e)) => println!("  {name}: {e}"),
        (None, None) => {}
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"))
}

pub fn cmd_compare(path: &Path, out: Option<PathBuf>) -> Result<i32, CliError> {
    let cfg = Config::load(path)?;
    let kinds = [ControllerKind::Bsfl, ControllerKind::Dfl, ControllerKind::Cpss];
    for k in kinds {
        cfg.require(k)?;
    }
    let model = build_model(&cfg)?;
    let gains = cfg.gains()?;
    let mut jobs = Vec::new();
    for which in [Which::Fault, Which::LoadStep] {
        for k in kinds {
            jobs.push(scenario_of(&cfg, which, k)?);
        }
    }
    let results: Vec<Result<SimOutcome64, SimError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs.iter().map(|(sc, _)| scope.spawn(|| simulate(&model, sc, &gains))).collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    });
    let mut runs = Vec::new();
    for ((sc, label), r) in jobs.iter().zip(results) {
        runs.push(RunReport::of(&model, sc, &r?, label));
    }

    println!(
        "{:<6} {:<10} {:<7} {:>10} {:>10} {:>14} {:>10} {:>10} {:>8}",
        "ctrl", "scenario", "stable", "ts_delta", "ts_pe", "swing_deg", "pe_max", "pe_os_%", "vt_min"
    );
    for r in &runs {
        let swing = r.delta.metrics.map(|m| m.first_swing_peak.to_degrees());
        println!(
            "{:<6} {:<10} {:<7} {:>10} {:>10} {:>14} {:>10.4} {:>10} {:>8.4}",
            r.controller,
            r.scenario,
            r.stable,
            fmt_opt(r.delta.settling()),
            fmt_opt(r.pe.settling()),
            fmt_opt(swing),
            r.pe.max,
            fmt_opt(r.pe.metrics.map(|m| m.overshoot_pct)),
            r.vt.min,
        );
    }

    let verdicts = compare_verdicts(&runs);
    println!();
    for v in &verdicts {
        println!("[{}] {}: {}", if v.passed { "yes" } else { "no " }, v.name, v.detail);
    }

    let any_unstable = runs.iter().any(|r| !r.stable);
    let mut s = Summary::new("compare", Some(cfg.digest()));
    s.equilibrium = Some(EquilibriumReport::of(&model));
    s.runs = runs;
    s.verdicts = verdicts;
    write_summary(or_config(out, &cfg.output.summary), &s)?;
    Ok(if any_unstable { EXIT_UNSTABLE } else { 0 })
}

fn find<'a>(runs: &'a [RunReport], ctrl: &str, scenario: &str) -> Option<&'a RunReport> {
    runs.iter().find(|r| r.controller == ctrl && r.scenario == scenario)
}

/// Ordering and shape checks across the six runs of `compare`.
pub fn compare_verdicts(runs: &[RunReport]) -> Vec<Verdict> {
    let mut v = Vec::new();
    let ts = |c: &str, f: fn(&RunReport) -> Option<f64>| find(runs, c, "fault").and_then(f);
    for (signal, f) in [
        ("delta", (|r: &RunReport| r.delta.settling()) as fn(&RunReport) -> Option<f64>),
        ("pe", |r: &RunReport| r.pe.settling()),
    ] {
        let (b, d, c) = (ts("bsfl", f), ts("dfl", f), ts("cpss", f));
        let ok = matches!((b, d, c), (Some(b), Some(d), Some(c)) if b < d && d < c);
        v.push(Verdict::new(
            format!("fault_settling_order_{signal}"),
            ok,
            format!("bsfl {} s < dfl {} s < cpss {} s", fmt_opt(b), fmt_opt(d), fmt_opt(c)),
        ));
    }
    if let Some(r) = find(runs, "bsfl", "fault") {
        let back = r.delta.metrics.map(|m| m.backswing_detected);
        v.push(Verdict::new("fault_bsfl_no_backswing", back == Some(false), format!("backswing detected: {back:?}")));
    }
    if let Some(r) = find(runs, "bsfl", "load_step") {
        let os = r.pe.metrics.map(|m| m.overshoot_pct);
        v.push(Verdict::new(
            "load_step_bsfl_overshoot_2pct",
            os.is_some_and(|o| o <= 2.0),
            format!("Pe overshoot {} %, settling {} s", fmt_opt(os), fmt_opt(r.pe.settling())),
        ));
    }
    let swings: Vec<String> = ["dfl", "cpss"]
        .iter()
        .filter_map(|c| find(runs, c, "load_step"))
        .map(|r| format!("{} Pe max {:.4} pu", r.controller, r.pe.max))
        .collect();
    let big = ["dfl", "cpss"].iter().filter_map(|c| find(runs, c, "load_step")).any(|r| r.pe.max >= 1.1);
    v.push(Verdict::new("load_step_baseline_pe_swing_1p1", big, swings.join(", ")));
    v
}

fn cct_error(e: CctError) -> CliError {
    match e {
        CctError::Sim(s) => s.into(),
        other => CliError::Bracket(other.to_string()),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_cct(
    path: &Path,
    kind: ControllerKind,
    lo: f64,
    hi: f64,
    tol: f64,
    horizon: f64,
    sweep: Option<Vec<f64>>,
    out: Option<PathBuf>,
) -> Result<i32, CliError> {
    if !(lo < hi) {
        return Err(CliError::Usage(format!("--lo {lo} must be below --hi {hi}")));
    }
    if !(tol > 0.0) || !(horizon > 0.0) {
        return Err(CliError::Usage("--tol and --horizon must be positive".into()));
    }
    let cfg = Config::load(path)?;
    cfg.require(kind)?;
    let gains = cfg.gains()?;
    let events = &cfg.scenario.events;
    let start = events
        .iter()
        .find(|e| e.kind == config::EventName::ApplyFault)
        .map(|e| e.t)
        .ok_or_else(|| CliError::Config("scenario.events: no apply_fault event to take the fault start from".into()))?;

    let mut search = CctSearch::new(kind, start, lo, hi);
    search.tol = tol;
    search.horizon = horizon;
    search.dt = cfg.scenario.dt;

    let p0s = sweep.clone().unwrap_or_else(|| vec![cfg.operating_point.p0]);
    let mut models = Vec::with_capacity(p0s.len());
    for &p0 in &p0s {
        let mut c = cfg.clone();
        c.operating_point.p0 = p0;
        models.push(build_model(&c)?);
    }
    let fault = cfg.fault_scenario(kind)?;

    let results: Vec<Result<CctReport, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = models
            .iter()
            .map(|m| {
                let (gains, search, fault) = (&gains, &search, &fault);
                let check = sweep.is_some();
                scope.spawn(move || cct_one(m, gains, search, fault, check))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("cct thread panicked")).collect()
    });

    let mut s = Summary::new("cct", Some(cfg.digest()));
    let mut code = 0;
    for r in results {
        let r = r?;
        println!(
            "{} at p0 = {} pu: critical fault duration {:.4} s, clearing at t = {:.4} s (fault on at {} s, tol {} s)",
            r.controller, r.p0, r.duration, r.clearing_time, r.fault_start, r.tol
        );
        for p in &r.trace {
            println!("  probe {:.4} s -> {}", p.duration, if p.stable { "stable" } else { "unstable" });
        }
        if let Some(ok) = r.configured_fault_stable {
            println!(
                "  configured fault: {}, delta settles in {} s after clearing",
                if ok { "stable" } else { "unstable" },
                fmt_opt(r.configured_fault_settling)
            );
            s.verdicts.push(Verdict::new(format!("configured_fault_stable_p0_{}", r.p0), ok, r.controller));
            if !ok {
                code = EXIT_UNSTABLE;
            }
        }
        s.cct.push(r);
    }
    write_summary(out, &s)?;
    Ok(code)
}

fn cct_one(
    m: &Smib64,
    gains: &ControllerSet64,
    search: &CctSearch<f64>,
    fault: &Scenario64,
    check_fault: bool,
) -> Result<CctReport, CliError> {
    let r = cct_search(m, gains, search).map_err(cct_error)?;
    let (mut stable, mut settling) = (None, None);
    if check_fault {
        let out = simulate(m, fault, gains)?;
        let run = RunReport::of(m, fault, &out, "fault");
        stable = Some(out.stable);
        settling = run.delta.settling();
    }
    Ok(CctReport {
        controller: search.controller.name(),
        p0: m.op.p0,
        fault_start: r.fault_start,
        tol: search.tol,
        duration: r.duration,
        clearing_time: r.clearing_time,
        configured_fault_stable: stable,
        configured_fault_settling: settling,
        trace: r.trace.iter().map(|p| ProbeJson { duration: p.duration, stable: p.stable }).collect(),
    })
}

fn parse_q(spec: &str) -> Result<[[f64; 3]; 3], CliError> {
    if spec == "identity" {
        return Ok(identity());
    }
    let bad = || CliError::Usage(format!("--q {spec:?}: expected `identity` or `diag:a,b,c`"));
    let rest = spec.strip_prefix("diag:").ok_or_else(bad)?;
    let v: Vec<f64> = rest.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let d: [f64; 3] = v.try_into().map_err(|_| bad())?;
    Ok(diag(d))
}

pub fn cmd_robustness(lambda: &[f64], q: &str, gamma2: f64, out: Option<PathBuf>) -> Result<i32, CliError> {
    let l: [f64; 3] = lambda
        .try_into()
        .map_err(|_| CliError::Usage(format!("--lambda needs exactly three values, got {}", lambda.len())))?;
    if !(gamma2 >= 0.0 && gamma2.is_finite()) {
        return Err(CliError::Usage("--gamma2 must be finite and non-negative".into()));
    }
    let qm = parse_q(q)?;
    let r = robustness_margin(l, &qm).map_err(|e| match e {
        LyapunovError::BadLambda { .. } | LyapunovError::QNotSpd => CliError::Usage(e.to_string()),
        other => CliError::Equilibrium(other.to_string()),
    })?;
    println!("lambda = ({}, {}, {}), Q = {q}", l[0], l[1], l[2]);
    println!("P =");
    for row in &r.p {
        println!("  [{:>14.9} {:>14.9} {:>14.9}]", row[0], row[1], row[2]);
    }
    println!("||PB||           {:.9}", r.pb_norm);
    println!("lambda_min(Q)    {:.9}", r.lambda_min_q);
    println!("gamma1_max       {:.9}", r.gamma1_max);
    println!("bound / gamma2   {:.9}", r.ultimate_bound_coeff);
    println!("ultimate bound   {:.9}  (gamma2 = {gamma2})", r.ultimate_bound(gamma2));
    println!("residual         {:.3e}", r.residual);
    let mut s = Summary::new("robustness", None);
    s.lyapunov = Some(LyapunovJson::of(l, &r, gamma2));
    write_summary(out, &s)?;
    Ok(0)
}
