//! Command-line front end. Every subcommand writes CSV/JSON either to
//! `--out <dir>` (with a `manifest.json`) or to standard streams.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::check::{run_criterion, select, CheckOptions, CriterionResult};
use crate::classify::{classify_initial, classify_profile, origin_value, Classification, Classified, OriginBehavior};
use crate::closedform::{profile_energy, soliton_cylinder, EnergyWindow, SolitonParams};
use crate::cylinder::{relax_with, BoundaryCondition, CylinderField, InitSpec, RelaxOptions, RelaxReport};
use crate::error::{Error, Result};
use crate::geometry::{parse_f64, RadialProfile};
use crate::io::write_table;
use crate::orbit::{detect_period, first_integral, integrate, Event, PhasePoint};
use crate::period::{period_agm, period_integral};

/// Exit code for command-line usage errors.
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "ymac", version, about = "Radial solutions of −Δu = (2/|x|²)u(1 − u²): closed forms, orbits, periods, classification, cylinder relaxation")]
struct Cli {
    /// Directory for output files and manifest.json (default: standard streams).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress progress lines.
    #[arg(long, global = true)]
    quiet: bool,
    /// Seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample the soliton sign·(a² − r²)/(a² + r²) on a log-spaced grid (CSV r,u).
    Soliton(SolitonArgs),
    /// Cylinder energy 2π∫(v_t² + (v² − 1)²)dt of a profile or soliton (JSON).
    Energy(EnergyArgs),
    /// Integrate the radial ODE from (v0, vt0) (CSV t,v,v_t,c plus events JSON).
    Orbit(OrbitArgs),
    /// Period of the bounded orbit of amplitude M (CSV M,T_quad,T_agm[,T_ode],err).
    Period(PeriodArgs),
    /// Classify phase data or a sampled profile (JSON).
    Classify(ClassifyArgs),
    /// Relax a field on the truncated cylinder (CSV t,theta,v plus report JSON).
    Relax(RelaxArgs),
    /// Run the acceptance criteria.
    Check(CheckArgs),
}

#[derive(Debug, Args, Serialize)]
struct SolitonArgs {
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    a: f64,
    /// +1 or −1.
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    sign: i8,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    t_min: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    t_max: f64,
    #[arg(long, default_value_t = 2001)]
    n: usize,
}

#[derive(Debug, Args, Serialize)]
struct EnergyArgs {
    /// CSV profile with header r,u; without it the soliton from --a/--sign is sampled.
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    sign: i8,
    #[arg(long, default_value_t = 160_001)]
    n: usize,
    /// `whole` or `lo:hi` in t = ln r.
    #[arg(long, default_value = "-20:20", allow_hyphen_values = true)]
    window: String,
}

#[derive(Debug, Args, Serialize)]
struct OrbitArgs {
    #[arg(long, allow_hyphen_values = true)]
    v0: f64,
    #[arg(long, allow_hyphen_values = true)]
    vt0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    t_start: f64,
    #[arg(long, default_value_t = 100.0, allow_hyphen_values = true)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Debug, Args, Serialize)]
struct PeriodArgs {
    /// Single amplitude.
    #[arg(long, conflicts_with = "m_grid", allow_hyphen_values = true)]
    m: Option<f64>,
    /// Amplitudes `lo:hi:step`, endpoints included.
    #[arg(long)]
    m_grid: Option<String>,
    /// Also measure the period on an integrated orbit.
    #[arg(long)]
    ode: bool,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Debug, Args, Serialize)]
struct ClassifyArgs {
    #[arg(long, allow_hyphen_values = true, requires = "vt0", conflicts_with = "profile")]
    v0: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "v0")]
    vt0: Option<f64>,
    /// CSV profile with header r,u.
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct RelaxArgs {
    #[arg(long, default_value_t = -8.0, allow_hyphen_values = true)]
    t_min: f64,
    #[arg(long, default_value_t = 8.0, allow_hyphen_values = true)]
    t_max: f64,
    #[arg(long, default_value_t = 256)]
    n_t: usize,
    #[arg(long, default_value_t = 64)]
    n_theta: usize,
    /// `zero | soliton:a[:sign] | perturbed-soliton:a:amp | random:amp[:seed]`.
    #[arg(long, default_value = "perturbed-soliton:1:0.1")]
    init: String,
    /// `dirichlet:<value>` or `neumann`; default matches the initial data.
    #[arg(long, allow_hyphen_values = true)]
    bc_left: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    bc_right: Option<String>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 2_000_000)]
    max_steps: usize,
    #[arg(long, default_value_t = 0.2)]
    dt_factor: f64,
}

#[derive(Debug, Args, Serialize)]
struct CheckArgs {
    /// Run every criterion (the default).
    #[arg(long, conflicts_with = "only")]
    all: bool,
    /// A group (period, orbit, energy, classify, cylinder), a criterion name or number.
    #[arg(long)]
    only: Option<String>,
    /// Tolerance for the orbit integrations of the period and drift criteria.
    #[arg(long, default_value_t = 1e-10)]
    integrator_tol: f64,
}

/// Record of one run, written as `manifest.json` next to the outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub output_paths: Vec<String>,
}

fn parameters<T: Serialize>(args: &T) -> BTreeMap<String, String> {
    let Ok(serde_json::Value::Object(map)) = serde_json::to_value(args) else {
        return BTreeMap::new();
    };
    map.into_iter()
        .filter(|(_, v)| !v.is_null())
        .map(|(k, v)| (k, v.as_str().map_or_else(|| v.to_string(), str::to_owned)))
        .collect()
}

/// Where outputs go: files in a directory, or stdout (tables, results) and
/// stderr (auxiliary JSON).
struct Sink<'a> {
    dir: Option<PathBuf>,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
    written: Vec<String>,
    quiet: bool,
}

impl Sink<'_> {
    fn emit(&mut self, name: &str, primary: bool, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        match &self.dir {
            Some(dir) => {
                let path = dir.join(name);
                let mut w = BufWriter::new(File::create(&path)?);
                body(&mut w)?;
                w.flush()?;
                self.written.push(path.display().to_string());
            }
            None if primary => body(self.stdout)?,
            None => body(self.stderr)?,
        }
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, primary: bool, value: &T) -> Result<()> {
        self.emit(name, primary, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    fn progress(&mut self, msg: &str) {
        if !self.quiet {
            let _ = writeln!(self.stderr, "{msg}");
        }
    }
}

/// Parses `argv` and runs the subcommand; returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{rendered}") } else { write!(stderr, "{rendered}") };
            return code;
        }
    };
    let mut sink = Sink { dir: cli.out.clone(), stdout, stderr, written: Vec::new(), quiet: cli.quiet };
    match dispatch(&cli, &mut sink) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(sink.stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, sink: &mut Sink) -> Result<i32> {
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
    }
    let (name, params, code) = match &cli.command {
        Command::Soliton(a) => ("soliton", parameters(a), cmd_soliton(a, sink)?),
        Command::Energy(a) => ("energy", parameters(a), cmd_energy(a, sink)?),
        Command::Orbit(a) => ("orbit", parameters(a), cmd_orbit(a, sink)?),
        Command::Period(a) => ("period", parameters(a), cmd_period(a, sink)?),
        Command::Classify(a) => ("classify", parameters(a), cmd_classify(a, sink)?),
        Command::Relax(a) => ("relax", parameters(a), cmd_relax(a, cli.seed, sink)?),
        Command::Check(a) => ("check", parameters(a), cmd_check(a, cli.seed, sink)?),
    };
    if let Some(dir) = &cli.out {
        let manifest = RunManifest {
            subcommand: name.into(),
            parameters: params,
            seed: Some(cli.seed),
            output_paths: sink.written.clone(),
        };
        write_manifest(dir, &manifest)?;
    }
    Ok(code)
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let mut w = BufWriter::new(File::create(dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut w, manifest)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn cmd_soliton(a: &SolitonArgs, sink: &mut Sink) -> Result<i32> {
    let p = SolitonParams::new(a.a, a.sign)?;
    let prof = RadialProfile::sample_cylinder(a.t_min, a.t_max, a.n, |t| soliton_cylinder(p, t))?
        .with_origin_value(Some(f64::from(p.sign())));
    sink.emit("soliton.csv", true, |w| prof.to_csv(w))?;
    Ok(0)
}

fn read_profile(path: &Path) -> Result<RadialProfile> {
    RadialProfile::from_csv(File::open(path)?)
}

fn parse_window(s: &str) -> Result<EnergyWindow> {
    if s == "whole" {
        return Ok(EnergyWindow::WholeLine);
    }
    let (lo, hi) = s.split_once(':').ok_or_else(|| Error::Parse(format!("window `{s}`: expected `whole` or `lo:hi`")))?;
    Ok(EnergyWindow::Range(parse_f64(lo)?, parse_f64(hi)?))
}

#[derive(Serialize)]
struct EnergyOutput {
    /// `null` when the tails do not decay.
    value: Option<f64>,
    finite: bool,
    window: EnergyWindow,
    windowed_value: f64,
    span: (f64, f64),
}

fn cmd_energy(a: &EnergyArgs, sink: &mut Sink) -> Result<i32> {
    let window = parse_window(&a.window)?;
    let prof = match &a.profile {
        Some(path) => read_profile(path)?,
        None => {
            let p = SolitonParams::new(a.a, a.sign)?;
            let (lo, hi) = match window {
                EnergyWindow::Range(lo, hi) => (lo, hi),
                EnergyWindow::WholeLine => (-20.0, 20.0),
            };
            RadialProfile::sample_cylinder(lo, hi, a.n, |t| soliton_cylinder(p, t))?
        }
    };
    let e = profile_energy(&prof, window)?;
    let out = EnergyOutput {
        value: e.is_finite().then_some(e.value),
        finite: e.is_finite(),
        window: e.window,
        windowed_value: e.windowed,
        span: e.span,
    };
    sink.json("energy.json", true, &out)?;
    Ok(0)
}

#[derive(Serialize)]
struct OrbitSummary<'a> {
    start: PhasePoint,
    t_range: (f64, f64),
    c0: f64,
    max_drift: f64,
    drift_within_tolerance: bool,
    escaped: bool,
    period: Option<f64>,
    events: &'a [Event],
}

fn cmd_orbit(a: &OrbitArgs, sink: &mut Sink) -> Result<i32> {
    let start = PhasePoint::new(a.v0, a.vt0);
    let (orbit, code) = match integrate(start, (a.t_start, a.t_end), a.tol) {
        Ok(o) => (o, 0),
        Err(Error::IntegrationFailure { t, reason, partial }) => {
            sink.progress(&format!("integration failed at t = {t}: {reason}; writing partial orbit"));
            (*partial, 2)
        }
        Err(e) => return Err(e),
    };
    let rows = orbit
        .t_samples()
        .iter()
        .zip(orbit.states())
        .zip(orbit.c_series())
        .map(|((t, p), c)| vec![*t, p.v, p.v_t, *c]);
    sink.emit("orbit.csv", true, |w| write_table(w, &["t", "v", "v_t", "c"], rows))?;
    let summary = OrbitSummary {
        start,
        t_range: orbit.t_range(),
        c0: first_integral(start),
        max_drift: orbit.max_drift(),
        drift_within_tolerance: orbit.drift_within_tolerance(),
        escaped: orbit.escaped(),
        period: detect_period(&orbit).ok().flatten(),
        events: orbit.events(),
    };
    sink.json("orbit_events.json", false, &summary)?;
    Ok(code)
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err(Error::Parse(format!("grid `{s}`: expected `lo:hi:step`")));
    };
    let (lo, hi, step) = (parse_f64(lo)?, parse_f64(hi)?, parse_f64(step)?);
    if !(step > 0.0) || hi < lo {
        return Err(Error::domain(format!("grid `{s}` is empty")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| lo + i as f64 * step).collect())
}

fn cmd_period(a: &PeriodArgs, sink: &mut Sink) -> Result<i32> {
    let ms = match (&a.m, &a.m_grid) {
        (Some(m), _) => vec![*m],
        (None, Some(g)) => parse_grid(g)?,
        (None, None) => return Err(Error::Parse("give --m or --m-grid".into())),
    };
    let mut rows = Vec::new();
    for m in ms {
        let q = period_integral(m)?.period;
        let agm = period_agm(m)?.period;
        let mut row = vec![m, q, agm];
        if a.ode {
            let o = integrate(PhasePoint::new(m, 0.0), (0.0, 10.0 * q), a.tol)?;
            row.push(detect_period(&o)?.unwrap_or(f64::NAN));
        }
        row.push((q - agm).abs());
        rows.push(row);
    }
    let header: &[&str] = if a.ode { &["M", "T_quad", "T_agm", "T_ode", "err"] } else { &["M", "T_quad", "T_agm", "err"] };
    sink.emit("period.csv", true, |w| write_table(w, header, rows))?;
    Ok(0)
}

#[derive(Serialize)]
struct ClassifyOutput {
    class: &'static str,
    c: f64,
    snapped: bool,
    #[serde(rename = "M")]
    m: Option<f64>,
    #[serde(rename = "T")]
    t: Option<f64>,
    phase: Option<f64>,
    a: Option<f64>,
    sign: Option<i8>,
    reason: Option<crate::classify::UnboundedReason>,
    origin: OriginBehavior,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_sample: Option<f64>,
}

impl ClassifyOutput {
    fn new(r: &Classified) -> Self {
        let mut out = ClassifyOutput {
            class: r.class.name(),
            c: r.c,
            snapped: r.snapped,
            m: None,
            t: None,
            phase: None,
            a: None,
            sign: None,
            reason: None,
            origin: origin_value(&r.class),
            t_sample: None,
        };
        match r.class {
            Classification::TrivialZero => {}
            Classification::Equilibrium { sign } => out.sign = Some(sign),
            Classification::Soliton(p) => {
                out.a = Some(p.a());
                out.sign = Some(p.sign());
            }
            Classification::Periodic { amplitude, period, phase } => {
                out.m = Some(amplitude);
                out.t = Some(period);
                out.phase = Some(phase);
            }
            Classification::UnboundedBranch { reason, .. } => out.reason = Some(reason),
        }
        out
    }
}

fn cmd_classify(a: &ClassifyArgs, sink: &mut Sink) -> Result<i32> {
    let out = match (&a.profile, a.v0, a.vt0) {
        (Some(path), _, _) => {
            let r = classify_profile(&read_profile(path)?)?;
            ClassifyOutput { t_sample: Some(r.t_sample), ..ClassifyOutput::new(&r.classified) }
        }
        (None, Some(v), Some(vt)) => ClassifyOutput::new(&classify_initial(PhasePoint::new(v, vt))?),
        _ => return Err(Error::Parse("give --v0 and --vt0, or --profile".into())),
    };
    sink.json("classify.json", true, &out)?;
    Ok(0)
}

#[derive(Serialize)]
struct RelaxOutput {
    #[serde(flatten)]
    report: RelaxReport,
    tol: f64,
    bc_left: BoundaryCondition,
    bc_right: BoundaryCondition,
}

fn cmd_relax(a: &RelaxArgs, seed: u64, sink: &mut Sink) -> Result<i32> {
    let init: InitSpec = a.init.parse()?;
    let default = init.default_bcs(a.t_min, a.t_max)?;
    let bc_left = a.bc_left.as_deref().map(str::parse).transpose()?.unwrap_or(default.0);
    let bc_right = a.bc_right.as_deref().map(str::parse).transpose()?.unwrap_or(default.1);
    let field = CylinderField::initialise((a.t_min, a.t_max), a.n_t, a.n_theta, init, Some((bc_left, bc_right)), seed)?;
    sink.progress(&format!("relaxing {}×{} field from {}", a.n_t, a.n_theta, a.init));
    let (field, report) = relax_with(field, a.tol, a.max_steps, RelaxOptions { dt_factor: a.dt_factor })?;
    sink.progress(&format!(
        "{} steps, residual {:.3e}, converged: {}",
        report.steps, report.final_residual, report.converged
    ));
    sink.emit("relax_field.csv", true, |w| field.to_csv(w))?;
    sink.json("relax_report.json", false, &RelaxOutput { report, tol: a.tol, bc_left, bc_right })?;
    Ok(if report.converged { 0 } else { 2 })
}

#[derive(Serialize)]
struct CheckOutput<'a> {
    options: CheckOptions,
    passed: usize,
    failed: usize,
    results: &'a [CriterionResult],
}

fn cmd_check(a: &CheckArgs, seed: u64, sink: &mut Sink) -> Result<i32> {
    if !(a.integrator_tol > 0.0) {
        return Err(Error::domain("integrator tolerance must be positive"));
    }
    let ids = select(a.only.as_deref());
    if ids.is_empty() {
        return Err(Error::Parse(format!("no criterion matches `{}`", a.only.as_deref().unwrap_or(""))));
    }
    let opts = CheckOptions { integrator_tol: a.integrator_tol, seed, ..CheckOptions::from_env() };
    let mut results = Vec::new();
    for id in ids {
        sink.progress(&format!("running criterion {id}"));
        let r = run_criterion(id, &opts).expect("selected criterion exists");
        writeln!(sink.stdout, "{}", r.line())?;
        results.push(r);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    writeln!(sink.stdout, "{} passed, {failed} failed", results.len() - failed)?;
    if sink.dir.is_some() {
        let out = CheckOutput { options: opts, passed: results.len() - failed, failed, results: &results };
        sink.json("check.json", true, &out)?;
    }
    Ok(if failed == 0 { 0 } else { 2 })
}
