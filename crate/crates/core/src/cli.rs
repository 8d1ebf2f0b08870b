//! Command-line front end: parses flags or a JSON config, runs one command
//! and writes CSV or JSON.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::conserved::{conserved_analytic, conserved_report, integral_set, log_log_slope, speed_for_momentum, DEFAULT_TOL};
use crate::params::{classify, scaling_exponents, ModelParams};
use crate::profile::{build_profile, first_integral_residual, hyperelliptic_params, weak_solution_check, z_curve};
use crate::profile::{CompactonProfile, ProfileFamily, MIN_GRID};
use crate::stability::{dpdc_criterion, phi2_rho_half, stability_report};
use crate::variational::{
    c_constants, compare_profiles, compare_trials, optimize_cos_power, optimize_post_gaussian, TrialFamily,
    TrialFunction,
};

pub const DEFAULT_GRID: usize = 256;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Computation(String),
    #[error("output: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidConfig(_) => 2,
            CliError::Computation(_) | CliError::Io(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::InvalidConfig(_) => "invalid_config",
            CliError::Computation(_) => "computation_error",
            CliError::Io(_) => "io_error",
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() })
    }
}

fn computation<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Computation(e.to_string())
}

fn invalid<E: std::fmt::Display>(e: E) -> CliError {
    CliError::InvalidConfig(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Profile,
    Conserved,
    Stability,
    Variational,
    Scaling,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    L,
    P,
    M,
    C,
}

/// Everything a run needs. Flags and the JSON config file share this shape;
/// flags override the file field by field.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[arg(skip)]
    pub command: Option<Command>,
    #[arg(long, allow_hyphen_values = true)]
    pub l: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,
    #[arg(long)]
    pub m: Option<u32>,
    /// Wave speed; excludes --momentum.
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    /// Momentum P; the speed is solved from P(c). Excludes --c.
    #[arg(long, allow_hyphen_values = true)]
    pub momentum: Option<f64>,
    /// Samples per half-support (at least 64).
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Profile family, or trial family for `variational`.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Relative quadrature tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// `profile` only: emit the normalized curve Z(y) instead of f(y).
    #[arg(long)]
    pub z_curve: bool,
    /// `sweep` only: parameter to vary.
    #[arg(long, value_enum)]
    pub axis: Option<Axis>,
    /// `sweep` only: comma-separated values for the axis.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Vec<f64>,
}

impl RunConfig {
    /// Fields of `self` where set, otherwise those of `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        RunConfig {
            command: self.command.or(base.command),
            l: self.l.or(base.l),
            p: self.p.or(base.p),
            m: self.m.or(base.m),
            c: self.c.or(base.c),
            momentum: self.momentum.or(base.momentum),
            grid_points: self.grid_points.or(base.grid_points),
            family: self.family.or(base.family),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            tol: self.tol.or(base.tol),
            z_curve: self.z_curve || base.z_curve,
            axis: self.axis.or(base.axis),
            values: if self.values.is_empty() { base.values } else { self.values },
        }
    }

    pub fn from_json_file(path: &Path) -> Result<RunConfig, CliError> {
        let text = fs::read_to_string(path).map_err(|e| invalid(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| invalid(format!("config {}: {e}", path.display())))
    }
}

#[derive(Debug, Parser)]
#[command(name = "compacton", version, about = "Compacton profiles, conserved quantities, stability and variational fits")]
struct Cli {
    /// Command to run; may come from --config instead.
    #[arg(value_enum)]
    command: Option<Command>,
    /// JSON file with the same fields as the flags, plus `command`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunConfig,
}

/// Speed source after validation.
#[derive(Debug, Clone, Copy, PartialEq)]
enum SpeedInput {
    Speed(f64),
    Momentum(f64),
    Default,
}

#[derive(Debug, Clone, PartialEq)]
struct Job {
    command: Command,
    l: f64,
    p: f64,
    m: u32,
    speed: SpeedInput,
    grid: usize,
    family: Option<String>,
    format: Format,
    tol: f64,
    z_curve: bool,
    axis: Option<Axis>,
    values: Vec<f64>,
}

fn validate(cfg: &RunConfig) -> Result<Job, CliError> {
    let command = cfg.command.ok_or_else(|| invalid("no command given"))?;
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| invalid(format!("missing --{name}")));
    let l = need(cfg.l, "l")?;
    let p = need(cfg.p, "p")?;
    let m = cfg.m.ok_or_else(|| invalid("missing --m"))?;
    let speed = match (cfg.c, cfg.momentum) {
        (Some(_), Some(_)) => return Err(invalid("--c and --momentum are mutually exclusive")),
        (Some(c), None) => SpeedInput::Speed(c),
        (None, Some(pm)) => {
            if !(pm > 0.0) {
                return Err(invalid(format!("momentum must be positive, got {pm}")));
            }
            SpeedInput::Momentum(pm)
        }
        (None, None) => SpeedInput::Default,
    };
    let grid = cfg.grid_points.unwrap_or(DEFAULT_GRID);
    if grid < MIN_GRID {
        return Err(invalid(format!("--grid-points must be at least {MIN_GRID}, got {grid}")));
    }
    let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol < 1.0) {
        return Err(invalid(format!("--tol must lie in (0, 1), got {tol}")));
    }
    if cfg.z_curve && command != Command::Profile {
        return Err(invalid("--z-curve applies to `profile` only"));
    }
    if command == Command::Sweep {
        if cfg.axis.is_none() {
            return Err(invalid("sweep needs --axis"));
        }
        if cfg.values.is_empty() {
            return Err(invalid("sweep needs a nonempty --values list"));
        }
    }
    let c0 = match speed {
        SpeedInput::Speed(c) => c,
        _ => 1.0,
    };
    ModelParams::new(l, p, m, c0).map_err(invalid)?;
    Ok(Job {
        command,
        l,
        p,
        m,
        speed,
        grid,
        family: cfg.family.clone(),
        format: cfg.format.unwrap_or_default(),
        tol,
        z_curve: cfg.z_curve,
        axis: cfg.axis,
        values: cfg.values.clone(),
    })
}

fn profile_family(job: &Job, params: &ModelParams<f64>) -> Result<ProfileFamily, CliError> {
    match &job.family {
        None => Ok(ProfileFamily::default_for(params)),
        Some(name) => {
            let family: ProfileFamily = name.parse().map_err(invalid)?;
            if !family.applies_to(params) {
                return Err(invalid(format!("family {family} does not apply to (l, p, m) = ({}, {}, {})", job.l, job.p, job.m)));
            }
            Ok(family)
        }
    }
}

/// Parameters with the speed resolved; `c` solved from `P(c)` when a
/// momentum was given.
fn resolve(l: f64, p: f64, m: u32, speed: SpeedInput) -> Result<ModelParams<f64>, CliError> {
    let base = ModelParams::new(l, p, m, 1.0).map_err(invalid)?;
    match speed {
        SpeedInput::Speed(c) => base.with_speed(c).map_err(invalid),
        SpeedInput::Default => Ok(base),
        SpeedInput::Momentum(pm) => {
            let c = speed_for_momentum(&base, pm).map_err(computation)?;
            base.with_speed(c).map_err(computation)
        }
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, x)| flatten(&key(k), x, rows)),
        Value::Array(xs) => xs.iter().enumerate().for_each(|(i, x)| flatten(&key(&i.to_string()), x, rows)),
        Value::Null => rows.push((prefix.to_string(), String::new())),
        Value::Bool(b) => rows.push((prefix.to_string(), b.to_string())),
        Value::String(s) => rows.push((prefix.to_string(), csv_field(s))),
        Value::Number(n) => {
            let text = match (n.as_u64(), n.as_i64(), n.as_f64()) {
                (Some(u), _, _) => u.to_string(),
                (_, Some(i), _) => i.to_string(),
                (_, _, Some(f)) => fmt_num(f),
                _ => n.to_string(),
            };
            rows.push((prefix.to_string(), text))
        }
    }
}

/// `quantity,value` rows for a nested report.
fn report_csv(v: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", v, &mut rows);
    let mut out = String::from("quantity,value\n");
    for (k, x) in rows {
        let _ = writeln!(out, "{k},{x}");
    }
    out
}

fn report(job: &Job, v: Value) -> Result<String, CliError> {
    match job.format {
        Format::Json => Ok(serde_json::to_string_pretty(&v).map_err(computation)? + "\n"),
        Format::Csv => Ok(report_csv(&v)),
    }
}

fn exact_profile(job: &Job) -> Result<CompactonProfile<f64>, CliError> {
    let params = resolve(job.l, job.p, job.m, job.speed)?;
    let family = profile_family(job, &params)?;
    build_profile(&params, family, job.grid).map_err(computation)
}

fn run_profile(job: &Job) -> Result<String, CliError> {
    let params = resolve(job.l, job.p, job.m, job.speed)?;
    if job.z_curve {
        let hp = hyperelliptic_params(&params).map_err(computation)?;
        let pts = z_curve(hp.tau, job.m, job.grid).map_err(computation)?;
        return match job.format {
            Format::Json => report(job, json!({ "tau": hp.tau, "m": job.m, "z_half": hp.z_half, "points": pts })),
            Format::Csv => {
                let mut out = format!("# tau={} m={} z_half={}\ny,Z\n", fmt_num(hp.tau), job.m, fmt_num(hp.z_half));
                for (y, z) in pts {
                    let _ = writeln!(out, "{},{}", fmt_num(y), fmt_num(z));
                }
                Ok(out)
            }
        };
    }
    let prof = exact_profile(job)?;
    match job.format {
        Format::Csv => {
            let mut buf = Vec::new();
            prof.write_csv(&mut buf)?;
            String::from_utf8(buf).map_err(computation)
        }
        Format::Json => report(
            job,
            json!({
                "summary": prof.summary(),
                "first_integral_residual": first_integral_residual(&prof),
                "weak_solution": weak_solution_check(&prof),
                "grid": prof.grid,
            }),
        ),
    }
}

fn trial_selection(job: &Job) -> Result<Vec<TrialFamily>, CliError> {
    match job.family.as_deref() {
        None => Ok(vec![TrialFamily::PostGaussian, TrialFamily::CosPower]),
        Some("post_gaussian") => Ok(vec![TrialFamily::PostGaussian]),
        Some("cos_power") => Ok(vec![TrialFamily::CosPower]),
        Some(other) => Err(invalid(format!("unknown trial family `{other}` (post_gaussian or cos_power)"))),
    }
}

fn run_variational(job: &Job) -> Result<String, CliError> {
    let base = ModelParams::new(job.l, job.p, job.m, 1.0).map_err(invalid)?;
    let momentum = match job.speed {
        SpeedInput::Momentum(pm) => pm,
        SpeedInput::Default => 1.0,
        SpeedInput::Speed(c) => {
            let q = base.with_speed(c).map_err(invalid)?;
            conserved_analytic(&q).map_err(computation)?.momentum
        }
    };
    let families = trial_selection(job)?;
    let trials: Vec<TrialFunction<f64>> = families
        .iter()
        .map(|&f| match f {
            TrialFamily::PostGaussian => optimize_post_gaussian(&base, momentum),
            TrialFamily::CosPower => optimize_cos_power(&base, momentum),
        })
        .collect::<Result<_, _>>()
        .map_err(computation)?;

    let exact = speed_for_momentum(&base, momentum)
        .map_err(computation)
        .and_then(|c| base.with_speed(c).map_err(computation))
        .and_then(|q| build_profile(&q, ProfileFamily::default_for(&q), job.grid).map_err(computation));

    match job.format {
        Format::Json => {
            let mut entries = Vec::new();
            for t in &trials {
                let consts = c_constants(job.l, job.p, job.m, t.shape, t.family).map_err(computation)?;
                let distance = match &exact {
                    Ok(prof) => Some(compare_profiles(prof, t).map_err(computation)?),
                    Err(_) => None,
                };
                entries.push(json!({
                    "family": t.family,
                    "A": t.amplitude,
                    "beta": t.beta,
                    "shape": t.shape,
                    "H": t.energy,
                    "P": t.momentum,
                    "iterations": t.iterations,
                    "speed": t.speed,
                    "coefficient": t.coefficient,
                    "exponent": t.exponent,
                    "constants": consts,
                    "distance_to_exact": distance,
                }));
            }
            let between = (trials.len() == 2).then(|| compare_trials(&trials[0], &trials[1], 4 * job.grid + 1));
            report(
                job,
                json!({
                    "l": job.l,
                    "p": job.p,
                    "m": job.m,
                    "momentum": momentum,
                    "exact_speed": exact.as_ref().ok().map(|p| p.params.c),
                    "exact_error": exact.as_ref().err().map(|e| e.to_string()),
                    "trials": entries,
                    "trial_distance": between,
                }),
            )
        }
        Format::Csv => {
            let exact = exact.ok();
            let reach = trials
                .iter()
                .map(|t| t.extent())
                .chain(exact.as_ref().map(|p| p.y_half))
                .fold(0.0, f64::max);
            let mut out = String::new();
            let _ = writeln!(out, "# l={} p={} m={} P={}", job.l, job.p, job.m, fmt_num(momentum));
            if let Some(prof) = &exact {
                let _ = writeln!(out, "# exact c={} A={} y_half={}", fmt_num(prof.params.c), fmt_num(prof.amplitude), fmt_num(prof.y_half));
            }
            for t in &trials {
                let _ = writeln!(
                    out,
                    "# {} A={} beta={} shape={} H={}",
                    t.family.name(),
                    fmt_num(t.amplitude),
                    fmt_num(t.beta),
                    fmt_num(t.shape),
                    fmt_num(t.energy)
                );
            }
            let mut header = vec!["y"];
            if exact.is_some() {
                header.push("exact");
            }
            header.extend(trials.iter().map(|t| t.family.name()));
            let _ = writeln!(out, "{}", header.join(","));
            let n = job.grid as i64;
            for i in -n..=n {
                let y = reach * i as f64 / n as f64;
                let mut row = vec![fmt_num(y)];
                if let Some(prof) = &exact {
                    row.push(fmt_num(prof.eval(y).map_err(computation)?.f));
                }
                row.extend(trials.iter().map(|t| fmt_num(t.eval(y))));
                let _ = writeln!(out, "{}", row.join(","));
            }
            Ok(out)
        }
    }
}

fn run_scaling(job: &Job) -> Result<String, CliError> {
    let params = resolve(job.l, job.p, job.m, job.speed)?;
    report(
        job,
        json!({
            "l": job.l,
            "p": job.p,
            "m": job.m,
            "exponents": scaling_exponents(&params),
            "regime": classify(&params),
        }),
    )
}

/// One sweep point. Classification is filled in whenever the parameters
/// are valid, even if the profile computation fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub l: f64,
    pub p: f64,
    pub m: Option<u32>,
    pub c: Option<f64>,
    pub window_ok: Option<bool>,
    pub marginal: Option<bool>,
    pub dpdc_exponent: Option<f64>,
    pub momentum: Option<f64>,
    pub energy: Option<f64>,
    pub energy_theorem: Option<f64>,
    pub phi2_numeric: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFit {
    pub momentum_vs_c: f64,
    pub momentum_vs_c_expected: f64,
    pub energy_vs_momentum: Option<f64>,
    pub energy_vs_momentum_expected: Option<f64>,
}

fn sweep_point(job: &Job, axis: Axis, value: f64) -> SweepRow {
    let (mut l, mut p, mut m, mut speed) = (job.l, job.p, Some(job.m), job.speed);
    match axis {
        Axis::L => l = value,
        Axis::P => p = value,
        Axis::M => m = (value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64).then_some(value as u32),
        Axis::C => speed = SpeedInput::Speed(value),
    }
    let mut row = SweepRow {
        value,
        l,
        p,
        m,
        c: None,
        window_ok: None,
        marginal: None,
        dpdc_exponent: None,
        momentum: None,
        energy: None,
        energy_theorem: None,
        phi2_numeric: None,
        error: None,
    };
    let Some(m) = m else {
        row.error = Some(format!("m = {value} is not a nonnegative integer"));
        return row;
    };
    let params = match resolve(l, p, m, speed) {
        Ok(q) => q,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let regime = classify(&params);
    row.c = Some(params.c);
    row.window_ok = Some(regime.stable_window);
    row.marginal = Some(regime.marginal);
    row.dpdc_exponent = Some(dpdc_criterion(&params).exponent);
    let computed = build_profile(&params, ProfileFamily::default_for(&params), job.grid)
        .map_err(|e| e.to_string())
        .and_then(|prof| conserved_report(&prof, job.tol).map(|r| (prof, r)).map_err(|e| e.to_string()))
        .and_then(|(prof, rep)| {
            let ints = integral_set(&prof, job.tol).map_err(|e| e.to_string())?;
            Ok((rep, phi2_rho_half(&params, ints.i2 / 2.0, &ints)))
        });
    match computed {
        Ok((rep, phi2)) => {
            row.momentum = Some(rep.momentum);
            row.energy = Some(rep.energy);
            row.energy_theorem = Some(rep.energy_theorem);
            row.phi2_numeric = Some(phi2.numeric);
        }
        Err(e) => row.error = Some(e),
    }
    row
}

fn sweep_fit(job: &Job, rows: &[SweepRow]) -> Option<SweepFit> {
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.c.is_some() && r.momentum.is_some() && r.energy.is_some()).collect();
    if ok.len() < 2 {
        return None;
    }
    let params = ModelParams::new(job.l, job.p, job.m, 1.0).ok()?;
    let exps = scaling_exponents(&params);
    let cs: Vec<f64> = ok.iter().map(|r| r.c.unwrap()).collect();
    let ps: Vec<f64> = ok.iter().map(|r| r.momentum.unwrap()).collect();
    let es: Vec<f64> = ok.iter().map(|r| r.energy.unwrap()).collect();
    let energy_fit = (exps.r.is_some() && es.iter().all(|e| *e != 0.0)).then(|| log_log_slope(&ps, &es));
    Some(SweepFit {
        momentum_vs_c: log_log_slope(&cs, &ps),
        momentum_vs_c_expected: exps.i2,
        energy_vs_momentum: energy_fit,
        energy_vs_momentum_expected: exps.r.map(|r| -r),
    })
}

fn opt_num(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn opt_show<D: ToString>(x: Option<D>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn run_sweep(job: &Job) -> Result<String, CliError> {
    let axis = job.axis.ok_or_else(|| invalid("sweep needs --axis"))?;
    let rows: Vec<SweepRow> = job.values.par_iter().map(|&v| sweep_point(job, axis, v)).collect();
    let fit = if axis == Axis::C { sweep_fit(job, &rows) } else { None };
    match job.format {
        Format::Json => report(job, json!({ "axis": axis, "rows": rows, "fit": fit })),
        Format::Csv => {
            let mut out = String::from(
                "value,l,p,m,c,window_ok,marginal,dpdc_exponent,momentum,energy,energy_theorem,phi2_numeric,error\n",
            );
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    fmt_num(r.value),
                    fmt_num(r.l),
                    fmt_num(r.p),
                    opt_show(r.m),
                    opt_num(r.c),
                    opt_show(r.window_ok),
                    opt_show(r.marginal),
                    opt_num(r.dpdc_exponent),
                    opt_num(r.momentum),
                    opt_num(r.energy),
                    opt_num(r.energy_theorem),
                    opt_num(r.phi2_numeric),
                    r.error.as_deref().map(csv_field).unwrap_or_default()
                );
            }
            if let Some(f) = fit {
                let _ = writeln!(
                    out,
                    "# fit momentum_vs_c={} expected={}",
                    fmt_num(f.momentum_vs_c),
                    fmt_num(f.momentum_vs_c_expected)
                );
                if let (Some(a), Some(b)) = (f.energy_vs_momentum, f.energy_vs_momentum_expected) {
                    let _ = writeln!(out, "# fit energy_vs_momentum={} expected={}", fmt_num(a), fmt_num(b));
                }
            }
            Ok(out)
        }
    }
}

/// Output text of one run, without writing it anywhere.
pub fn render(cfg: &RunConfig) -> Result<String, CliError> {
    let job = validate(cfg)?;
    match job.command {
        Command::Profile => run_profile(&job),
        Command::Conserved => {
            let prof = exact_profile(&job)?;
            report(&job, serde_json::to_value(conserved_report(&prof, job.tol).map_err(computation)?).map_err(computation)?)
        }
        Command::Stability => {
            let prof = exact_profile(&job)?;
            report(&job, serde_json::to_value(stability_report(&prof, job.tol).map_err(computation)?).map_err(computation)?)
        }
        Command::Variational => run_variational(&job),
        Command::Scaling => run_scaling(&job),
        Command::Sweep => run_sweep(&job),
    }
}

/// Renders and writes to `--out` or stdout.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let text = render(cfg)?;
    match &cfg.out {
        Some(path) => fs::write(path, text)?,
        None => match io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
            other => other?,
        },
    }
    Ok(())
}

fn parse<I, A>(args: I) -> Result<Option<RunConfig>, CliError>
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return Ok(None);
            }
            return Err(CliError::InvalidConfig(e.render().to_string().trim().to_string()));
        }
    };
    let mut over = cli.run;
    over.command = cli.command;
    let base = match &cli.config {
        Some(path) => RunConfig::from_json_file(path)?,
        None => RunConfig::default(),
    };
    Ok(Some(over.over(base)))
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let result = parse(args).and_then(|cfg| match cfg {
        Some(cfg) => run(&cfg),
        None => Ok(()),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> RunConfig {
        parse(std::iter::once("compacton").chain(args.iter().copied())).unwrap().unwrap()
    }

    #[test]
    fn parses_flags() {
        let c = cfg(&["sweep", "--l", "3", "--p", "-1", "--m", "2", "--axis", "c", "--values", "0.5,1,2"]);
        assert_eq!(c.command, Some(Command::Sweep));
        assert_eq!(c.p, Some(-1.0));
        assert_eq!(c.values, vec![0.5, 1.0, 2.0]);
        assert_eq!(c.axis, Some(Axis::C));
    }

    #[test]
    fn flags_override_config() {
        let base: RunConfig = serde_json::from_str(r#"{"command":"scaling","l":5,"p":1,"m":4,"c":2}"#).unwrap();
        let over = RunConfig { c: Some(3.0), ..Default::default() };
        let merged = over.over(base);
        assert_eq!(merged.command, Some(Command::Scaling));
        assert_eq!(merged.c, Some(3.0));
        assert_eq!(merged.l, Some(5.0));
    }

    #[test]
    fn config_rejects_unknown_fields() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"command":"profile","speed":1}"#).is_err());
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            vec!["profile", "--l", "3", "--p", "1", "--m", "2", "--c", "1", "--momentum", "1"],
            vec!["profile", "--l", "3", "--p", "1", "--m", "2", "--grid-points", "10"],
            vec!["profile", "--l", "3", "--p", "1", "--m", "3"],
            vec!["profile", "--l", "3", "--p", "1"],
            vec!["sweep", "--l", "3", "--p", "1", "--m", "2", "--axis", "c"],
            vec!["profile", "--l", "3", "--p", "1", "--m", "4", "--family", "closed_sin2"],
            vec!["conserved", "--l", "3", "--p", "1", "--m", "2", "--z-curve"],
        ];
        for args in bad {
            let err = render(&cfg(&args)).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{args:?}: {err}");
        }
        assert_eq!(parse(["compacton", "--bogus"]).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn computation_error_exit_code() {
        // p > 2 has no compacton
        let err = render(&cfg(&["profile", "--l", "4", "--p", "3", "--m", "2"])).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert_eq!(err.to_json()["error"], "computation_error");
    }

    #[test]
    fn scaling_width_independent() {
        let out = render(&cfg(&["scaling", "--l", "5", "--p", "1", "--m", "4"])).unwrap();
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["exponents"]["i1"].as_f64(), Some(0.0));
        assert_eq!(v["regime"]["width_independent"], true);
    }

    #[test]
    fn flatten_nested() {
        let out = report_csv(&json!({"a": {"b": 1.5, "c": [true, null]}, "s": "x,y"}));
        assert_eq!(out, "quantity,value\na.b,1.5000000000000000e0\na.c.0,true\na.c.1,\ns,\"x,y\"\n");
    }

    #[test]
    fn sweep_rows_keep_order_and_errors() {
        let out = render(&cfg(&[
            "sweep", "--l", "3", "--p", "1", "--m", "2", "--axis", "m", "--values", "2,3,4", "--grid-points", "64",
        ]))
        .unwrap();
        let v: Value = serde_json::from_str(&out).unwrap();
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0]["value"].as_f64(), Some(2.0));
        assert!(rows[0]["error"].is_null());
        assert!(rows[1]["error"].as_str().unwrap().contains("even"));
        assert!(rows[2]["momentum"].as_f64().unwrap() > 0.0);
    }
}
