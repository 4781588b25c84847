//! Command-line front end: entropy sweeps over the coupling, Husimi slices,
//! observable reports and a self-verification run.
//!
//! Exit codes: 0 success, 1 invalid arguments, 2 output not writable,
//! 3 quadrature did not converge (output is still written), 4 verification failed.

mod verify;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use bargmann::husimi::{self, DEFAULT_SLICE_GRID};
use bargmann::moments::observable_report;
use bargmann::quadrature::{McSpec, QuadratureSpec};
use bargmann::sbs::{self, Coupling};
use bargmann::wehrl::{self, EntropyReport};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

pub use verify::{CheckReport, Tolerances};

pub const MAX_STEPS: usize = 100_000;

#[derive(Debug, Parser)]
#[command(name = "bargmann", version, about = "Wehrl entropies of coupled oscillators in the Segal-Bargmann representation")]
pub struct Cli {
    /// Worker threads for parallel evaluation
    #[arg(long, global = true, env = "BARGMANN_WORKERS")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entropies and mutual information on an evenly spaced coupling grid
    Sweep(SweepArgs),
    /// Husimi density on a (u1, v1) grid at a fixed mode-2 point
    Husimi(HusimiArgs),
    /// Run the analytic-vs-numeric checks and print a JSON summary
    Verify(VerifyArgs),
    /// Closed-form and moment-engine observables at one coupling
    Observables(ObservablesArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; standard output when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct QuadArgs {
    /// Highest Gauss-Hermite order per axis
    #[arg(long, default_value_t = QuadratureSpec::default().max_order)]
    pub order: usize,
}

impl QuadArgs {
    fn spec(&self) -> Result<QuadratureSpec, CliError> {
        let d = QuadratureSpec::default();
        let spec = QuadratureSpec {
            base_order: d.base_order.min(self.order),
            max_order: self.order,
            ..d
        };
        spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub eta_min: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub eta_max: f64,
    #[arg(long, default_value_t = 31)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub n1: u32,
    #[arg(long, default_value_t = 0)]
    pub n2: u32,
    #[command(flatten)]
    pub quad: QuadArgs,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct HusimiArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub eta: f64,
    #[arg(long, default_value_t = 0)]
    pub n1: u32,
    #[arg(long, default_value_t = 0)]
    pub n2: u32,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub fix_u2: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub fix_v2: f64,
    /// Points per axis
    #[arg(long, default_value_t = DEFAULT_SLICE_GRID)]
    pub grid: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Override a tolerance, `name=value`; a name matches every check it prefixes
    #[arg(long = "tol", value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,
    #[arg(long, default_value_t = McSpec::default().samples)]
    pub mc_samples: usize,
    #[arg(long, default_value_t = McSpec::default().seed)]
    pub seed: u64,
    #[command(flatten)]
    pub quad: QuadArgs,
    /// Report file; standard output when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ObservablesArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub eta: f64,
    #[command(flatten)]
    pub output: Output,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = value.parse().map_err(|e| format!("bad tolerance `{value}`: {e}"))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(format!("tolerance must be positive, got {v}"));
    }
    Ok((name.to_string(), v))
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(PathBuf, io::Error),
    NotConverged(Vec<String>),
    VerifyFailed(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(..) => 2,
            CliError::NotConverged(_) => 3,
            CliError::VerifyFailed(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io(p, e) => write!(f, "cannot write {}: {e}", p.display()),
            CliError::NotConverged(flags) => write!(f, "quadrature did not converge: {}", flags.join("; ")),
            CliError::VerifyFailed(names) => write!(f, "failed checks: {}", names.join(", ")),
        }
    }
}

impl From<bargmann::Error> for CliError {
    fn from(e: bargmann::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let pool = match cli.workers {
        Some(0) => return Err(CliError::Usage("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Husimi(a) => cmd_husimi(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Observables(a) => cmd_observables(&a),
    })
}

/// Opens the destination before any work is done, so a bad path fails fast.
fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::Io(p.clone(), e))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn emit(out: &mut dyn Write, path: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    let label = || path.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io(label(), e))?;
    out.flush().map_err(|e| CliError::Io(label(), e))
}

/// Round-trip safe representation with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn check_coupling(eta: f64) -> Result<(), CliError> {
    Coupling::new(eta).map(|_| ()).map_err(CliError::from)
}

pub fn sweep_grid(eta_min: f64, eta_max: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if eta_min.partial_cmp(&eta_max) != Some(std::cmp::Ordering::Less) {
        return Err(CliError::Usage(format!("need eta-min < eta-max, got {eta_min} and {eta_max}")));
    }
    if !(2..=MAX_STEPS).contains(&steps) {
        return Err(CliError::Usage(format!("steps must be in 2..={MAX_STEPS}, got {steps}")));
    }
    check_coupling(eta_min)?;
    check_coupling(eta_max)?;
    let h = (eta_max - eta_min) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|k| if k + 1 == steps { eta_max } else { eta_min + h * k as f64 })
        .collect())
}

pub const SWEEP_HEADER: &str = "eta,s_total_analytic,s_total_numeric,s1,s2,mutual_info,s1_minus_s2,err_flags";

fn sweep_row(r: &EntropyReport) -> String {
    let mut row = String::new();
    let _ = write!(
        row,
        "{},{},{},{},{},{},{},{}",
        fmt_num(r.eta),
        fmt_opt(r.s_total.analytic),
        fmt_num(r.s_total.numeric),
        fmt_num(r.s_partial_1.numeric),
        fmt_num(r.s_partial_2.numeric),
        fmt_num(r.mutual_info.numeric),
        fmt_num(r.s_partial_1.numeric - r.s_partial_2.numeric),
        r.flags.join(";").replace(',', " "),
    );
    row
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let grid = sweep_grid(a.eta_min, a.eta_max, a.steps)?;
    for n in [a.n1, a.n2] {
        if n > sbs::N_MAX {
            return Err(bargmann::Error::ExcitationTooHigh(n).into());
        }
    }
    let spec = a.quad.spec()?;
    let mut out = open_output(&a.output.out)?;
    let reports: Vec<EntropyReport> = grid
        .par_iter()
        .map(|&eta| wehrl::report(eta, a.n1, a.n2, &spec))
        .collect::<Result<_, _>>()?;

    let text = match a.output.format {
        Format::Csv => {
            let mut s = String::from(SWEEP_HEADER);
            s.push('\n');
            for r in &reports {
                s.push_str(&sweep_row(r));
                s.push('\n');
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n",
    };
    emit(&mut out, &a.output.out, &text)?;

    let flags: Vec<String> = reports
        .iter()
        .flat_map(|r| r.flags.iter().map(move |f| format!("eta {}: {f}", r.eta)))
        .collect();
    if flags.is_empty() {
        Ok(())
    } else {
        Err(CliError::NotConverged(flags))
    }
}

#[derive(Serialize)]
struct SliceOutput {
    eta: f64,
    state: (u32, u32),
    fixed: [f64; 2],
    extent: f64,
    points: Vec<SlicePoint>,
}

#[derive(Serialize)]
struct SlicePoint {
    u1: f64,
    v1: f64,
    value: f64,
}

pub fn cmd_husimi(a: &HusimiArgs) -> Result<(), CliError> {
    if a.grid < 2 {
        return Err(CliError::Usage(format!("grid must be at least 2, got {}", a.grid)));
    }
    let coupling = Coupling::new(a.eta)?;
    let state = sbs::excited_state(&coupling, a.n1, a.n2)?;
    let density = husimi::husimi_of(&state)?;
    let fixed = [a.fix_u2, a.fix_v2];
    let s = husimi::slice(&density, fixed)?;
    let extent = s.default_extent();
    let mut out = open_output(&a.output.out)?;
    let points = s.grid(a.grid, extent)?;

    let text = match a.output.format {
        Format::Csv => {
            let mut t = String::from("u1,v1,value\n");
            for (u, v, f) in &points {
                let _ = writeln!(t, "{},{},{}", fmt_num(*u), fmt_num(*v), fmt_num(*f));
            }
            t
        }
        Format::Json => {
            let o = SliceOutput {
                eta: a.eta,
                state: (a.n1, a.n2),
                fixed,
                extent,
                points: points.into_iter().map(|(u1, v1, value)| SlicePoint { u1, v1, value }).collect(),
            };
            serde_json::to_string_pretty(&o).expect("slice serializes") + "\n"
        }
    };
    emit(&mut out, &a.output.out, &text)
}

pub fn cmd_observables(a: &ObservablesArgs) -> Result<(), CliError> {
    let coupling = Coupling::new(a.eta)?;
    let mut out = open_output(&a.output.out)?;
    let r = observable_report(&coupling)?;
    let text = match a.output.format {
        Format::Csv => {
            let mut t = String::from("observable,analytic,numeric,discrepancy\n");
            for (name, c) in r.entries() {
                let _ = writeln!(t, "{name},{},{},{}", fmt_num(c.analytic), fmt_num(c.numeric), fmt_num(c.discrepancy));
            }
            t
        }
        Format::Json => serde_json::to_string_pretty(&r).expect("report serializes") + "\n",
    };
    emit(&mut out, &a.output.out, &text)
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<(), CliError> {
    let spec = a.quad.spec()?;
    let mc = McSpec {
        samples: a.mc_samples,
        seed: a.seed,
        ..McSpec::default()
    };
    mc.validate()?;
    let tolerances = Tolerances::new(&a.tol)?;
    let mut out = open_output(&a.out)?;
    let checks = verify::run_all(&spec, &mc, &tolerances)?;
    let text = serde_json::to_string_pretty(&checks).expect("checks serialize") + "\n";
    emit(&mut out, &a.out, &text)?;
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed()).map(|c| c.check_name.clone()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::VerifyFailed(failed))
    }
}
