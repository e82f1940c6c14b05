//! Command-line frontend.
//!
//! Exit codes: 0 success, 2 negative verdict, 1 usage or input error.
//! Reports are JSON with every float printed to 17 significant digits;
//! kernels and meshes are text files, trajectories CSV.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};
use thiserror::Error;

use crate::cp::{
    brute_cp_scan, check_cp_nonuniform, check_cp_uniform, check_property_b, default_lambda_grid,
    CpReport, SeqError, SeqKernel, DEFAULT_TOL,
};
use crate::fode::{
    default_yosida_lambda, solve_fode, FodeProblem, Nonlinearity, ProblemKind, SolveError,
    SolveOptions, Stepper,
};
use crate::generate;
use crate::kernel::{KernelError, TriKernel};
use crate::l1::{L1Error, L1Operator};
use crate::mesh::{Mesh, MeshError};
use crate::resolvent::{resolvent, resolvent_defects};
use crate::special::{mittag_leffler_estimate, MlQuery, SpecialError, DEFAULT_ML_ACCURACY};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const THREADS_ENV: &str = "CPKERNEL_THREADS";
const LAMBDA_RANGE: (f64, f64) = (1e-12, 1e12);

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Sequence(#[from] SeqError),
    #[error(transparent)]
    L1(#[from] L1Error),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Parser)]
#[command(name = "cpkernel", version, about = "Triangular kernel algebra, CP checks and L1 solves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate or validate a time mesh
    Mesh(MeshCmd),
    /// Assemble the L1 kernels C, B = C ̄* L⁻¹ and A = B⁻¹
    L1(L1Cmd),
    /// Complete-positivity verdict for a kernel file
    CheckCp(CheckCpCmd),
    /// Resolvent kernel and its identity defects
    Resolvent(ResolventCmd),
    /// Solve D^α u = -𝒜(u) with the L1 scheme
    Solve(SolveCmd),
    /// Evaluate the Mittag-Leffler function E_α(z), z <= 0
    Ml(MlCmd),
    /// Run the randomized property suite
    Verify(VerifyCmd),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct MeshSource {
    /// Graded mesh `T,N,r` with t_k = T (k/N)^r
    #[arg(long, value_name = "T,N,r")]
    pub graded: Option<String>,
    /// Mesh file, one time per line
    #[arg(long, value_name = "FILE")]
    pub mesh_file: Option<PathBuf>,
}

impl MeshSource {
    fn load(&self) -> Result<Mesh, CliError> {
        match (&self.graded, &self.mesh_file) {
            (Some(spec), None) => {
                let parts = split_numbers(spec, "--graded")?;
                if parts.len() != 3 {
                    return Err(usage(format!("--graded expects T,N,r, got {spec:?}")));
                }
                let n = parts[1];
                if !(n >= 1.0 && n.fract() == 0.0 && n <= u32::MAX as f64) {
                    return Err(usage(format!("--graded step count must be a positive integer, got {n}")));
                }
                Ok(Mesh::graded(parts[0], n as usize, parts[2])?)
            }
            (None, Some(path)) => Ok(Mesh::read(path)?),
            _ => Err(usage("exactly one of --graded and --mesh-file is required".into())),
        }
    }

    fn echo(&self) -> Value {
        json!({
            "graded": self.graded,
            "mesh_file": self.mesh_file.as_ref().map(|p| p.display().to_string()),
        })
    }
}

#[derive(Debug, Args)]
pub struct MeshCmd {
    #[command(flatten)]
    pub source: MeshSource,
    /// Output file (stdout if omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum L1Kernel {
    C,
    B,
    A,
}

#[derive(Debug, Args)]
pub struct L1Cmd {
    #[arg(long)]
    pub alpha: f64,
    #[command(flatten)]
    pub source: MeshSource,
    /// Which kernel to write
    #[arg(long, value_enum, default_value = "a")]
    pub kernel: L1Kernel,
    /// Kernel output file (stdout if omitted; the report then goes to stderr)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckCpCmd {
    #[arg(long)]
    pub kernel_file: PathBuf,
    /// The file holds one sequence a_0, a_1, ..., a_N
    #[arg(long)]
    pub uniform: bool,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Also run the resolvent scan over the λ grid
    #[arg(long)]
    pub scan: bool,
    /// Comma-separated λ grid for --scan (default 10^k, k = -3..6)
    #[arg(long, value_name = "L1,L2,...")]
    pub lambda_grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct ResolventCmd {
    #[arg(long)]
    pub kernel_file: PathBuf,
    #[arg(long)]
    pub lambda: f64,
    /// Write R_λ to this file
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepperArg {
    Direct,
    Yosida,
}

#[derive(Debug, Args)]
pub struct SolveCmd {
    #[arg(long)]
    pub alpha: f64,
    #[command(flatten)]
    pub source: MeshSource,
    /// linear:RATE | cubic | monotone:B | diffusion:M,ELL[,B] with B = zero, cubic or linear=K
    #[arg(long)]
    pub problem: String,
    /// Initial state: a number (constant), `sine` for max(sin(πx), 0) on
    /// the diffusion grid, or comma-separated values
    #[arg(long, default_value = "1")]
    pub u0: String,
    /// Trajectory CSV
    #[arg(long)]
    pub out: PathBuf,
    /// JSON sidecar (default: <out>.json)
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "direct")]
    pub stepper: StepperArg,
    /// Yosida parameter λ (default 1e-3 · min τ^α)
    #[arg(long)]
    pub yosida_lambda: Option<f64>,
    #[arg(long, default_value_t = crate::fode::DEFAULT_STEP_RESIDUAL_TOL)]
    pub residual_tol: f64,
}

#[derive(Debug, Args)]
pub struct MlCmd {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub z: f64,
    #[arg(long, default_value_t = DEFAULT_ML_ACCURACY)]
    pub accuracy: f64,
    /// Print a JSON record instead of the bare value
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct VerifyCmd {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the summary here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn split_numbers(text: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("{flag}: cannot parse {s:?} as a number")))
        })
        .collect()
}

/// Pretty JSON with floats printed as `{:.16e}`.
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{:.16e}", value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes a report with 17 significant digits per float.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report serializes");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

fn header(command: &str, config: Value) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("tool".into(), json!("cpkernel"));
    m.insert("version".into(), json!(VERSION));
    m.insert("command".into(), json!(command));
    m.insert("config".into(), config);
    m
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Outcome of a subcommand: the text for stdout and the exit code.
struct Outcome {
    stdout: String,
    stderr: String,
    code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            stdout,
            stderr: String::new(),
            code: 0,
        }
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(o) => {
            let _ = out.write_all(o.stdout.as_bytes());
            let _ = err.write_all(o.stderr.as_bytes());
            o.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

/// Sizes the global thread pool from `CPKERNEL_THREADS`, if set.
pub fn configure_threads() -> Result<(), String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| e.to_string())
        }
        Err(_) => Ok(()),
    }
}

fn execute(cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Mesh(c) => cmd_mesh(c),
        Command::L1(c) => cmd_l1(c),
        Command::CheckCp(c) => cmd_check_cp(c),
        Command::Resolvent(c) => cmd_resolvent(c),
        Command::Solve(c) => cmd_solve(c),
        Command::Ml(c) => cmd_ml(c),
        Command::Verify(c) => cmd_verify(c),
    }
}

fn cmd_mesh(c: &MeshCmd) -> Result<Outcome, CliError> {
    let mesh = c.source.load()?;
    match &c.out {
        Some(path) => {
            mesh.write(path)?;
            Ok(Outcome::ok(String::new()))
        }
        None => Ok(Outcome::ok(mesh.to_string())),
    }
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("--alpha must lie in (0, 1), got {alpha}")))
    }
}

fn cmd_l1(c: &L1Cmd) -> Result<Outcome, CliError> {
    check_alpha(c.alpha)?;
    let mesh = c.source.load()?;
    let op = L1Operator::new(&mesh, c.alpha)?;
    let kernel = match c.kernel {
        L1Kernel::C => &op.c,
        L1Kernel::B => &op.b,
        L1Kernel::A => &op.a,
    };
    let cert = check_property_b(&op.b, crate::l1::PROPERTY_B_TOL);
    let mut report = header(
        "l1",
        json!({
            "alpha": c.alpha,
            "mesh": c.source.echo(),
            "kernel": c.kernel,
            "out": c.out.as_ref().map(|p| p.display().to_string()),
        }),
    );
    report.insert("steps".into(), json!(mesh.num_steps()));
    report.insert("b_certificate".into(), serde_json::to_value(&cert).expect("report"));
    let report = to_json(&Value::Object(report));
    match &c.out {
        Some(path) => {
            kernel.write(path)?;
            Ok(Outcome::ok(report))
        }
        None => Ok(Outcome {
            stdout: kernel.to_string(),
            stderr: report,
            code: 0,
        }),
    }
}

fn lambda_grid(spec: &Option<String>) -> Result<Vec<f64>, CliError> {
    let grid = match spec {
        Some(s) => split_numbers(s, "--lambda-grid")?,
        None => default_lambda_grid(),
    };
    if grid.is_empty() || grid.iter().any(|&l| !(l >= LAMBDA_RANGE.0 && l <= LAMBDA_RANGE.1)) {
        return Err(usage(format!(
            "λ grid entries must lie in [{:e}, {:e}]",
            LAMBDA_RANGE.0, LAMBDA_RANGE.1
        )));
    }
    Ok(grid)
}

fn cmd_check_cp(c: &CheckCpCmd) -> Result<Outcome, CliError> {
    if !(c.tol >= 0.0 && c.tol.is_finite()) {
        return Err(usage(format!("--tol must be finite and >= 0, got {}", c.tol)));
    }
    let grid = if c.scan { Some(lambda_grid(&c.lambda_grid)?) } else { None };
    let (certificate, kernel): (CpReport, TriKernel) = if c.uniform {
        let text = fs::read_to_string(&c.kernel_file).map_err(|e| io_err(&c.kernel_file, e))?;
        let seq = SeqKernel::parse(&text)?;
        (check_cp_uniform(&seq, c.tol)?, seq.to_kernel())
    } else {
        let a = TriKernel::read(&c.kernel_file)?;
        (check_cp_nonuniform(&a, c.tol)?, a)
    };
    let scan = match &grid {
        Some(g) => Some(brute_cp_scan(&kernel, g, c.tol)?),
        None => None,
    };
    let cp = certificate.is_cp() && scan.as_ref().is_none_or(|s| s.is_cp());
    let mut report = header(
        "check-cp",
        json!({
            "kernel_file": c.kernel_file.display().to_string(),
            "uniform": c.uniform,
            "tol": c.tol,
            "scan": c.scan,
            "lambda_grid": grid,
        }),
    );
    report.insert("size".into(), json!(kernel.size()));
    report.insert("completely_positive".into(), json!(cp));
    report.insert("certificate".into(), serde_json::to_value(&certificate).expect("report"));
    if let Some(s) = &scan {
        report.insert("scan".into(), serde_json::to_value(s).expect("report"));
        report.insert("agreement".into(), json!(s.is_cp() == certificate.is_cp()));
    }
    Ok(Outcome {
        stdout: to_json(&Value::Object(report)),
        stderr: String::new(),
        code: if cp { 0 } else { 2 },
    })
}

fn cmd_resolvent(c: &ResolventCmd) -> Result<Outcome, CliError> {
    if !(c.lambda >= LAMBDA_RANGE.0 && c.lambda <= LAMBDA_RANGE.1) {
        return Err(usage(format!(
            "--lambda must lie in [{:e}, {:e}], got {}",
            LAMBDA_RANGE.0, LAMBDA_RANGE.1, c.lambda
        )));
    }
    let a = TriKernel::read(&c.kernel_file)?;
    let r = resolvent(&a, c.lambda)?;
    let d = resolvent_defects(&a, c.lambda)?;
    if let Some(path) = &c.out {
        r.kernel.write(path)?;
    }
    let mut report = header(
        "resolvent",
        json!({
            "kernel_file": c.kernel_file.display().to_string(),
            "lambda": c.lambda,
            "out": c.out.as_ref().map(|p| p.display().to_string()),
        }),
    );
    report.insert("size".into(), json!(a.size()));
    report.insert("identity".into(), json!(d.identity));
    report.insert("commutation".into(), json!(d.commutation));
    report.insert("asymptotic".into(), json!(d.asymptotic));
    report.insert("defects".into(), serde_json::to_value(d).expect("report"));
    Ok(Outcome::ok(to_json(&Value::Object(report))))
}

fn parse_beta(text: &str) -> Result<Nonlinearity, CliError> {
    match text.trim() {
        "zero" => Ok(Nonlinearity::Zero),
        "cubic" => Ok(Nonlinearity::Cubic),
        t => match t.strip_prefix("linear=") {
            Some(k) => k
                .parse()
                .map(Nonlinearity::Linear)
                .map_err(|_| usage(format!("cannot parse β slope {k:?}"))),
            None => Err(usage(format!("unknown β {t:?}; expected zero, cubic or linear=K"))),
        },
    }
}

/// Parses `linear:RATE`, `cubic`, `monotone:BETA` or `diffusion:M,ELL[,BETA]`.
pub fn parse_problem_kind(text: &str) -> Result<ProblemKind, CliError> {
    let (name, args) = text.split_once(':').unwrap_or((text, ""));
    match name {
        "linear" => {
            let rate = args
                .parse()
                .map_err(|_| usage(format!("linear problem needs a rate, got {args:?}")))?;
            Ok(ProblemKind::LinearScalar { rate })
        }
        "cubic" if args.is_empty() => Ok(ProblemKind::ScalarMonotone {
            beta: Nonlinearity::Cubic,
        }),
        "monotone" => Ok(ProblemKind::ScalarMonotone {
            beta: parse_beta(args)?,
        }),
        "diffusion" => {
            let parts: Vec<&str> = args.split(',').collect();
            if !(2..=3).contains(&parts.len()) {
                return Err(usage(format!("diffusion problem needs M,ELL[,BETA], got {args:?}")));
            }
            let points = parts[0]
                .trim()
                .parse()
                .map_err(|_| usage(format!("cannot parse grid size {:?}", parts[0])))?;
            let length = parts[1]
                .trim()
                .parse()
                .map_err(|_| usage(format!("cannot parse length {:?}", parts[1])))?;
            let beta = match parts.get(2) {
                Some(b) => parse_beta(b)?,
                None => Nonlinearity::Cubic,
            };
            Ok(ProblemKind::DiffusionReaction1D {
                points,
                length,
                beta,
            })
        }
        _ => Err(usage(format!(
            "unknown problem {text:?}; expected linear:RATE, cubic, monotone:BETA or diffusion:M,ELL[,BETA]"
        ))),
    }
}

/// `max(sin(πx), 0)` on the interior grid.
pub fn sine_bump(points: usize, length: f64) -> Vec<f64> {
    FodeProblem::grid(points, length)
        .into_iter()
        .map(|x| (std::f64::consts::PI * x).sin().max(0.0))
        .collect()
}

fn parse_initial(text: &str, kind: &ProblemKind) -> Result<Vec<f64>, CliError> {
    let dim = match kind {
        ProblemKind::DiffusionReaction1D { points, .. } => *points,
        _ => 1,
    };
    if text.trim() == "sine" {
        return match kind {
            ProblemKind::DiffusionReaction1D { points, length, .. } => Ok(sine_bump(*points, *length)),
            _ => Err(usage("--u0 sine needs a diffusion problem".into())),
        };
    }
    let values = split_numbers(text, "--u0")?;
    match values.len() {
        1 => Ok(vec![values[0]; dim]),
        n if n == dim => Ok(values),
        n => Err(usage(format!("--u0 has {n} values, problem dimension is {dim}"))),
    }
}

fn cmd_solve(c: &SolveCmd) -> Result<Outcome, CliError> {
    check_alpha(c.alpha)?;
    let mesh = c.source.load()?;
    let kind = parse_problem_kind(&c.problem)?;
    let initial = parse_initial(&c.u0, &kind)?;
    let problem = FodeProblem::new(kind, initial)?;
    let op = L1Operator::new(&mesh, c.alpha)?;
    let stepper = match c.stepper {
        StepperArg::Direct => Stepper::Direct,
        StepperArg::Yosida => Stepper::Yosida {
            lambda: c.yosida_lambda.unwrap_or_else(|| default_yosida_lambda(&op)),
        },
    };
    let options = SolveOptions {
        stepper,
        residual_tol: c.residual_tol,
        ..SolveOptions::default()
    };
    let traj = solve_fode(&op, &problem, &options)?;

    let mut csv = String::from("t");
    if problem.dim() == 1 {
        csv.push_str(",u");
    } else {
        for i in 1..=problem.dim() {
            csv.push_str(&format!(",u_{i}"));
        }
    }
    csv.push('\n');
    for (t, u) in traj.times.iter().zip(&traj.states) {
        csv.push_str(&format!("{t:.16e}"));
        for x in u {
            csv.push_str(&format!(",{x:.16e}"));
        }
        csv.push('\n');
    }
    write_file(&c.out, &csv)?;

    let sidecar = c.report.clone().unwrap_or_else(|| {
        let mut p = c.out.clone().into_os_string();
        p.push(".json");
        PathBuf::from(p)
    });
    let mut report = header(
        "solve",
        json!({
            "alpha": c.alpha,
            "mesh": c.source.echo(),
            "problem": problem.kind,
            "u0": c.u0,
            "stepper": stepper,
            "residual_tol": c.residual_tol,
            "out": c.out.display().to_string(),
        }),
    );
    report.insert("steps".into(), json!(mesh.num_steps()));
    report.insert("min_entry".into(), json!(traj.min_entry()));
    report.insert("max_residual".into(), json!(traj.max_residual()));
    report.insert("final_state".into(), json!(traj.final_state()));
    report.insert("residuals".into(), json!(traj.residuals));
    report.insert("iterations".into(), json!(traj.iterations));
    if !traj.contraction_factors.is_empty() {
        let max = traj.contraction_factors.iter().fold(0.0f64, |m, &x| m.max(x));
        report.insert("max_contraction_factor".into(), json!(max));
        report.insert("contraction_factors".into(), json!(traj.contraction_factors));
    }
    let text = to_json(&Value::Object(report));
    write_file(&sidecar, &text)?;
    Ok(Outcome::ok(String::new()))
}

fn cmd_ml(c: &MlCmd) -> Result<Outcome, CliError> {
    let q = MlQuery::with_accuracy(c.alpha, c.z, c.accuracy)?;
    let est = mittag_leffler_estimate(&q)?;
    if c.json {
        let mut report = header(
            "ml",
            json!({ "alpha": c.alpha, "z": c.z, "accuracy": c.accuracy }),
        );
        report.insert("value".into(), json!(est.value));
        report.insert("error_bound".into(), json!(est.error_bound));
        report.insert("branch".into(), serde_json::to_value(est.branch).expect("branch"));
        Ok(Outcome::ok(to_json(&Value::Object(report))))
    } else {
        Ok(Outcome::ok(format!("{:.16e}\n", est.value)))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub observed: f64,
    pub threshold: f64,
    pub cases: usize,
}

fn max_relative(x: &TriKernel, y: &TriKernel) -> f64 {
    x.max_abs_diff(y) / x.max_abs().max(y.max_abs()).max(f64::MIN_POSITIVE)
}

fn seeded(seed: u64, salt: u64) -> rand_chacha::ChaCha8Rng {
    generate::rng(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
}

fn verify_associativity(seed: u64) -> Result<CheckResult, CliError> {
    let mut rng = seeded(seed, 1);
    let mut worst = 0.0f64;
    let cases = 20;
    for _ in 0..cases {
        let a = generate::random_kernel(&mut rng, 40);
        let b = generate::random_kernel(&mut rng, 40);
        let c = generate::random_kernel(&mut rng, 40);
        let left = a.pseudo_convolve(&b)?.pseudo_convolve(&c)?;
        let right = a.pseudo_convolve(&b.pseudo_convolve(&c)?)?;
        worst = worst.max(max_relative(&left, &right));
    }
    Ok(CheckResult {
        name: "algebra_associativity",
        passed: worst <= 1e-12,
        observed: worst,
        threshold: 1e-12,
        cases,
    })
}

fn verify_inverse(seed: u64) -> Result<CheckResult, CliError> {
    let mut rng = seeded(seed, 2);
    let mut worst = 0.0f64;
    let cases = 20;
    for _ in 0..cases {
        let a = generate::random_kernel(&mut rng, 40);
        let b = a.inverse()?;
        let id = TriKernel::identity(40);
        worst = worst
            .max(a.pseudo_convolve(&b)?.max_abs_diff(&id))
            .max(b.pseudo_convolve(&a)?.max_abs_diff(&id));
    }
    Ok(CheckResult {
        name: "inverse_two_sided",
        passed: worst <= 1e-10,
        observed: worst,
        threshold: 1e-10,
        cases,
    })
}

fn verify_resolvent(seed: u64) -> Result<CheckResult, CliError> {
    let mut rng = seeded(seed, 3);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..5 {
        let a = generate::random_kernel(&mut rng, 40);
        for lambda in [0.01, 1.0, 100.0] {
            worst = worst.max(resolvent_defects(&a, lambda)?.worst_identity());
            cases += 1;
        }
    }
    Ok(CheckResult {
        name: "resolvent_identities",
        passed: worst <= 1e-10,
        observed: worst,
        threshold: 1e-10,
        cases,
    })
}

fn verify_cp_differential(seed: u64) -> Result<CheckResult, CliError> {
    let mut rng = seeded(seed, 4);
    let grid = default_lambda_grid();
    let mut disagreements = 0usize;
    let mut cases = 0;
    for i in 0..100 {
        let b = generate::random_certificate(&mut rng, 20);
        let b = if i % 2 == 0 { b } else { generate::perturb_certificate(&mut rng, &b).0 };
        let a = b.inverse()?;
        let cert = check_cp_nonuniform(&a, DEFAULT_TOL)?;
        if cert.min_margin <= 10.0 * DEFAULT_TOL {
            continue;
        }
        let scan = brute_cp_scan(&a, &grid, DEFAULT_TOL)?;
        cases += 1;
        if cert.is_cp() != scan.is_cp() {
            disagreements += 1;
        }
    }
    Ok(CheckResult {
        name: "cp_differential",
        passed: disagreements == 0,
        observed: disagreements as f64,
        threshold: 0.0,
        cases,
    })
}

fn verify_l1_certificate(seed: u64) -> Result<CheckResult, CliError> {
    let mut rng = seeded(seed, 5);
    let mut failures = 0usize;
    let mut cases = 0;
    for i in 1..=9 {
        let alpha = i as f64 / 10.0;
        for _ in 0..3 {
            let mesh = generate::log_uniform_mesh(&mut rng, 100, 3.0, 1.0);
            match L1Operator::new(&mesh, alpha) {
                Ok(_) => {}
                Err(L1Error::PropertyBViolated(_)) => failures += 1,
                Err(e) => return Err(e.into()),
            }
            cases += 1;
        }
    }
    Ok(CheckResult {
        name: "l1_property_b",
        passed: failures == 0,
        observed: failures as f64,
        threshold: 0.0,
        cases,
    })
}

fn verify_positivity(_seed: u64) -> Result<CheckResult, CliError> {
    let (m, length) = (32, 2.0);
    let mesh = Mesh::graded(1.0, 50, 2.0)?;
    let mut worst = f64::INFINITY;
    let mut cases = 0;
    for alpha in [0.2, 0.5, 0.8] {
        let op = L1Operator::new(&mesh, alpha)?;
        let problem = FodeProblem::new(
            ProblemKind::DiffusionReaction1D {
                points: m,
                length,
                beta: Nonlinearity::Cubic,
            },
            sine_bump(m, length),
        )?;
        let traj = solve_fode(&op, &problem, &SolveOptions::default())?;
        worst = worst.min(traj.min_entry());
        cases += 1;
    }
    Ok(CheckResult {
        name: "positivity",
        passed: worst >= -1e-10,
        observed: worst,
        threshold: -1e-10,
        cases,
    })
}

fn verify_mittag_leffler(_seed: u64) -> Result<CheckResult, CliError> {
    // e · erfc(1)
    const REFERENCE: f64 = 0.427_583_576_155_807;
    let v = mittag_leffler_estimate(&MlQuery::new(0.5, -1.0)?)?.value;
    let err = (v - REFERENCE).abs();
    Ok(CheckResult {
        name: "mittag_leffler_reference",
        passed: err <= 1e-10,
        observed: err,
        threshold: 1e-10,
        cases: 1,
    })
}

type Check = fn(u64) -> Result<CheckResult, CliError>;

/// Runs the property suite; results sorted by name.
pub fn verify_suite(seed: u64) -> Result<Vec<CheckResult>, CliError> {
    let checks: [Check; 7] = [
        verify_associativity,
        verify_inverse,
        verify_resolvent,
        verify_cp_differential,
        verify_l1_certificate,
        verify_positivity,
        verify_mittag_leffler,
    ];
    let mut results = checks
        .par_iter()
        .map(|check| check(seed))
        .collect::<Result<Vec<_>, _>>()?;
    results.sort_by(|a, b| a.name.cmp(b.name));
    Ok(results)
}

fn cmd_verify(c: &VerifyCmd) -> Result<Outcome, CliError> {
    let results = verify_suite(c.seed)?;
    let passed = results.iter().all(|r| r.passed);
    let mut report = header("verify", json!({ "seed": c.seed }));
    report.insert("seed".into(), json!(c.seed));
    report.insert("passed".into(), json!(passed));
    report.insert("checks".into(), serde_json::to_value(&results).expect("report"));
    let text = to_json(&Value::Object(report));
    let code = if passed { 0 } else { 2 };
    match &c.out {
        Some(path) => {
            write_file(path, &text)?;
            Ok(Outcome {
                stdout: String::new(),
                stderr: String::new(),
                code,
            })
        }
        None => Ok(Outcome {
            stdout: text,
            stderr: String::new(),
            code,
        }),
    }
}
