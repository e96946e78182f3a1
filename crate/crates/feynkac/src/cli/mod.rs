//! Command-line driver: single solves, convergence sweeps and preset tables.

mod report;
mod tables;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use crate::fracweights::TimeGrid;
use crate::problem::{registry_get, ProblemError, ProblemSpec};
use crate::stepper::{run, Discretization, Form, Scheme, SolveReport, SolverKind, StepError};
use crate::C64;

pub use report::{fill_rates, pretty, to_csv, Metric, Reference, Row, CSV_HEADER};
pub use tables::{preset, Preset, TABLE_IDS};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    /// 2 for bad input, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Problem(_) => 2,
            CliError::Step(
                StepError::Problem(_) | StepError::Weights(_) | StepError::Incompatible(_) | StepError::Unsupported(_),
            ) => 2,
            CliError::Step(_) | CliError::Io { .. } => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mesh {
    Uniform,
    Graded(f64),
}

impl fmt::Display for Mesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mesh::Uniform => f.write_str("uniform"),
            Mesh::Graded(g) => write!(f, "graded:{g}"),
        }
    }
}

/// One fully specified run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: String,
    pub scheme: Scheme,
    pub alpha: f64,
    pub gamma: f64,
    pub p: C64,
    pub sigma: f64,
    pub t_end: f64,
    pub k: Option<f64>,
    pub d: usize,
    pub level: usize,
    pub coarsest: Option<usize>,
    pub steps: usize,
    pub mesh: Mesh,
    pub solver: SolverKind,
    pub precond: bool,
    pub tol: f64,
    pub restart: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            case: "ex41".into(),
            scheme: Scheme { form: Form::II, time: crate::fracweights::TimeScheme::Pi },
            alpha: 1.6,
            gamma: 0.4,
            p: C64::new(3.0, 0.0),
            sigma: 2.0,
            t_end: 0.5,
            k: None,
            d: 2,
            level: 9,
            coarsest: None,
            steps: 40,
            mesh: Mesh::Uniform,
            solver: SolverKind::Direct,
            precond: false,
            tol: 1e-8,
            restart: 30,
        }
    }
}

impl RunConfig {
    pub fn problem(&self) -> Result<ProblemSpec, CliError> {
        Ok(ProblemSpec::new(registry_get(&self.case, self.sigma)?, self.alpha, self.gamma, self.p, self.t_end, self.k)?)
    }

    pub fn discretization(&self) -> Result<Discretization, CliError> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(CliError::Invalid(format!("tol = {} violates 0 < tol < 1", self.tol)));
        }
        if self.restart == 0 {
            return Err(CliError::Invalid("restart must be at least 1".into()));
        }
        if self.steps == 0 {
            return Err(CliError::Invalid("nt must be at least 1".into()));
        }
        if self.precond && self.solver == SolverKind::Direct {
            return Err(CliError::Invalid("the wavelet preconditioner needs --solver gmres or bicgstab".into()));
        }
        let grid = match self.mesh {
            Mesh::Uniform => TimeGrid::uniform(self.t_end, self.steps),
            Mesh::Graded(g) => TimeGrid::graded(self.t_end, self.steps, g),
        }
        .map_err(|e| CliError::Invalid(e.to_string()))?;
        let mut disc = Discretization::new(self.d, self.level, grid, self.scheme);
        if let Some(c) = self.coarsest {
            disc.coarsest = c;
        }
        disc.solver = self.solver;
        disc.precond = self.precond;
        disc.tol = self.tol;
        disc.restart = self.restart;
        Ok(disc)
    }

    pub fn run(&self) -> Result<SolveReport, CliError> {
        let problem = self.problem()?;
        let disc = self.discretization()?;
        Ok(run(&problem, &disc)?)
    }

    pub fn row(&self, r: &SolveReport) -> Row {
        Row {
            scheme: self.scheme.to_string(),
            alpha: self.alpha,
            gamma: self.gamma,
            p_re: self.p.re,
            p_im: self.p.im,
            d: self.d,
            level: self.level,
            steps: self.steps,
            mesh: self.mesh.to_string(),
            err2: r.err2,
            err1: r.err1,
            maxerr: r.maxerr,
            rate2: None,
            rate1: None,
            iters: r.mean_iters(),
            cpu_s: r.cpu_s,
            reference: None,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "feynkac", version, about = "Fractional Feynman-Kac solvers: spline Galerkin and collocation schemes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one discretization and report its errors.
    Solve(RunArgs),
    /// Sweep J and/or N and report observed convergence rates.
    Converge(RunArgs),
    /// Run a preset experiment (t1..t8, fig1).
    Table(TableArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeshArg {
    Uniform,
    Graded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecondArg {
    None,
    Wavelet,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse()
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    s.parse()
}

fn parse_count(s: &str) -> Result<usize, String> {
    s.trim().parse().map_err(|e| format!("{e}"))
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// Flat `key = value` file; flags on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// ex41, ex42, ex43, ex43_colloc or ex44.
    #[arg(long)]
    pub case: Option<String>,
    /// I-FBDF, I-PI, II-FBDF, II-PI, FWD-FBDF, FWD-PI or COLLOC-PI.
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Option<Scheme>,
    /// Space order, 1 < alpha <= 2.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Time order, 0 < gamma < 1.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Real part of the transform variable p.
    #[arg(long = "p-re", allow_negative_numbers = true)]
    pub p_re: Option<f64>,
    /// Imaginary part of p.
    #[arg(long = "p-im", allow_negative_numbers = true)]
    pub p_im: Option<f64>,
    /// Time exponent of the manufactured solution.
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// Final time.
    #[arg(long = "T", allow_negative_numbers = true)]
    pub t_end: Option<f64>,
    /// Diffusion coefficient (default depends on the case).
    #[arg(long = "K", allow_negative_numbers = true)]
    pub k: Option<f64>,
    /// Spline order: 2 or 3 for Galerkin, 4 for collocation.
    #[arg(long)]
    pub d: Option<usize>,
    /// Finest level [default: 9].
    #[arg(short = 'J', long = "J")]
    pub level: Option<usize>,
    /// Comma-separated levels (converge).
    #[arg(long = "J-list", value_delimiter = ',', value_parser = parse_count)]
    pub level_list: Option<Vec<usize>>,
    /// Coarsest level of the multiscale basis.
    #[arg(long = "J0")]
    pub coarsest: Option<usize>,
    /// Number of time steps [default: 40].
    #[arg(long)]
    pub nt: Option<usize>,
    /// Comma-separated step counts (converge).
    #[arg(long = "nt-list", value_delimiter = ',', value_parser = parse_count)]
    pub nt_list: Option<Vec<usize>>,
    /// Time mesh [default: uniform].
    #[arg(long, value_enum)]
    pub mesh: Option<MeshArg>,
    /// Grading exponent of the graded mesh [default: 2].
    #[arg(long, allow_negative_numbers = true)]
    pub grade: Option<f64>,
    /// direct, gmres or bicgstab [default: direct].
    #[arg(long, value_parser = parse_solver)]
    pub solver: Option<SolverKind>,
    /// Preconditioner for the Krylov solvers [default: none].
    #[arg(long, value_enum)]
    pub precond: Option<PrecondArg>,
    /// Relative residual tolerance of the Krylov solvers [default: 1e-8].
    #[arg(long, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    /// GMRES restart length [default: 30].
    #[arg(long)]
    pub restart: Option<usize>,
    /// CSV destination; without it the CSV goes to stdout and the table to stderr.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct TableArgs {
    /// t1..t8 or fig1.
    pub id: String,
    /// Factor applied to every step count; values below 1 drop the reference columns.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Parser, Debug)]
struct ConfigArgs {
    #[command(flatten)]
    args: RunArgs,
}

/// Parse `key = value` lines (`#` starts a comment) into run arguments.
pub fn parse_config(text: &str, origin: &str) -> Result<RunArgs, CliError> {
    let mut argv = vec!["config".to_string()];
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("{origin}:{}: expected `key = value`", i + 1)))?;
        let key = key.trim().trim_start_matches('-').replace('_', "-");
        if key == "config" {
            return Err(CliError::Invalid(format!("{origin}:{}: config files cannot include other configs", i + 1)));
        }
        argv.push(format!("--{key}"));
        argv.push(value.trim().to_string());
    }
    ConfigArgs::try_parse_from(argv)
        .map(|c| c.args)
        .map_err(|e| CliError::Invalid(format!("{origin}: {}", e.to_string().lines().next().unwrap_or("invalid entry"))))
}

macro_rules! overlay {
    ($top:ident, $base:ident; $($f:ident),*) => {
        RunArgs { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunArgs {
    /// Fill unset fields from the config file, if one is given.
    pub fn with_config(self) -> Result<RunArgs, CliError> {
        let Some(path) = self.config.clone() else { return Ok(self) };
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let base = parse_config(&text, &path.display().to_string())?;
        let top = self;
        Ok(overlay!(top, base; config, case, scheme, alpha, gamma, p_re, p_im, sigma, t_end, k, d, level, level_list,
            coarsest, nt, nt_list, mesh, grade, solver, precond, tol, restart, out))
    }

    /// Apply defaults; returns the base configuration.
    pub fn base_config(&self) -> RunConfig {
        let mut c = RunConfig::default();
        if let Some(v) = &self.case {
            c.case = v.clone();
        }
        if let Some(v) = self.scheme {
            c.scheme = v;
        }
        c.alpha = self.alpha.unwrap_or(c.alpha);
        c.gamma = self.gamma.unwrap_or(c.gamma);
        c.p = C64::new(self.p_re.unwrap_or(c.p.re), self.p_im.unwrap_or(c.p.im));
        c.sigma = self.sigma.unwrap_or(c.sigma);
        c.t_end = self.t_end.unwrap_or(c.t_end);
        c.k = self.k;
        c.d = self.d.unwrap_or(if c.scheme.form == Form::Colloc { 4 } else { c.d });
        c.level = self.level.unwrap_or(c.level);
        c.coarsest = self.coarsest;
        c.steps = self.nt.unwrap_or(c.steps);
        c.mesh = match self.mesh {
            Some(MeshArg::Graded) => Mesh::Graded(self.grade.unwrap_or(2.0)),
            _ => Mesh::Uniform,
        };
        c.solver = self.solver.unwrap_or(c.solver);
        c.precond = self.precond == Some(PrecondArg::Wavelet);
        c.tol = self.tol.unwrap_or(c.tol);
        c.restart = self.restart.unwrap_or(c.restart);
        c
    }

    /// Sweep points: lists of equal length are paired, a single list varies
    /// alone.
    pub fn sweep(&self) -> Result<Vec<RunConfig>, CliError> {
        let base = self.base_config();
        let levels = self.level_list.clone().unwrap_or_else(|| vec![base.level]);
        let steps = self.nt_list.clone().unwrap_or_else(|| vec![base.steps]);
        for (name, list) in [("J-list", &levels), ("nt-list", &steps)] {
            if list.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::Invalid(format!("{name} must be strictly increasing")));
            }
        }
        let pairs: Vec<(usize, usize)> = match (levels.len(), steps.len()) {
            (a, b) if a == b => levels.into_iter().zip(steps).collect(),
            (1, _) => steps.into_iter().map(|n| (levels[0], n)).collect(),
            (_, 1) => levels.into_iter().map(|j| (j, steps[0])).collect(),
            _ => return Err(CliError::Invalid("J-list and nt-list must have equal lengths when both vary".into())),
        };
        if pairs.len() < 2 {
            return Err(CliError::Invalid("need ≥ 2 points for a convergence sweep".into()));
        }
        Ok(pairs.into_iter().map(|(level, n)| RunConfig { level, steps: n, ..base.clone() }).collect())
    }
}

/// Rayon pool capped by `FEYNKAC_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("FEYNKAC_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Invalid(format!("FEYNKAC_THREADS = '{v}' is not a positive integer")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Invalid(format!("thread pool: {e}")))
}

/// Run every configuration, in parallel, returning rows in input order.
pub fn run_all(configs: &[RunConfig]) -> Result<Vec<Row>, CliError> {
    let pool = thread_pool()?;
    let results: Vec<Result<Row, CliError>> =
        pool.install(|| configs.par_iter().map(|c| c.run().map(|r| c.row(&r))).collect());
    results.into_iter().collect()
}

/// Run presets in order, attach their references and fill rates per group.
pub fn run_presets(presets: &[Preset]) -> Result<Vec<Row>, CliError> {
    let configs: Vec<RunConfig> = presets.iter().map(|p| p.config.clone()).collect();
    let mut rows = run_all(&configs)?;
    for (r, p) in rows.iter_mut().zip(presets) {
        r.reference = p.reference;
    }
    let groups: Vec<usize> = presets.iter().map(|p| p.group).collect();
    fill_rates(&mut rows, &groups);
    Ok(rows)
}

/// Rows of a preset table with rates filled in.
pub fn table_rows(id: &str, scale: f64) -> Result<Vec<Row>, CliError> {
    run_presets(&preset(id, scale)?)
}

fn emit(rows: &[Row], out: Option<&Path>) -> Result<(), CliError> {
    let csv = to_csv(rows);
    let table = pretty(rows);
    match out {
        Some(path) => {
            fs::write(path, csv).map_err(io_err(path))?;
            print!("{table}");
        }
        None => {
            eprint!("{table}");
            print!("{csv}");
        }
    }
    let _ = std::io::stdout().flush();
    Ok(())
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => {
            let args = args.with_config()?;
            if args.level_list.is_some() || args.nt_list.is_some() {
                return Err(CliError::Invalid("solve runs a single point; use converge for J-list/nt-list".into()));
            }
            let rows = run_all(&[args.base_config()])?;
            emit(&rows, args.out.as_deref())
        }
        Command::Converge(args) => {
            let args = args.with_config()?;
            let configs = args.sweep()?;
            let mut rows = run_all(&configs)?;
            let groups = vec![0; rows.len()];
            fill_rates(&mut rows, &groups);
            emit(&rows, args.out.as_deref())
        }
        Command::Table(t) => {
            let rows = table_rows(&t.id, t.scale)?;
            emit(&rows, t.out.as_deref())
        }
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines_and_overrides() {
        let base = parse_config("# t1 style\nalpha = 1.6\np_re = 3  # decay\nJ-list = 3, 4,5\nscheme = I-PI\n", "cfg").unwrap();
        assert_eq!(base.alpha, Some(1.6));
        assert_eq!(base.p_re, Some(3.0));
        assert_eq!(base.level_list, Some(vec![3, 4, 5]));
        let top = RunArgs { alpha: Some(1.2), ..Default::default() };
        let merged = overlay!(top, base; config, case, scheme, alpha, gamma, p_re, p_im, sigma, t_end, k, d, level,
            level_list, coarsest, nt, nt_list, mesh, grade, solver, precond, tol, restart, out);
        assert_eq!(merged.alpha, Some(1.2));
        assert_eq!(merged.scheme.unwrap().to_string(), "I-PI");
        assert!(parse_config("alpha 1.6", "cfg").is_err());
        assert!(parse_config("colour = red", "cfg").is_err());
    }

    #[test]
    fn sweeps_need_two_points() {
        let one = RunArgs { nt_list: Some(vec![40]), ..Default::default() };
        let err = one.sweep().unwrap_err();
        assert!(err.to_string().contains("need ≥ 2 points"));
        let paired = RunArgs { level_list: Some(vec![3, 4]), nt_list: Some(vec![64, 256]), ..Default::default() };
        let pts = paired.sweep().unwrap();
        assert_eq!((pts[1].level, pts[1].steps), (4, 256));
        let unsorted = RunArgs { nt_list: Some(vec![80, 40]), ..Default::default() };
        assert!(unsorted.sweep().is_err());
    }

    #[test]
    fn invalid_alpha_exits_with_two() {
        let cfg = RunConfig { alpha: 2.5, ..Default::default() };
        let err = cfg.run().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("1 < alpha <= 2"));
    }
}
