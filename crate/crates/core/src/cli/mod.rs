//! Command-line front end: config loading, experiments and CSV export.

pub mod config;
pub mod csv;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::density::{empirical_moment, estimate_density, ks_distance, Grid};
use crate::error::Error;
use crate::fpe::{second_moment, solve_fpe, FpeState};
use crate::kernels::kernel_table;
use crate::paths::{run_monte_carlo, SampleMatrix};

pub use config::{load_config, parse_config, Experiment, ExperimentConfig, Violation, Violations};
use csv::{fmt_f64, fmt_time, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot access {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("acceptance threshold breached: {0}")]
    Threshold(String),
}

impl From<Violations> for CliError {
    fn from(v: Violations) -> Self {
        CliError::Core(v.into())
    }
}

impl CliError {
    /// 1 I/O, 2 configuration or contract, 3 numerical, 4 threshold breach.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(..) => 1,
            CliError::Threshold(_) => 4,
            CliError::Core(e) => match e {
                Error::Configuration(_)
                | Error::Contract(_)
                | Error::Domain(_)
                | Error::Syntax(_)
                | Error::Unsupported(_) => 2,
                Error::NumericalFailure(_)
                | Error::PathFailure { .. }
                | Error::TooManyPathFailures { .. }
                | Error::Integrity(_)
                | Error::Resource(_)
                | Error::Range(_) => 3,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "subdiff", version, about = "Subdiffusive jump processes: Monte Carlo and fractional Fokker–Planck solvers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for Monte Carlo. Never changes any output byte.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo samples, densities and moments.
    Simulate,
    /// Grid solution of the fractional Fokker–Planck equation.
    SolveFpe,
    /// Distances between Monte Carlo and grid solutions.
    Compare {
        /// Compare two density CSV files instead of running the config.
        #[arg(long, requires = "fpe")]
        mc: Option<PathBuf>,
        #[arg(long, requires = "mc")]
        fpe: Option<PathBuf>,
        /// L1 threshold; a breach exits with code 4.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Memory kernel M(t) and tail G(t) on the time grid.
    KernelTable,
    /// Cartesian parameter sweep, one report row per cell and time.
    Sweep,
}

fn experiment(common: &Common) -> Result<Experiment, CliError> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| CliError::Core(Error::Configuration("--config is required".into())))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = common.seed {
        cfg.monte_carlo.seed = seed;
    }
    Ok(cfg.resolve()?)
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.display().to_string(), e))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let common = cli.common;
    ensure_dir(&common.out)?;
    match cli.command {
        Command::Simulate => cmd_simulate(&experiment(&common)?, &common.out, common.threads),
        Command::SolveFpe => cmd_solve(&experiment(&common)?, &common.out).map(|_| ()),
        Command::Compare { mc: Some(mc), fpe: Some(fpe), threshold } => {
            cmd_compare_files(&mc, &fpe, threshold, &common.out)
        }
        Command::Compare { threshold, .. } => {
            cmd_compare(&experiment(&common)?, &common.out, common.threads, threshold)
        }
        Command::KernelTable => cmd_kernel_table(&experiment(&common)?, &common.out),
        Command::Sweep => {
            let path = common
                .config
                .as_ref()
                .ok_or_else(|| CliError::Core(Error::Configuration("--config is required".into())))?;
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
            cmd_sweep(&text, common.seed, &common.out, common.threads)
        }
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn monte_carlo(exp: &Experiment, threads: Option<usize>) -> Result<SampleMatrix, CliError> {
    let model = exp.sde_model()?;
    let mc = run_monte_carlo(&model, &exp.times, exp.paths(), exp.config.monte_carlo.seed, threads)?;
    if mc.failed > 0 {
        eprintln!(
            "warning: {} of {} paths failed and were dropped; first: {}",
            mc.failed,
            exp.paths(),
            mc.first_failure.as_deref().unwrap_or("")
        );
    }
    Ok(mc)
}

pub fn cmd_simulate(exp: &Experiment, out: &Path, threads: Option<usize>) -> Result<(), CliError> {
    let mc = monte_carlo(exp, threads)?;
    let cfg = exp.config.canonical_json();

    let mut cols = vec!["row".to_string()];
    cols.extend(exp.times.iter().map(|t| format!("X({})", fmt_time(*t))));
    let mut samples = Table::new(cols);
    for p in 0..mc.n_paths {
        let mut row = vec![p.to_string()];
        row.extend(mc.row(p).iter().map(|v| fmt_f64(*v)));
        samples.push(row);
    }
    samples.write(&out.join("samples.csv"), &cfg)?;

    let mut moments = Table::new([
        "t",
        "mean",
        "mean_se",
        "second_moment",
        "second_moment_se",
        "n_paths",
        "failed",
        "out_of_range_mass",
    ]);
    for (k, &t) in exp.times.iter().enumerate() {
        let xs = mc.column(k);
        let d = estimate_density(&xs, &exp.grid, exp.estimator)?;
        let mut table = Table::new(["x", "density", "std_error"]);
        let se = d.std_errors.clone().unwrap_or_else(|| vec![f64::NAN; d.values.len()]);
        for i in 0..exp.grid.len() {
            table.push_floats(&[exp.grid.x(i), d.values[i], se[i]]);
        }
        table.write(&out.join(format!("density_t{}.csv", fmt_time(t))), &cfg)?;
        let (m1, s1) = empirical_moment(&xs, 1)?;
        let (m2, s2) = empirical_moment(&xs, 2)?;
        moments.push(vec![
            fmt_f64(t),
            fmt_f64(m1),
            fmt_f64(s1),
            fmt_f64(m2),
            fmt_f64(s2),
            mc.n_paths.to_string(),
            mc.failed.to_string(),
            fmt_f64(d.out_of_range_mass),
        ]);
    }
    moments.write(&out.join("moments.csv"), &cfg)
}

pub fn cmd_solve(exp: &Experiment, out: &Path) -> Result<FpeState, CliError> {
    let state = solve_fpe(exp.operator()?, &exp.subordinator, &exp.grid, &exp.settings)?;
    if state.truncation_warning {
        eprintln!("warning: the derivative series may not have converged at the chosen K");
    }
    let cfg = exp.config.canonical_json();
    for &t in &exp.times {
        let q = state.at(t)?;
        let mut table = Table::new(["x", "density"]);
        for (i, v) in q.iter().enumerate() {
            table.push_floats(&[exp.grid.x(i), *v]);
        }
        table.write(&out.join(format!("fpe_t{}.csv", fmt_time(t))), &cfg)?;
    }
    let mut ledger = Table::new(["step", "t", "interior_mass", "outflow", "total"]);
    for e in &state.ledger {
        ledger.push(vec![
            e.step.to_string(),
            fmt_f64(e.t),
            fmt_f64(e.interior_mass),
            fmt_f64(e.outflow),
            fmt_f64(e.interior_mass + e.outflow),
        ]);
    }
    ledger.write(&out.join("mass_ledger.csv"), &cfg)?;
    Ok(state)
}

/// Distances between the Monte Carlo and grid solutions at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub t: f64,
    pub l1: f64,
    pub ks: f64,
    pub second_moment_mc: f64,
    pub second_moment_mc_se: f64,
    pub second_moment_fpe: f64,
}

const REPORT_COLUMNS: [&str; 8] = [
    "t",
    "l1",
    "ks",
    "second_moment_mc",
    "second_moment_mc_se",
    "second_moment_fpe",
    "second_moment_gap",
    "pass",
];

fn report_row(r: &ComparisonRow, threshold: Option<f64>) -> Vec<String> {
    let pass = threshold.is_none_or(|th| r.l1 <= th);
    vec![
        fmt_f64(r.t),
        fmt_f64(r.l1),
        fmt_f64(r.ks),
        fmt_f64(r.second_moment_mc),
        fmt_f64(r.second_moment_mc_se),
        fmt_f64(r.second_moment_fpe),
        fmt_f64(r.second_moment_mc - r.second_moment_fpe),
        pass.to_string(),
    ]
}

/// Runs both sides of an experiment and measures their gap.
pub fn compare_experiment(exp: &Experiment, threads: Option<usize>) -> Result<Vec<ComparisonRow>, CliError> {
    let state = solve_fpe(exp.operator()?, &exp.subordinator, &exp.grid, &exp.settings)?;
    let mc = monte_carlo(exp, threads)?;
    exp.times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let xs = mc.column(k);
            let d = estimate_density(&xs, &exp.grid, exp.estimator)?;
            let q = state.at(t)?;
            let (m2, se) = empirical_moment(&xs, 2)?;
            Ok(ComparisonRow {
                t,
                l1: crate::density::l1_distance_values(&exp.grid, &d.values, q)?,
                ks: ks_distance(&xs, &exp.grid, q)?,
                second_moment_mc: m2,
                second_moment_mc_se: se,
                second_moment_fpe: second_moment(&exp.grid, q),
            })
        })
        .collect()
}

fn check_threshold(rows: &[ComparisonRow], threshold: Option<f64>) -> Result<(), CliError> {
    if let Some(th) = threshold {
        if let Some(r) = rows.iter().find(|r| !(r.l1 <= th)) {
            return Err(CliError::Threshold(format!("L1 = {} at t = {} exceeds {th}", r.l1, r.t)));
        }
    }
    Ok(())
}

pub fn cmd_compare(
    exp: &Experiment,
    out: &Path,
    threads: Option<usize>,
    threshold: Option<f64>,
) -> Result<(), CliError> {
    let threshold = threshold.or(exp.config.compare.l1_threshold);
    let rows = compare_experiment(exp, threads)?;
    let mut table = Table::new(REPORT_COLUMNS);
    for r in &rows {
        table.push(report_row(r, threshold));
    }
    table.write(&out.join("report.csv"), &exp.config.canonical_json())?;
    check_threshold(&rows, threshold)
}

fn grid_of(x: &[f64]) -> Result<Grid, CliError> {
    if x.len() < 3 {
        return Err(Error::Contract("density file needs at least 3 grid points".into()).into());
    }
    let g = Grid::new(x[0], x[x.len() - 1], x.len())?;
    if x.iter().enumerate().any(|(i, v)| (v - g.x(i)).abs() > 1e-9 * g.dx()) {
        return Err(Error::Contract("density file is not on a uniform grid".into()).into());
    }
    Ok(g)
}

pub fn cmd_compare_files(mc: &Path, fpe: &Path, threshold: Option<f64>, out: &Path) -> Result<(), CliError> {
    let a = csv::read_density(mc)?;
    let b = csv::read_density(fpe)?;
    let ga = grid_of(&a.x)?;
    let gb = grid_of(&b.x)?;
    if ga != gb {
        return Err(Error::Contract(format!(
            "grids differ: {} has {} points on [{}, {}], {} has {} on [{}, {}]",
            mc.display(),
            ga.len(),
            ga.x_min(),
            ga.x_max(),
            fpe.display(),
            gb.len(),
            gb.x_min(),
            gb.x_max()
        ))
        .into());
    }
    let dx = ga.dx();
    let (mut ca, mut cb, mut ks) = (0.0, 0.0, 0.0f64);
    for (p, q) in a.density.iter().zip(&b.density) {
        ca += p * dx;
        cb += q * dx;
        ks = ks.max((ca - cb).abs());
    }
    let row = ComparisonRow {
        t: f64::NAN,
        l1: crate::density::l1_distance_values(&ga, &a.density, &b.density)?,
        ks,
        second_moment_mc: second_moment(&ga, &a.density),
        second_moment_mc_se: f64::NAN,
        second_moment_fpe: second_moment(&gb, &b.density),
    };
    let mut table = Table::new(REPORT_COLUMNS);
    table.push(report_row(&row, threshold));
    let inputs = serde_json::json!({ "mc": mc.display().to_string(), "fpe": fpe.display().to_string() });
    table.write(&out.join("report.csv"), &inputs.to_string())?;
    check_threshold(&[row], threshold)
}

pub fn cmd_kernel_table(exp: &Experiment, out: &Path) -> Result<(), CliError> {
    let dt = exp.settings.dt;
    let n = (exp.settings.t_end / dt).round() as usize;
    let times: Vec<f64> = (1..=n).map(|k| k as f64 * dt).collect();
    let rows = kernel_table(&exp.subordinator, &times)?;
    let mut table = Table::new(["t", "M", "G"]);
    for (t, m, g) in rows {
        table.push_floats(&[t, m, g]);
    }
    table.write(&out.join("kernel_table.csv"), &exp.config.canonical_json())
}

/// Every combination of the sweep axes, as `(key, value)` lists.
pub fn sweep_cells(axes: &[config::SweepAxis]) -> Vec<Vec<(String, f64)>> {
    let mut cells = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(cells.len() * axis.values.len());
        for cell in &cells {
            for &v in &axis.values {
                let mut c: Vec<(String, f64)> = cell.clone();
                c.push((axis.key.clone(), v));
                next.push(c);
            }
        }
        cells = next;
    }
    cells
}

pub fn cmd_sweep(text: &str, seed: Option<u64>, out: &Path, threads: Option<usize>) -> Result<(), CliError> {
    let mut base = ExperimentConfig::from_json(text)?;
    if let Some(s) = seed {
        base.monte_carlo.seed = s;
    }
    let base = base.canonicalize();
    let resolved = base.clone().resolve()?;
    if base.sweep.is_empty() {
        return Err(Error::Configuration("sweep needs at least one axis in the sweep section".into()).into());
    }
    let base_value = serde_json::to_value(&base).expect("config serializes");
    let mut cols: Vec<String> = base.sweep.iter().map(|a| a.key.clone()).collect();
    cols.extend(REPORT_COLUMNS.iter().map(|s| s.to_string()));
    let mut table = Table::new(cols);
    let threshold = resolved.config.compare.l1_threshold;
    for cell in sweep_cells(&base.sweep) {
        let mut v = base_value.clone();
        if let Some(obj) = v.as_object_mut() {
            obj.remove("sweep");
        }
        for (key, value) in &cell {
            config::set_dotted(&mut v, key, *value)?;
        }
        let exp = ExperimentConfig::from_value(v)?.resolve()?;
        for r in compare_experiment(&exp, threads)? {
            let mut row: Vec<String> = cell.iter().map(|(_, v)| fmt_f64(*v)).collect();
            row.extend(report_row(&r, threshold));
            table.push(row);
        }
    }
    table.write(&out.join("sweep.csv"), &base.canonical_json())
}
