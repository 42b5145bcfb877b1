//! Python bindings. Configs are passed as JSON strings in the same schema
//! the `subdiff` command line reads.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use subdiff::cli::{compare_experiment, parse_config, CliError};
use subdiff::kernels::MemoryKernel;
use subdiff::levy::SubordinatorSpec;
use subdiff::sampling::{stable_subordinator_increment, RandomStream};
use subdiff::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Configuration(_) | Error::Contract(_) | Error::Domain(_) | Error::Syntax(_) | Error::Unsupported(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn cli_to_py(e: CliError) -> PyErr {
    match e {
        CliError::Core(e) => to_py(e),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// `(x, [(t, q)])`.
type Solution = (Vec<f64>, Vec<(f64, Vec<f64>)>);
/// `(t, l1, ks, second_moment_mc, second_moment_mc_se, second_moment_fpe)`.
type ReportRow = (f64, f64, f64, f64, f64, f64);

fn subordinator(alpha: f64, lam: Option<f64>) -> Result<SubordinatorSpec, Error> {
    match lam {
        Some(l) => SubordinatorSpec::tempered(alpha, l),
        None => SubordinatorSpec::stable(alpha),
    }
}

/// Evaluates a coefficient expression in `x` and `t`.
#[pyfunction]
fn evaluate(expr: &str, x: f64, t: f64) -> PyResult<f64> {
    let e = subdiff::exprparse::parse(expr).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(subdiff::exprparse::eval(&e, x, t))
}

/// Memory kernel `M(t)`; tempered when `lam` is given.
#[pyfunction]
#[pyo3(signature = (alpha, t, lam=None))]
fn memory_kernel(alpha: f64, t: f64, lam: Option<f64>) -> PyResult<f64> {
    let spec = subordinator(alpha, lam).map_err(to_py)?;
    MemoryKernel::for_subordinator(&spec).eval(t).map_err(to_py)
}

/// `n` independent draws of `T_α(dt)`.
#[pyfunction]
fn stable_subordinator_samples(alpha: f64, dt: f64, n: usize, seed: u64) -> PyResult<Vec<f64>> {
    (0..n as u64)
        .map(|p| stable_subordinator_increment(alpha, dt, &mut RandomStream::new(seed, p)))
        .collect::<Result<_, _>>()
        .map_err(to_py)
}

/// `n` draws of the first-passage time `S(t)`.
#[pyfunction]
#[pyo3(signature = (alpha, t, n, seed, dgamma=1e-3, lam=None))]
fn inverse_subordinator_samples(
    alpha: f64,
    t: f64,
    n: usize,
    seed: u64,
    dgamma: f64,
    lam: Option<f64>,
) -> PyResult<Vec<f64>> {
    let spec = subordinator(alpha, lam).map_err(to_py)?;
    subdiff::paths::inverse_subordinator_samples(&spec, dgamma, t, n, seed, None).map_err(to_py)
}

/// Monte Carlo samples: `(times, rows)` with one row per path.
#[pyfunction]
#[pyo3(signature = (config, threads=None))]
fn simulate(config: &str, threads: Option<usize>) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let exp = parse_config(config).map_err(to_py)?;
    let model = exp.sde_model().map_err(to_py)?;
    let mc = subdiff::paths::run_monte_carlo(&model, &exp.times, exp.paths(), exp.config.monte_carlo.seed, threads)
        .map_err(to_py)?;
    let rows = (0..mc.n_paths).map(|p| mc.row(p).to_vec()).collect();
    Ok((exp.times.clone(), rows))
}

/// Grid solution: `(x, [(t, q)])` at each observation time.
#[pyfunction]
fn solve_fpe(config: &str) -> PyResult<Solution> {
    let exp = parse_config(config).map_err(to_py)?;
    let state = subdiff::fpe::solve_fpe(exp.operator().map_err(to_py)?, &exp.subordinator, &exp.grid, &exp.settings)
        .map_err(to_py)?;
    let mut out = Vec::with_capacity(exp.times.len());
    for &t in &exp.times {
        out.push((t, state.at(t).map_err(to_py)?.to_vec()));
    }
    Ok((exp.grid.points(), out))
}

/// `(t, l1, ks, second_moment_mc, second_moment_mc_se, second_moment_fpe)` per time.
#[pyfunction]
#[pyo3(signature = (config, threads=None))]
fn compare(config: &str, threads: Option<usize>) -> PyResult<Vec<ReportRow>> {
    let exp = parse_config(config).map_err(to_py)?;
    let rows = compare_experiment(&exp, threads).map_err(cli_to_py)?;
    Ok(rows
        .into_iter()
        .map(|r| (r.t, r.l1, r.ks, r.second_moment_mc, r.second_moment_mc_se, r.second_moment_fpe))
        .collect())
}

#[pymodule]
#[pyo3(name = "subdiff")]
fn subdiff_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(memory_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(stable_subordinator_samples, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_subordinator_samples, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(solve_fpe, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    Ok(())
}
