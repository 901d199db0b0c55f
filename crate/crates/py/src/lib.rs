//! Python bindings: a thin façade over the core crate exposing exact
//! expansion, digit scans, partition summaries, transfer spectra, and
//! ensemble statistics. Integers cross the boundary as omega-basis
//! coordinate pairs.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use hurwitz_core::cf::{self, CostFunction};
use hurwitz_core::geometry::{build_cells_with_n0, generate_W, verify_markov};
use hurwitz_core::ring::{self, FieldConfig, QuadInt, QuadRat};
use hurwitz_core::stats::{self, OmegaSpec};
use hurwitz_core::transfer;
use hurwitz_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidField(_) | Error::InvalidArgument(_) | Error::Parse(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn field(d: u8) -> PyResult<&'static FieldConfig> {
    FieldConfig::new(d).map_err(py_err)
}

fn coord(x: &QuadInt) -> PyResult<(i64, i64)> {
    let a = i64::try_from(&x.a)
        .map_err(|_| PyRuntimeError::new_err("coordinate exceeds i64"))?;
    let b = i64::try_from(&x.b)
        .map_err(|_| PyRuntimeError::new_err("coordinate exceeds i64"))?;
    Ok((a, b))
}

/// One exact expansion: digit coordinates, length, and the two standard
/// cost totals.
#[pyclass(frozen)]
pub struct Expansion {
    #[pyo3(get)]
    pub digits: Vec<(i64, i64)>,
    #[pyo3(get)]
    pub length: usize,
    #[pyo3(get)]
    pub cost_len: f64,
    #[pyo3(get)]
    pub cost_logabs: f64,
}

/// Expand (num_a + num_b*w) / (den_a + den_b*w) over O_d.
#[pyfunction]
fn expand(d: u8, num: (i64, i64), den: (i64, i64)) -> PyResult<Expansion> {
    let cfg = field(d)?;
    let z = QuadRat::new(
        QuadInt::from_i64(d, num.0, num.1),
        QuadInt::from_i64(d, den.0, den.1),
    )
    .map_err(py_err)?;
    let mut e = cf::expand(&z, cfg).map_err(py_err)?;
    let cost_len = e.cost(&CostFunction::ConstantOne);
    let cost_logabs = e.cost(&CostFunction::LogAbs);
    Ok(Expansion {
        digits: e.digits.iter().map(coord).collect::<PyResult<_>>()?,
        length: e.length(),
        cost_len,
        cost_logabs,
    })
}

/// Field norm of a + b*w.
#[pyfunction]
fn qnorm(d: u8, a: i64, b: i64) -> PyResult<i64> {
    field(d)?;
    let x = QuadInt::from_i64(d, a, b);
    i64::try_from(&x.qnorm()).map_err(|_| PyRuntimeError::new_err("norm exceeds i64"))
}

/// Unit group of O_d as coordinate pairs.
#[pyfunction]
fn units(d: u8) -> PyResult<Vec<(i64, i64)>> {
    let cfg = field(d)?;
    cfg.units.iter().map(coord).collect()
}

/// Nearest lattice point to num/den under the strict-domain tie rule.
#[pyfunction]
fn round_nearest(d: u8, num: (i64, i64), den: (i64, i64)) -> PyResult<(i64, i64)> {
    let cfg = field(d)?;
    let z = QuadRat::new(
        QuadInt::from_i64(d, num.0, num.1),
        QuadInt::from_i64(d, den.0, den.1),
    )
    .map_err(py_err)?;
    let alpha = ring::round_nearest(&z, cfg).map_err(py_err)?;
    coord(&alpha)
}

/// Digits with certified-empty branch domains, up to the norm bound.
#[pyfunction]
fn empty_digits(d: u8, norm_bound: i64) -> PyResult<Vec<(i64, i64)>> {
    let cfg = field(d)?;
    let out = cf::empty_digit_scan(cfg, norm_bound).map_err(py_err)?;
    out.iter().map(coord).collect()
}

/// Curve family size, stabilization depth, and cell counts by dimension.
#[pyclass(frozen)]
pub struct PartitionSummary {
    #[pyo3(get)]
    pub curves: usize,
    #[pyo3(get)]
    pub n0: usize,
    #[pyo3(get)]
    pub two_cells: usize,
    #[pyo3(get)]
    pub one_cells: usize,
    #[pyo3(get)]
    pub zero_cells: usize,
}

#[pyfunction]
#[pyo3(signature = (d, resolution = 256))]
fn partition_summary(d: u8, resolution: usize) -> PyResult<PartitionSummary> {
    let cfg = field(d)?;
    let (curves, n0) = generate_W(cfg, 16).map_err(py_err)?;
    let complex = build_cells_with_n0(&curves, cfg, resolution, n0).map_err(py_err)?;
    let count = |dim: u8| complex.cells.iter().filter(|c| c.dim == dim).count();
    Ok(PartitionSummary {
        curves: complex.curves.len(),
        n0: complex.n0,
        two_cells: count(2),
        one_cells: count(1),
        zero_cells: count(0),
    })
}

/// Sampled Markov-property check; returns (triples_tested, violations).
#[pyfunction]
#[pyo3(signature = (d, digit_norm_bound = 100, samples = 10_000, seed = 0, resolution = 256))]
fn markov_check(
    d: u8,
    digit_norm_bound: i64,
    samples: u64,
    seed: u64,
    resolution: usize,
) -> PyResult<(u64, usize)> {
    let cfg = field(d)?;
    let (curves, n0) = generate_W(cfg, 16).map_err(py_err)?;
    let complex = build_cells_with_n0(&curves, cfg, resolution, n0).map_err(py_err)?;
    let rep = verify_markov(&complex, cfg, digit_norm_bound, samples, seed).map_err(py_err)?;
    Ok((rep.triples_tested, rep.total_violations()))
}

/// Leading eigendata of the Ulam operator at (sigma, u) = (1, 0).
#[pyclass(frozen)]
pub struct Spectrum {
    #[pyo3(get)]
    pub lambda_: f64,
    #[pyo3(get)]
    pub residual: f64,
    #[pyo3(get)]
    pub tail: f64,
    #[pyo3(get)]
    pub lyapunov: f64,
}

#[pyfunction]
#[pyo3(signature = (d, m = 64, a_max = 800))]
fn spectrum(d: u8, m: usize, a_max: i64) -> PyResult<Spectrum> {
    let cfg = field(d)?;
    let op = transfer::assemble(cfg, m, a_max, 1.0, 0.0, &CostFunction::ConstantOne)
        .map_err(py_err)?;
    let res = transfer::dominant_eigen(&op, 1e-9).map_err(py_err)?;
    let lyapunov = transfer::lyapunov_integral(&op, &res);
    Ok(Spectrum {
        lambda_: res.lambda,
        residual: res.residual,
        tail: res.truncation_tail,
        lyapunov,
    })
}

/// |Sigma_n|: reduced fractions of squared height exactly n.
#[pyfunction]
fn sigma_count(d: u8, n: i64) -> PyResult<usize> {
    let cfg = field(d)?;
    Ok(stats::enumerate_sigma(cfg, n).map_err(py_err)?.len())
}

/// Length-cost statistics of Omega_N: (count, mean, variance, ks).
#[pyfunction]
fn length_stats(d: u8, n_max: i64) -> PyResult<(u64, f64, f64, f64)> {
    let spec = OmegaSpec::new(d, n_max).map_err(py_err)?;
    let hist = stats::length_histogram(&spec).map_err(py_err)?;
    let count = hist.count(n_max);
    let (mean, var) = hist.mean_variance(n_max).map_err(py_err)?;
    let ks = hist.ks_at(n_max).map_err(py_err)?;
    Ok((count, mean, var, ks))
}

#[pymodule]
fn hurwitz_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Expansion>()?;
    m.add_class::<PartitionSummary>()?;
    m.add_class::<Spectrum>()?;
    m.add_function(wrap_pyfunction!(expand, m)?)?;
    m.add_function(wrap_pyfunction!(qnorm, m)?)?;
    m.add_function(wrap_pyfunction!(units, m)?)?;
    m.add_function(wrap_pyfunction!(round_nearest, m)?)?;
    m.add_function(wrap_pyfunction!(empty_digits, m)?)?;
    m.add_function(wrap_pyfunction!(partition_summary, m)?)?;
    m.add_function(wrap_pyfunction!(markov_check, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_count, m)?)?;
    m.add_function(wrap_pyfunction!(length_stats, m)?)?;
    Ok(())
}
