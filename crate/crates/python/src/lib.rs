//! Python bindings: rate pairs and windows as classes, everything else as
//! functions returning floats, dicts of columns or small result classes.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use twoatom_cli::checks::run_checks;
use twoatom_cli::params::{WavefunctionCheck, WavefunctionParams};
use twoatom_core::analytic::{self, Channel};
use twoatom_core::estimation::{self, PreferredModel};
use twoatom_core::{kinetics, montecarlo, Error, WindowMode, WindowVariant};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::SolverNonConvergence { .. }
        | Error::IntegrationBlowup { .. }
        | Error::Io(_)
        | Error::Json(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

#[pyclass(frozen, skip_from_py_object, name = "RatePair", module = "twoatom")]
#[derive(Clone, Copy)]
struct PyRatePair(twoatom_core::RatePair);

#[pymethods]
impl PyRatePair {
    #[new]
    fn new(gamma_a: f64, gamma_b: f64) -> PyResult<Self> {
        Ok(Self(twoatom_core::RatePair::new(gamma_a, gamma_b).map_err(to_py)?))
    }

    #[getter]
    fn gamma_a(&self) -> f64 {
        self.0.gamma_a()
    }

    #[getter]
    fn gamma_b(&self) -> f64 {
        self.0.gamma_b()
    }

    /// `gamma_a + gamma_b`
    #[getter]
    fn gamma_f(&self) -> f64 {
        self.0.gamma_f()
    }

    fn swapped(&self) -> Self {
        Self(self.0.swapped())
    }

    fn __repr__(&self) -> String {
        format!("RatePair(gamma_a={}, gamma_b={})", self.0.gamma_a(), self.0.gamma_b())
    }
}

#[pyclass(frozen, skip_from_py_object, name = "WindowConfig", module = "twoatom")]
#[derive(Clone, Copy)]
struct PyWindowConfig(twoatom_core::WindowConfig);

#[pymethods]
impl PyWindowConfig {
    /// `mode` is "grid-bin" or "pairwise".
    #[new]
    #[pyo3(signature = (tau, mode = "grid-bin"))]
    fn new(tau: f64, mode: &str) -> PyResult<Self> {
        let mode: WindowMode = parse(mode)?;
        Ok(Self(twoatom_core::WindowConfig::new(tau, mode).map_err(to_py)?))
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.0.tau()
    }

    #[getter]
    fn mode(&self) -> String {
        self.0.mode().to_string()
    }

    fn __repr__(&self) -> String {
        format!("WindowConfig(tau={}, mode='{}')", self.0.tau(), self.0.mode())
    }
}

#[pyclass(frozen, get_all, name = "FitResult", module = "twoatom")]
struct PyFitResult {
    rate_estimate: f64,
    std_error: f64,
    log_likelihood: f64,
    n_samples: u64,
}

#[pymethods]
impl PyFitResult {
    fn __repr__(&self) -> String {
        format!(
            "FitResult(rate_estimate={}, std_error={}, n_samples={})",
            self.rate_estimate, self.std_error, self.n_samples
        )
    }
}

#[pyclass(frozen, get_all, name = "ModelComparison", module = "twoatom")]
struct PyModelComparison {
    ll_entangled: f64,
    ll_product: f64,
    /// "entangled" or "product"
    preferred: String,
    log_likelihood_ratio: f64,
}

#[pymethods]
impl PyModelComparison {
    fn __repr__(&self) -> String {
        format!(
            "ModelComparison(preferred='{}', log_likelihood_ratio={})",
            self.preferred, self.log_likelihood_ratio
        )
    }
}

#[pyfunction]
fn first_emission_rate(rates: &PyRatePair) -> f64 {
    analytic::first_emission_rate(&rates.0)
}

/// Returns `(channel_a, channel_b, gamma_f)`.
#[pyfunction]
fn solve_compatibility(rates: &PyRatePair) -> PyResult<(f64, f64, f64)> {
    let s = analytic::solve_compatibility(&rates.0).map_err(to_py)?;
    Ok((s.channels.channel_a, s.channels.channel_b, s.channels.gamma_f))
}

#[pyfunction]
fn first_emission_cdf_entangled(t: f64, rates: &PyRatePair) -> PyResult<f64> {
    analytic::first_emission_cdf_entangled(t, &rates.0).map_err(to_py)
}

#[pyfunction]
fn entangled_survival(t: f64, rates: &PyRatePair) -> PyResult<f64> {
    analytic::entangled_survival(t, &rates.0).map_err(to_py)
}

#[pyfunction]
fn single_type_cdf(t: f64, gamma: f64) -> PyResult<f64> {
    analytic::single_type_cdf(t, gamma).map_err(to_py)
}

/// `channel` is "A" or "B".
#[pyfunction]
fn intermediate_population(t: f64, rates: &PyRatePair, channel: &str) -> PyResult<f64> {
    let which: Channel = parse(channel)?;
    analytic::intermediate_population(t, &rates.0, which).map_err(to_py)
}

#[pyfunction]
fn second_emission_cdf(t: f64, rates: &PyRatePair) -> PyResult<f64> {
    analytic::second_emission_cdf(t, &rates.0).map_err(to_py)
}

fn model(
    rates: &PyRatePair,
    window: &PyWindowConfig,
    variant: &str,
) -> PyResult<twoatom_core::NormalizedWindowModel> {
    let variant: WindowVariant = parse(variant)?;
    twoatom_core::NormalizedWindowModel::new(&rates.0, &window.0, variant).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (rates, window, variant = "taylor"))]
fn normalization_alpha(rates: &PyRatePair, window: &PyWindowConfig, variant: &str) -> PyResult<f64> {
    Ok(model(rates, window, variant)?.alpha)
}

#[pyfunction]
#[pyo3(signature = (t, rates, window, variant = "taylor"))]
fn product_first_pdf(t: f64, rates: &PyRatePair, window: &PyWindowConfig, variant: &str) -> PyResult<f64> {
    analytic::product_first_pdf(t, &model(rates, window, variant)?).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (t, rates, window, variant = "taylor"))]
fn product_first_cdf(t: f64, rates: &PyRatePair, window: &PyWindowConfig, variant: &str) -> PyResult<f64> {
    analytic::product_first_cdf(t, &model(rates, window, variant)?).map_err(to_py)
}

#[pyfunction]
fn coincidence_probability(rates: &PyRatePair, window: &PyWindowConfig) -> f64 {
    analytic::coincidence_probability(&rates.0, &window.0)
}

/// Simulates `n_pairs` pairs of `kind` ("entangled" or "product"). Returns a
/// dict of record columns plus a `summary` dict. With `postselect=True` only
/// pairs outside the coincidence window are returned.
#[pyfunction]
#[pyo3(signature = (rates, kind, n_pairs, window, seed, workers = 1, postselect = false))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    rates: &PyRatePair,
    kind: &str,
    n_pairs: u64,
    window: &PyWindowConfig,
    seed: u64,
    workers: usize,
    postselect: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let kind = parse(kind)?;
    let cfg = twoatom_core::SimConfig::new(n_pairs, rates.0, kind, window.0, seed).map_err(to_py)?;
    let w = window.0;
    let (records, summary) = py.detach(move || -> twoatom_core::Result<_> {
        let all = montecarlo::simulate(&cfg, workers)?;
        let (kept, summary) = montecarlo::postselect(&all, &w);
        Ok((if postselect { kept } else { all }, summary))
    })
    .map_err(to_py)?;

    let out = PyDict::new(py);
    out.set_item("pair_id", records.iter().map(|r| r.pair_id).collect::<Vec<_>>())?;
    out.set_item("t_first", records.iter().map(|r| r.t_first).collect::<Vec<_>>())?;
    out.set_item(
        "channel_first",
        records.iter().map(|r| r.channel_first.as_str()).collect::<Vec<_>>(),
    )?;
    out.set_item("t_second", records.iter().map(|r| r.t_second).collect::<Vec<_>>())?;
    out.set_item(
        "channel_second",
        records.iter().map(|r| r.channel_second.as_str()).collect::<Vec<_>>(),
    )?;
    let s = PyDict::new(py);
    s.set_item("kept", summary.kept)?;
    s.set_item("discarded", summary.discarded)?;
    s.set_item("empirical_coincidence_rate", summary.empirical_coincidence_rate)?;
    let (fa, fb) = montecarlo::channel_fractions(&records);
    s.set_item("channel_a_fraction", fa)?;
    s.set_item("channel_b_fraction", fb)?;
    out.set_item("summary", s)?;
    Ok(out)
}

#[pyfunction]
fn mle_exponential(times: Vec<f64>) -> PyResult<PyFitResult> {
    let f = estimation::mle_exponential(&times).map_err(to_py)?;
    Ok(PyFitResult {
        rate_estimate: f.rate_estimate,
        std_error: f.std_error,
        log_likelihood: f.log_likelihood,
        n_samples: f.n_samples,
    })
}

/// KS distance of `times` to the exponential law with `rate`.
#[pyfunction]
fn ks_distance_exponential(times: Vec<f64>, rate: f64) -> PyResult<f64> {
    estimation::ks_distance(&times, |t| -(-rate * t).exp_m1()).map_err(to_py)
}

/// KS distance of `times` to the post-selected product-state law.
#[pyfunction]
#[pyo3(signature = (times, rates, window, variant = "taylor"))]
fn ks_distance_product(
    times: Vec<f64>,
    rates: &PyRatePair,
    window: &PyWindowConfig,
    variant: &str,
) -> PyResult<f64> {
    let m = model(rates, window, variant)?;
    estimation::ks_distance(&times, |t| m.cdf(t)).map_err(to_py)
}

#[pyfunction]
fn ks_critical_value(n: usize, significance: f64) -> f64 {
    estimation::ks_critical_value(n, significance)
}

#[pyfunction]
#[pyo3(signature = (times, rates, window, variant = "taylor"))]
fn discriminate(
    times: Vec<f64>,
    rates: &PyRatePair,
    window: &PyWindowConfig,
    variant: &str,
) -> PyResult<PyModelComparison> {
    let variant: WindowVariant = parse(variant)?;
    let c = estimation::discriminate(&times, &rates.0, &window.0, variant).map_err(to_py)?;
    Ok(PyModelComparison {
        ll_entangled: c.ll_entangled,
        ll_product: c.ll_product,
        preferred: match c.preferred {
            PreferredModel::Entangled => "entangled",
            PreferredModel::Product => "product",
        }
        .to_string(),
        log_likelihood_ratio: c.log_likelihood_ratio,
    })
}

/// RK4 trajectory as a dict of columns `t, n_e, n_a, n_b, cap_n_a, cap_n_b, cap_n_f`.
#[pyfunction]
#[pyo3(signature = (rates, step = 1e-3, t_end = 4.0, n0 = 1.0))]
fn integrate_kinetics<'py>(
    py: Python<'py>,
    rates: &PyRatePair,
    step: f64,
    t_end: f64,
    n0: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = twoatom_core::IntegratorConfig::new(step, t_end, n0).map_err(to_py)?;
    let states = kinetics::integrate(&twoatom_core::KineticsState::initial(n0), &rates.0, &cfg)
        .map_err(to_py)?;
    let out = PyDict::new(py);
    let col = |f: fn(&twoatom_core::KineticsState) -> f64| states.iter().map(f).collect::<Vec<_>>();
    out.set_item("t", col(|s| s.t))?;
    out.set_item("n_e", col(|s| s.n_e))?;
    out.set_item("n_a", col(|s| s.n_a))?;
    out.set_item("n_b", col(|s| s.n_b))?;
    out.set_item("cap_n_a", col(|s| s.cap_n_a))?;
    out.set_item("cap_n_b", col(|s| s.cap_n_b))?;
    out.set_item("cap_n_f", col(|s| s.cap_n_f))?;
    Ok(out)
}

/// Runs a wavefunction check ("all", "swap-overlap", ...) and returns
/// `{"pass": bool, "checks": [{"check", "pass", "metrics", "message"}]}`.
#[pyfunction]
#[pyo3(signature = (check = "all", n = 256, x_min = -20.0, x_max = 20.0, t = 1.0))]
fn wavefunction_checks<'py>(
    py: Python<'py>,
    check: &str,
    n: usize,
    x_min: f64,
    x_max: f64,
    t: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let check: WavefunctionCheck = check.parse().map_err(PyValueError::new_err)?;
    let params = WavefunctionParams {
        check,
        n,
        x_min,
        x_max,
        t,
        out: Default::default(),
    };
    let report = run_checks(&params).map_err(|e| PyValueError::new_err(e.message))?;
    let out = PyDict::new(py);
    out.set_item("pass", report.pass)?;
    let mut checks = Vec::new();
    for c in &report.checks {
        let d = PyDict::new(py);
        d.set_item("check", c.check.as_str())?;
        d.set_item("pass", c.pass)?;
        d.set_item("metrics", c.metrics.clone())?;
        d.set_item("message", c.message.clone())?;
        checks.push(d);
    }
    out.set_item("checks", checks)?;
    Ok(out)
}

#[pymodule]
fn twoatom(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRatePair>()?;
    m.add_class::<PyWindowConfig>()?;
    m.add_class::<PyFitResult>()?;
    m.add_class::<PyModelComparison>()?;
    m.add_function(wrap_pyfunction!(first_emission_rate, m)?)?;
    m.add_function(wrap_pyfunction!(solve_compatibility, m)?)?;
    m.add_function(wrap_pyfunction!(first_emission_cdf_entangled, m)?)?;
    m.add_function(wrap_pyfunction!(entangled_survival, m)?)?;
    m.add_function(wrap_pyfunction!(single_type_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(intermediate_population, m)?)?;
    m.add_function(wrap_pyfunction!(second_emission_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(normalization_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(product_first_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(product_first_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(coincidence_probability, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(mle_exponential, m)?)?;
    m.add_function(wrap_pyfunction!(ks_distance_exponential, m)?)?;
    m.add_function(wrap_pyfunction!(ks_distance_product, m)?)?;
    m.add_function(wrap_pyfunction!(ks_critical_value, m)?)?;
    m.add_function(wrap_pyfunction!(discriminate, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_kinetics, m)?)?;
    m.add_function(wrap_pyfunction!(wavefunction_checks, m)?)?;
    Ok(())
}
