//! Python bindings. Estimators take a `Sample` or any sequence of floats and
//! return plain dicts; no-reply is reported as the string `"no_reply"`.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use ptrdp_core::estimators::{CheckMode, MomOptions, MOM_ETA_CONSTANT};
use ptrdp_core::sensitivity::breakdown_stat_median_with;
use ptrdp_core::simlab::audit::presets::{self, Preset};
use ptrdp_core::simlab::{run_coverage, CoverageConfig, DistributionSpec, EstimatorKind, EstimatorSetup};
use ptrdp_core::{
    BreakdownRule, Confidence, DpEstimateReport, MedianProfile, MomConfig, MomentProfile, NoiseSource, PrivacyBudget, Sample,
};

create_exception!(ptrdp, PreconditionError, PyValueError, "A calibration precondition does not hold.");

fn py_err(e: ptrdp_core::Error) -> PyErr {
    if e.is_precondition() {
        PreconditionError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

trait OrPy<T> {
    fn or_py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for ptrdp_core::Result<T> {
    fn or_py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn to_dict<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A dataset with its order statistics.
#[pyclass(name = "Sample", module = "ptrdp", frozen)]
struct PySample {
    inner: Sample,
}

#[pymethods]
impl PySample {
    #[new]
    fn new(values: Vec<f64>) -> PyResult<Self> {
        Ok(PySample {
            inner: Sample::new(values).or_py()?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Sample(n={})", self.inner.len())
    }

    /// Values in input order.
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn sorted(&self) -> Vec<f64> {
        self.inner.sorted().to_vec()
    }

    /// Rank of the left median, `floor(n/2)`.
    #[getter]
    fn ell(&self) -> usize {
        self.inner.ell()
    }

    /// 1-based order statistic.
    fn order_stat(&self, i: usize) -> Option<f64> {
        self.inner.order_stat(i)
    }
}

fn sample(data: &Bound<'_, PyAny>) -> PyResult<Sample> {
    if let Ok(s) = data.extract::<PyRef<'_, PySample>>() {
        return Ok(s.inner.clone());
    }
    let values: Vec<f64> = data.extract()?;
    Sample::new(values).or_py()
}

fn privacy(epsilon: f64, delta: f64, tau: f64) -> PyResult<(PrivacyBudget, Confidence)> {
    Ok((PrivacyBudget::new(epsilon, delta).or_py()?, Confidence::new(tau).or_py()?))
}

fn rule(name: &str) -> PyResult<BreakdownRule> {
    match name {
        "window" => Ok(BreakdownRule::Window),
        "endpoint" => Ok(BreakdownRule::Endpoint),
        other => Err(PyValueError::new_err(format!("rule must be \"window\" or \"endpoint\", got {other:?}"))),
    }
}

fn check_mode(name: &str) -> PyResult<CheckMode> {
    match name {
        "enforce" => Ok(CheckMode::Enforce),
        "report" => Ok(CheckMode::Report),
        other => Err(PyValueError::new_err(format!("moment_check must be \"enforce\" or \"report\", got {other:?}"))),
    }
}

#[derive(Serialize)]
struct Estimate<'a> {
    #[serde(flatten)]
    report: &'a DpEstimateReport,
    n: usize,
    seed: u64,
}

fn estimate<'py>(py: Python<'py>, report: DpEstimateReport, n: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &Estimate { report: &report, n, seed })
}

/// The threshold constant `C` shared by every calibration.
#[pyfunction]
fn compute_c(epsilon: f64, delta: f64, tau: f64) -> PyResult<f64> {
    let (b, c) = privacy(epsilon, delta, tau)?;
    Ok(ptrdp_core::compute_c(b, c))
}

#[pyfunction]
fn empirical_median(data: &Bound<'_, PyAny>) -> PyResult<f64> {
    ptrdp_core::empirical_median(&sample(data)?).or_py()
}

/// Smallest number of changed points that can move the left median by more than `eta`.
#[pyfunction]
#[pyo3(signature = (data, eta, rule="window"))]
fn breakdown_stat(data: &Bound<'_, PyAny>, eta: f64, rule: &str) -> PyResult<usize> {
    let r = self::rule(rule)?;
    Ok(breakdown_stat_median_with(&sample(data)?, eta, r).k_star)
}

/// Brute force over all replacement subsets, for `n <= 12`.
#[pyfunction]
fn breakdown_stat_oracle(data: &Bound<'_, PyAny>, eta: f64) -> PyResult<usize> {
    Ok(ptrdp_core::breakdown_stat_oracle(&sample(data)?, eta).or_py()?.k_star)
}

#[pyfunction]
#[pyo3(signature = (n, r, L, epsilon, delta, tau))]
#[allow(non_snake_case)]
fn median_eta(n: usize, r: f64, L: f64, epsilon: f64, delta: f64, tau: f64) -> PyResult<f64> {
    let (b, c) = privacy(epsilon, delta, tau)?;
    ptrdp_core::median_eta(MedianProfile::new(r, L).or_py()?, n, b, c).or_py()
}

#[pyfunction]
#[pyo3(signature = (n, K, sigma, rho, epsilon, delta, tau))]
#[allow(non_snake_case)]
fn mom_eta(n: usize, K: usize, sigma: f64, rho: f64, epsilon: f64, delta: f64, tau: f64) -> PyResult<f64> {
    let (b, c) = privacy(epsilon, delta, tau)?;
    ptrdp_core::mom_eta(MomentProfile::new(0.0, sigma, rho).or_py()?, n, K, b, c).or_py()
}

#[pyfunction]
#[pyo3(signature = (n, K, sigma, rho, epsilon, delta, tau))]
#[allow(non_snake_case)]
fn mom_density_eta(n: usize, K: usize, sigma: f64, rho: f64, epsilon: f64, delta: f64, tau: f64) -> PyResult<f64> {
    let (b, c) = privacy(epsilon, delta, tau)?;
    ptrdp_core::mom_density_eta(MomentProfile::new(0.0, sigma, rho).or_py()?, n, K, b, c).or_py()
}

#[pyfunction]
#[pyo3(signature = (data, K))]
#[allow(non_snake_case)]
fn block_means(data: &Bound<'_, PyAny>, K: usize) -> PyResult<Vec<f64>> {
    let s = sample(data)?;
    ptrdp_core::block_means(&s, &MomConfig::new(K, s.len()).or_py()?).or_py()
}

#[pyfunction]
#[pyo3(signature = (data, K))]
#[allow(non_snake_case)]
fn mom_point_estimate(data: &Bound<'_, PyAny>, K: usize) -> PyResult<f64> {
    let s = sample(data)?;
    ptrdp_core::mom_point_estimate(&s, &MomConfig::new(K, s.len()).or_py()?).or_py()
}

/// Private left median. A fresh seed is drawn when none is given.
#[pyfunction]
#[pyo3(signature = (data, r, L, epsilon, delta, tau, seed=None))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn dp_median<'py>(
    py: Python<'py>,
    data: &Bound<'py, PyAny>,
    r: f64,
    L: f64,
    epsilon: f64,
    delta: f64,
    tau: f64,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let (b, c) = privacy(epsilon, delta, tau)?;
    let profile = MedianProfile::new(r, L).or_py()?;
    let s = sample(data)?;
    let seed = seed.unwrap_or_else(rand::random);
    let report = py.detach(|| ptrdp_core::dp_median(&s, profile, b, c, &mut NoiseSource::new(seed, 0))).or_py()?;
    estimate(py, report, s.len(), seed)
}

#[allow(non_snake_case, clippy::too_many_arguments)]
fn mom_common<'py>(
    py: Python<'py>,
    density: bool,
    data: &Bound<'py, PyAny>,
    sigma: f64,
    rho: f64,
    K: usize,
    epsilon: f64,
    delta: f64,
    tau: f64,
    seed: Option<u64>,
    eta_constant: f64,
    moment_check: &str,
    shuffle_seed: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let (b, c) = privacy(epsilon, delta, tau)?;
    let profile = MomentProfile::new(0.0, sigma, rho).or_py()?;
    let opts = MomOptions {
        eta_constant,
        shuffle_seed,
        moment_condition: check_mode(moment_check)?,
    };
    let s = sample(data)?;
    let seed = seed.unwrap_or_else(rand::random);
    let report = py
        .detach(|| {
            let mut noise = NoiseSource::new(seed, 0);
            if density {
                ptrdp_core::dp_mom_density(&s, profile, K, b, c, &opts, &mut noise)
            } else {
                ptrdp_core::dp_mom(&s, profile, K, b, c, &opts, &mut noise)
            }
        })
        .or_py()?;
    estimate(py, report, s.len(), seed)
}

/// Private median of means under three finite moments.
#[pyfunction]
#[pyo3(signature = (data, sigma, rho, K, epsilon, delta, tau, seed=None, eta_constant=MOM_ETA_CONSTANT, moment_check="enforce", shuffle_seed=None))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn dp_mom<'py>(
    py: Python<'py>,
    data: &Bound<'py, PyAny>,
    sigma: f64,
    rho: f64,
    K: usize,
    epsilon: f64,
    delta: f64,
    tau: f64,
    seed: Option<u64>,
    eta_constant: f64,
    moment_check: &str,
    shuffle_seed: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    mom_common(py, false, data, sigma, rho, K, epsilon, delta, tau, seed, eta_constant, moment_check, shuffle_seed)
}

/// Private median of means for data with a density; `n` must be a multiple of `K`.
#[pyfunction]
#[pyo3(signature = (data, sigma, rho, K, epsilon, delta, tau, seed=None, moment_check="enforce", shuffle_seed=None))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn dp_mom_density<'py>(
    py: Python<'py>,
    data: &Bound<'py, PyAny>,
    sigma: f64,
    rho: f64,
    K: usize,
    epsilon: f64,
    delta: f64,
    tau: f64,
    seed: Option<u64>,
    moment_check: &str,
    shuffle_seed: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    mom_common(py, true, data, sigma, rho, K, epsilon, delta, tau, seed, MOM_ETA_CONSTANT, moment_check, shuffle_seed)
}

fn family(name: &str, p: &[f64]) -> PyResult<DistributionSpec> {
    let want = if name == "student-t" { 3 } else { 2 };
    if p.len() != want {
        return Err(PyValueError::new_err(format!("{name} takes {want} parameters, got {}", p.len())));
    }
    match name {
        "normal" => DistributionSpec::normal(p[0], p[1]),
        "student-t" => DistributionSpec::student_t(p[0], p[1], p[2]),
        "pareto" => DistributionSpec::centered_pareto(p[0], p[1]),
        "lognormal" => DistributionSpec::lognormal(p[0], p[1]),
        other => return Err(PyValueError::new_err(format!("unknown family {other:?}"))),
    }
    .or_py()
}

/// Coverage, no-reply rate and error quantiles over repeated synthetic samples.
#[pyfunction]
#[pyo3(signature = (family, params, estimator, n, epsilon, delta, tau, K=None, trials=1000, seed=0, moment_check="enforce"))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    family: &str,
    params: Vec<f64>,
    estimator: &str,
    n: usize,
    epsilon: f64,
    delta: f64,
    tau: f64,
    K: Option<usize>,
    trials: usize,
    seed: u64,
    moment_check: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = self::family(family, &params)?;
    let kind = match estimator {
        "median" => EstimatorKind::Median,
        "mom" => EstimatorKind::Mom,
        "mom-density" => EstimatorKind::MomDensity,
        "nonprivate-median" => EstimatorKind::NonPrivateMedian,
        other => return Err(PyValueError::new_err(format!("unknown estimator {other:?}"))),
    };
    let (b, c) = privacy(epsilon, delta, tau)?;
    let mut setup = EstimatorSetup::new(kind, K, b, c);
    setup.mom.moment_condition = check_mode(moment_check)?;
    let report = py.detach(|| run_coverage(&spec, &CoverageConfig::new(setup, n, trials, seed))).or_py()?;
    to_dict(py, &report)
}

/// Empirical privacy-loss audit of a shipped neighbor preset.
#[pyfunction]
#[pyo3(signature = (preset, epsilon, delta, trials=100_000, seed=0))]
fn audit<'py>(py: Python<'py>, preset: &str, epsilon: f64, delta: f64, trials: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let preset = match preset {
        "laplace-sum" => Preset::LaplaceSum,
        "ptr-gaussian" => Preset::PtrGaussian,
        "ptr-laplace" => Preset::PtrLaplace,
        other => return Err(PyValueError::new_err(format!("unknown preset {other:?}"))),
    };
    let budget = PrivacyBudget::new(epsilon, delta).or_py()?;
    let result = py.detach(|| presets::run_preset(preset, budget, trials, seed)).or_py()?;
    to_dict(py, &result)
}

#[pymodule]
fn ptrdp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySample>()?;
    m.add("PreconditionError", m.py().get_type::<PreconditionError>())?;
    m.add("MOM_ETA_CONSTANT", MOM_ETA_CONSTANT)?;
    m.add_function(wrap_pyfunction!(compute_c, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_median, m)?)?;
    m.add_function(wrap_pyfunction!(breakdown_stat, m)?)?;
    m.add_function(wrap_pyfunction!(breakdown_stat_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(median_eta, m)?)?;
    m.add_function(wrap_pyfunction!(mom_eta, m)?)?;
    m.add_function(wrap_pyfunction!(mom_density_eta, m)?)?;
    m.add_function(wrap_pyfunction!(block_means, m)?)?;
    m.add_function(wrap_pyfunction!(mom_point_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(dp_median, m)?)?;
    m.add_function(wrap_pyfunction!(dp_mom, m)?)?;
    m.add_function(wrap_pyfunction!(dp_mom_density, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(audit, m)?)?;
    Ok(())
}
