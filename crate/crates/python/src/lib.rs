//! Python bindings for the monoscan monotonicity test.

use monoscan::experiments::{guarantee_threshold, simulate_statistic};
use monoscan::rng::stream;
use monoscan::{AlternativeSpec, Model};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

pyo3::create_exception!(monoscan_py, MonoscanError, pyo3::exceptions::PyException);

fn err(e: monoscan::Error) -> PyErr {
    MonoscanError::new_err(e.to_string())
}

fn model(name: &str) -> PyResult<Model> {
    name.parse().map_err(err)
}

fn spec(
    kind: &str,
    sigma: f64,
    a: f64,
    scale: f64,
    points: Option<Vec<f64>>,
) -> PyResult<AlternativeSpec> {
    let kind = serde_json::from_value(serde_json::Value::String(kind.to_lowercase()))
        .map_err(|_| PyValueError::new_err(format!("unknown signal kind {kind:?}")))?;
    let s = AlternativeSpec {
        kind,
        a,
        sigma,
        scale,
        points,
    };
    s.validate().map_err(err)?;
    Ok(s)
}

/// Result of a multiscale scan.
#[pyclass(frozen)]
struct ScanResult(monoscan::ScanResult);

#[pymethods]
impl ScanResult {
    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    #[getter]
    fn max_stat(&self) -> f64 {
        self.0.max_stat
    }

    #[getter]
    fn best_interval(&self) -> (usize, usize) {
        self.0.best_interval
    }

    /// `(i, j, stat)` for retained intervals, or `None`.
    #[getter]
    fn interval_stats(&self) -> Option<Vec<(usize, usize, f64)>> {
        self.0
            .interval_stats
            .as_ref()
            .map(|v| v.iter().map(|s| (s.i, s.j, s.stat)).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "ScanResult(n={}, max_stat={}, best_interval={:?})",
            self.0.n, self.0.max_stat, self.0.best_interval
        )
    }
}

/// Monte Carlo critical values.
#[pyclass(frozen)]
struct QuantileTable(monoscan::QuantileTable);

#[pymethods]
impl QuantileTable {
    #[getter]
    fn model(&self) -> String {
        self.0.model.to_string()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    #[getter]
    fn r(&self) -> usize {
        self.0.r
    }

    #[getter]
    fn replications(&self) -> usize {
        self.0.replications
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    #[getter]
    fn entries(&self) -> Vec<(f64, f64)> {
        self.0
            .entries
            .iter()
            .map(|e| (e.alpha, e.quantile))
            .collect()
    }

    fn quantile(&self, alpha: f64) -> Option<f64> {
        self.0.quantile(alpha)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        monoscan::QuantileTable::from_json(text)
            .map(Self)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "QuantileTable(model={}, n={}, r={}, C={}, entries={:?})",
            self.0.model,
            self.0.n,
            self.0.r,
            self.0.replications,
            self.entries()
        )
    }
}

/// Rejection rate of one simulated configuration.
#[pyclass(frozen, get_all)]
struct PowerReport {
    model: String,
    n: usize,
    alpha: f64,
    threshold_used: f64,
    replications: usize,
    rejections: usize,
    power: f64,
    ci95: (f64, f64),
}

#[pymethods]
impl PowerReport {
    fn __repr__(&self) -> String {
        format!(
            "PowerReport(model={}, n={}, power={}, ci95={:?})",
            self.model, self.n, self.power, self.ci95
        )
    }
}

/// Vertices `(x, value)` of the least concave majorant of the grid function
/// with knot values `values` at `left + k * step`.
#[pyfunction]
#[pyo3(signature = (values, left = 0.0, step = None))]
fn lcm(values: Vec<f64>, left: f64, step: Option<f64>) -> PyResult<Vec<(f64, f64)>> {
    let step = step.unwrap_or(1.0 / (values.len().max(2) - 1) as f64);
    let g = monoscan::GridFunction::new(left, step, values).map_err(err)?;
    let chain = monoscan::lcm(&g).map_err(err)?;
    Ok(chain.vertices().iter().map(|v| (v.x, v.value)).collect())
}

/// Scan of a path given by its knot values on `[0, 1]`.
#[pyfunction]
#[pyo3(signature = (values, n, noise_sq = 1.0, retain_floor = None))]
fn scan(
    values: Vec<f64>,
    n: usize,
    noise_sq: f64,
    retain_floor: Option<f64>,
) -> PyResult<ScanResult> {
    let g = monoscan::GridFunction::on_unit_interval(values).map_err(err)?;
    monoscan::scan(&g, n, noise_sq, retain_floor)
        .map(ScanResult)
        .map_err(err)
}

/// `(pair means, sigma_hat_sq, sigma0_hat_sq)` of raw regression data.
#[pyfunction]
fn pair_and_estimate(y: Vec<f64>) -> PyResult<(Vec<f64>, f64, f64)> {
    let p = monoscan::pair_and_estimate(&y).map_err(err)?;
    Ok((p.ybar, p.sigma_hat_sq, p.sigma0_hat_sq))
}

/// Regression scan of raw observations.
#[pyfunction]
#[pyo3(signature = (y, retain_floor = None))]
fn scan_regression(y: Vec<f64>, retain_floor: Option<f64>) -> PyResult<ScanResult> {
    let p = monoscan::pair_and_estimate(&y).map_err(err)?;
    monoscan::scan_regression(&p, retain_floor)
        .map(ScanResult)
        .map_err(err)
}

/// `(i, j, stat)` of intervals with `stat > threshold`, largest first.
#[pyfunction]
fn violating_intervals(result: &ScanResult, threshold: f64) -> PyResult<Vec<(usize, usize, f64)>> {
    Ok(monoscan::violating_intervals(&result.0, threshold)
        .map_err(err)?
        .into_iter()
        .map(|s| (s.i, s.j, s.stat))
        .collect())
}

#[pyfunction]
#[pyo3(signature = (model, n, reps, alphas, seed, r = 1))]
fn calibrate(
    py: Python<'_>,
    model: &str,
    n: usize,
    reps: usize,
    alphas: Vec<f64>,
    seed: u64,
    r: usize,
) -> PyResult<QuantileTable> {
    let m = self::model(model)?;
    py.detach(|| monoscan::calibrate(m, n, r, reps, &alphas, seed))
        .map(QuantileTable)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (kind, model, n, alpha, table, reps, seed, sigma, r = 1, a = 0.0, scale = 1.0, points = None))]
#[allow(clippy::too_many_arguments)]
fn power_study(
    py: Python<'_>,
    kind: &str,
    model: &str,
    n: usize,
    alpha: f64,
    table: &QuantileTable,
    reps: usize,
    seed: u64,
    sigma: f64,
    r: usize,
    a: f64,
    scale: f64,
    points: Option<Vec<f64>>,
) -> PyResult<PowerReport> {
    let s = spec(kind, sigma, a, scale, points)?;
    let m = self::model(model)?;
    let rep = py
        .detach(|| monoscan::power_study(&s, m, n, r, alpha, &table.0, reps, seed))
        .map_err(err)?;
    Ok(PowerReport {
        model: rep.model.to_string(),
        n: rep.n,
        alpha: rep.alpha,
        threshold_used: rep.threshold_used,
        replications: rep.replications,
        rejections: rep.rejections,
        power: rep.power,
        ci95: rep.ci95,
    })
}

/// Statistic of one dataset simulated from stream `index` of `seed`.
#[pyfunction]
#[pyo3(signature = (kind, model, n, seed, sigma, index = 0, r = 1, a = 0.0, scale = 1.0))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    kind: &str,
    model: &str,
    n: usize,
    seed: u64,
    sigma: f64,
    index: u64,
    r: usize,
    a: f64,
    scale: f64,
) -> PyResult<f64> {
    let s = spec(kind, sigma, a, scale, None)?;
    simulate_statistic(&s, self::model(model)?, n, r, &mut stream(seed, index)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (kind, x, sigma = 1.0, a = 0.0, scale = 1.0))]
fn signal(kind: &str, x: f64, sigma: f64, a: f64, scale: f64) -> PyResult<f64> {
    monoscan::signal(&spec(kind, sigma, a, scale, None)?, x).map_err(err)
}

/// Detectability functional of a catalog signal on `[x, y]`.
#[pyfunction]
#[pyo3(signature = (kind, x = 0.0, y = 1.0, grid = 512, sigma = 1.0, a = 0.0))]
fn detectability(kind: &str, x: f64, y: f64, grid: usize, sigma: f64, a: f64) -> PyResult<f64> {
    let s = spec(kind, sigma, a, 1.0, None)?;
    let f = s.as_fn().map_err(err)?;
    monoscan::detectability(f, x, y, grid).map_err(err)
}

/// `(analytic_threshold, guarantee_threshold)`; the second is `None`
/// without `beta`.
#[pyfunction]
#[pyo3(signature = (alpha, n, beta = None))]
fn bounds(alpha: f64, n: usize, beta: Option<f64>) -> PyResult<(f64, Option<f64>)> {
    let level = |v: f64| v > 0.0 && v < 1.0;
    if !level(alpha) || !beta.is_none_or(level) || n < 1 {
        return Err(PyValueError::new_err(
            "levels must lie in (0, 1) and n >= 1",
        ));
    }
    Ok((
        monoscan::analytic_threshold(alpha, n),
        beta.map(|b| guarantee_threshold(alpha, b, n)),
    ))
}

#[pyfunction]
fn z_tail_bound(x: f64) -> f64 {
    monoscan::z_tail_bound(x)
}

#[pymodule]
fn monoscan_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MonoscanError", m.py().get_type::<MonoscanError>())?;
    m.add_class::<ScanResult>()?;
    m.add_class::<QuantileTable>()?;
    m.add_class::<PowerReport>()?;
    m.add_function(wrap_pyfunction!(lcm, m)?)?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(pair_and_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(scan_regression, m)?)?;
    m.add_function(wrap_pyfunction!(violating_intervals, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(power_study, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(signal, m)?)?;
    m.add_function(wrap_pyfunction!(detectability, m)?)?;
    m.add_function(wrap_pyfunction!(bounds, m)?)?;
    m.add_function(wrap_pyfunction!(z_tail_bound, m)?)?;
    Ok(())
}
