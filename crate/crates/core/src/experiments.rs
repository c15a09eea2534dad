//! Alternative signals, data generators for both models, power studies, and
//! deterministic functionals of a signal that govern detectability.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::{Model, QuantileTable};
use crate::error::{domain, precondition, Result};
use crate::geometry::GridFunction;
use crate::rng::{gaussian, replicate};
use crate::statistics::{pair_and_estimate, scan, scan_regression};

/// Catalog of test signals on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
    F7,
    /// `-(1 + x) + a exp(-50 (x - 0.5)^2)`.
    Gijbels,
    /// Identically zero.
    Constant,
    /// `f(x) = x`.
    Linear,
    /// Piecewise-linear interpolation of `points` on a uniform grid of `[0, 1]`.
    Custom,
}

fn default_scale() -> f64 {
    1.0
}

/// A signal together with the noise level it is observed under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternativeSpec {
    pub kind: SignalKind,
    /// Bump height for [`SignalKind::Gijbels`].
    #[serde(default)]
    pub a: f64,
    /// Noise standard deviation; also the slope parameter of `f2`.
    pub sigma: f64,
    /// Multiplier applied to the signal.
    #[serde(default = "default_scale")]
    pub scale: f64,
    /// Knot values for [`SignalKind::Custom`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<f64>>,
}

impl AlternativeSpec {
    pub fn new(kind: SignalKind, sigma: f64) -> Self {
        Self {
            kind,
            a: 0.0,
            sigma,
            scale: 1.0,
            points: None,
        }
    }

    pub fn gijbels(a: f64, sigma: f64) -> Self {
        Self {
            a,
            ..Self::new(SignalKind::Gijbels, sigma)
        }
    }

    pub fn custom(points: Vec<f64>, sigma: f64) -> Self {
        Self {
            points: Some(points),
            ..Self::new(SignalKind::Custom, sigma)
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return domain(format!("sigma must be positive, got {}", self.sigma));
        }
        if !self.scale.is_finite() {
            return domain("scale must be finite");
        }
        if self.kind == SignalKind::Gijbels && (self.a.is_nan() || self.a < 0.0) {
            return domain(format!("bump height must be non-negative, got {}", self.a));
        }
        if self.kind == SignalKind::Custom {
            match &self.points {
                Some(p) if p.len() >= 2 && p.iter().all(|v| v.is_finite()) => {}
                _ => return domain("custom signal needs at least 2 finite points"),
            }
        }
        Ok(())
    }

    /// The signal as a plain function; `validate` must have passed.
    fn eval_unchecked(&self, x: f64) -> f64 {
        let bump = |a: f64| a * (-50.0 * (x - 0.5).powi(2)).exp();
        let f3 = || bump(0.2);
        let f4 = || -0.1 * (6.0 * std::f64::consts::PI * x).cos();
        let raw = match self.kind {
            SignalKind::F1 => {
                let cubic = if x <= 0.5 {
                    -15.0 * (x - 0.5).powi(3)
                } else {
                    0.0
                };
                cubic - 0.3 * (x - 0.5) + (-250.0 * (x - 0.25).powi(2)).exp()
            }
            SignalKind::F2 => 1.5 * self.sigma * x,
            SignalKind::F3 => f3(),
            SignalKind::F4 => f4(),
            SignalKind::F5 => -0.2 * x + f3(),
            SignalKind::F6 => -0.2 * x + f4(),
            SignalKind::F7 => -(1.0 + x) + bump(F7_BUMP),
            SignalKind::Gijbels => -(1.0 + x) + bump(self.a),
            SignalKind::Constant => 0.0,
            SignalKind::Linear => x,
            SignalKind::Custom => {
                let p = self.points.as_deref().unwrap_or(&[0.0, 0.0]);
                let cells = (p.len() - 1) as f64;
                let pos = (x * cells).clamp(0.0, cells);
                let k = (pos.floor() as usize).min(p.len() - 2);
                let w = pos - k as f64;
                p[k] * (1.0 - w) + p[k + 1] * w
            }
        };
        self.scale * raw
    }

    /// Closure evaluating the validated signal.
    pub fn as_fn(&self) -> Result<impl Fn(f64) -> f64 + '_> {
        self.validate()?;
        Ok(move |x| self.eval_unchecked(x))
    }
}

/// Bump height of `f7`, the Gijbels family member with `a = 0.45`.
pub const F7_BUMP: f64 = 0.45;

/// Value of the signal at `x` in `[0, 1]`.
pub fn signal(spec: &AlternativeSpec, x: f64) -> Result<f64> {
    spec.validate()?;
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("x = {x} outside [0, 1]"));
    }
    Ok(spec.eval_unchecked(x))
}

/// White-noise observation `int_0^t f + (sigma / sqrt(n)) W(t)` on the grid
/// `k / (n r)`. The drift uses the composite midpoint rule.
pub fn simulate_white_path<R: Rng + ?Sized>(
    spec: &AlternativeSpec,
    n: usize,
    r: usize,
    rng: &mut R,
) -> Result<GridFunction> {
    simulate_white_path_with(spec, n, r, || gaussian(rng))
}

/// As [`simulate_white_path`], with innovations taken from `innovations`.
pub fn simulate_white_path_with(
    spec: &AlternativeSpec,
    n: usize,
    r: usize,
    mut innovations: impl FnMut() -> f64,
) -> Result<GridFunction> {
    spec.validate()?;
    if n < 2 || r < 1 {
        return domain(format!(
            "white path needs n >= 2 and r >= 1, got n={n}, r={r}"
        ));
    }
    let m = n * r;
    let h = 1.0 / m as f64;
    let noise = spec.sigma / (n as f64).sqrt() / (m as f64).sqrt();
    let (mut drift, mut walk) = (0.0, 0.0);
    let mut values = Vec::with_capacity(m + 1);
    values.push(0.0);
    for i in 1..=m {
        drift += spec.eval_unchecked((i as f64 - 0.5) * h) * h;
        walk += innovations();
        values.push(drift + noise * walk);
    }
    GridFunction::on_unit_interval(values)
}

/// Regression sample `Y_i = f(i/n) + sigma * eps_i`, `i = 1..n`.
pub fn simulate_regression_sample<R: Rng + ?Sized>(
    spec: &AlternativeSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    simulate_regression_sample_with(spec, n, || gaussian(rng))
}

/// As [`simulate_regression_sample`], with innovations taken from `innovations`.
pub fn simulate_regression_sample_with(
    spec: &AlternativeSpec,
    n: usize,
    mut innovations: impl FnMut() -> f64,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if n < 4 || !n.is_multiple_of(2) {
        return domain(format!("regression sample needs an even n >= 4, got {n}"));
    }
    Ok((1..=n)
        .map(|i| spec.eval_unchecked(i as f64 / n as f64) + spec.sigma * innovations())
        .collect())
}

/// Rejection rate of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub spec: AlternativeSpec,
    pub model: Model,
    pub n: usize,
    pub alpha: f64,
    pub threshold_used: f64,
    pub replications: usize,
    pub rejections: usize,
    pub power: f64,
    pub ci95: (f64, f64),
}

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    (
        (centre - half).max(0.0).min(p),
        (centre + half).min(1.0).max(p),
    )
}

/// Statistic of one simulated dataset under `spec`.
pub fn simulate_statistic<R: Rng + ?Sized>(
    spec: &AlternativeSpec,
    model: Model,
    n: usize,
    r: usize,
    rng: &mut R,
) -> Result<f64> {
    match model {
        Model::White => {
            let path = simulate_white_path(spec, n, r, rng)?;
            Ok(scan(&path, n, spec.sigma * spec.sigma, None)?.max_stat)
        }
        Model::Regression => {
            let y = simulate_regression_sample(spec, n, rng)?;
            Ok(scan_regression(&pair_and_estimate(&y)?, None)?.max_stat)
        }
    }
}

/// Fewest replications `power_study` accepts.
pub const MIN_POWER_REPLICATIONS: usize = 100;

/// Proportion of `reps` simulated datasets whose statistic exceeds the table
/// threshold at `alpha`. Replication `k` uses child stream `k` of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn power_study(
    spec: &AlternativeSpec,
    model: Model,
    n: usize,
    r: usize,
    alpha: f64,
    table: &QuantileTable,
    reps: usize,
    seed: u64,
) -> Result<PowerReport> {
    spec.validate()?;
    let r = if model == Model::Regression { 1 } else { r };
    if table.model != model || table.n != n || table.r != r {
        return precondition(format!(
            "table is for ({}, n={}, r={}), study needs ({model}, n={n}, r={r})",
            table.model, table.n, table.r
        ));
    }
    let Some(threshold) = table.quantile(alpha) else {
        return precondition(format!("table has no entry for level {alpha}"));
    };
    if reps < MIN_POWER_REPLICATIONS {
        return domain(format!(
            "at least {MIN_POWER_REPLICATIONS} replications required, got {reps}"
        ));
    }
    let stats = replicate(seed, reps, |rng| simulate_statistic(spec, model, n, r, rng))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let rejections = stats.iter().filter(|s| **s > threshold).count();
    Ok(PowerReport {
        spec: spec.clone(),
        model,
        n,
        alpha,
        threshold_used: threshold,
        replications: reps,
        rejections,
        power: rejections as f64 / reps as f64,
        ci95: wilson_interval(rejections, reps, Z95),
    })
}

fn check_interval(x: f64, y: f64) -> Result<()> {
    if !(0.0 <= x && x < y && y <= 1.0) {
        return domain(format!("need 0 <= x < y <= 1, got x={x}, y={y}"));
    }
    Ok(())
}

/// Midpoint-rule mean of `f` over `[x, y]` with `panels` panels.
pub fn average<F: Fn(f64) -> f64>(f: F, x: f64, y: f64, panels: usize) -> Result<f64> {
    check_interval(x, y)?;
    if panels < 2 {
        return domain(format!("need at least 2 panels, got {panels}"));
    }
    Ok(midpoint_mean(&f, x, y, panels))
}

fn midpoint_mean<F: Fn(f64) -> f64>(f: &F, x: f64, y: f64, panels: usize) -> f64 {
    let h = (y - x) / panels as f64;
    let sum: f64 = (0..panels).map(|k| f(x + (k as f64 + 0.5) * h)).sum();
    sum / panels as f64
}

/// Default number of `t` panels for [`detectability`].
pub const DETECTABILITY_T_PANELS: usize = 512;
/// Default number of panels for each interval mean inside [`detectability`].
pub const DETECTABILITY_AVERAGE_PANELS: usize = 1024;

/// `sup_{t in [x, y]} (t - x) / sqrt(y - x) * (mean_{[x,y]} f - mean_{[x,t]} f)`
/// evaluated at `grid + 1` equispaced values of `t`.
pub fn detectability<F: Fn(f64) -> f64>(f: F, x: f64, y: f64, grid: usize) -> Result<f64> {
    detectability_with(f, x, y, grid, DETECTABILITY_AVERAGE_PANELS)
}

pub fn detectability_with<F: Fn(f64) -> f64>(
    f: F,
    x: f64,
    y: f64,
    grid: usize,
    average_panels: usize,
) -> Result<f64> {
    check_interval(x, y)?;
    if grid < 1 || average_panels < 2 {
        return domain("detectability needs a t grid of at least 1 panel and 2 averaging panels");
    }
    let whole = midpoint_mean(&f, x, y, average_panels);
    let width = y - x;
    let mut best = 0.0f64;
    for k in 1..=grid {
        let t = if k == grid {
            y
        } else {
            x + width * k as f64 / grid as f64
        };
        let partial = midpoint_mean(&f, x, t, average_panels);
        best = best.max((t - x) / width.sqrt() * (whole - partial));
    }
    Ok(best)
}

/// `2 sqrt(2) (sqrt(log(n (n + 1) / alpha)) + sqrt(log(2 / beta)))`: a scan
/// statistic of a noiseless observation above this value guarantees power at
/// least `1 - beta` for the level-`alpha` test.
pub fn guarantee_threshold(alpha: f64, beta: f64, n: usize) -> f64 {
    let count = n as f64 * (n as f64 + 1.0);
    2.0 * std::f64::consts::SQRT_2 * ((count / alpha).ln().sqrt() + (2.0 / beta).ln().sqrt())
}

/// Largest derivative of `f` on `[0, 1]`, by finite differences with step
/// `1 / grid` (central inside, one-sided at the ends).
pub fn delta2<F: Fn(f64) -> f64>(f: F, grid: usize) -> f64 {
    let grid = grid.max(2);
    let h = 1.0 / grid as f64;
    let mut best = f64::NEG_INFINITY;
    for k in 0..=grid {
        let t = k as f64 * h;
        let d = if k == 0 {
            (f(h) - f(0.0)) / h
        } else if k == grid {
            (f(1.0) - f(1.0 - h)) / h
        } else {
            (f(t + h) - f(t - h)) / (2.0 * h)
        };
        best = best.max(d);
    }
    best
}

/// `max_t (f(t) - min_{s <= t} f(s))` over the grid `k / grid`: zero exactly
/// when `f` is non-increasing on the grid, and an upper bound on the sup
/// distance from `f` to the non-increasing functions.
pub fn envelope_gap<F: Fn(f64) -> f64>(f: F, grid: usize) -> f64 {
    let grid = grid.max(2);
    let mut running_min = f64::INFINITY;
    let mut gap = 0.0f64;
    for k in 0..=grid {
        let v = f(k as f64 / grid as f64);
        running_min = running_min.min(v);
        gap = gap.max(v - running_min);
    }
    gap
}
