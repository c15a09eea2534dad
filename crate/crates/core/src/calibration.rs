//! Monte Carlo critical thresholds under the least favorable null (constant
//! signal), plus closed-form conservative bounds.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{lcm, max_deviation, GridFunction};
use crate::rng::{gaussian, replicate, GENERATOR_ID};
use crate::statistics::{pair_and_estimate, scan, scan_regression};

/// Observation model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Integrated signal plus scaled Brownian motion, known noise level.
    White,
    /// Fixed-design Gaussian regression with unknown variance.
    Regression,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::White => "white",
            Model::Regression => "regression",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "white" => Ok(Model::White),
            "regression" => Ok(Model::Regression),
            other => domain(format!(
                "unknown model {other:?} (expected white or regression)"
            )),
        }
    }
}

/// Default fine-grid factor for white-noise paths.
pub const DEFAULT_FINE_FACTOR: usize = 1000;
/// Default number of Monte Carlo replications.
pub const DEFAULT_REPLICATIONS: usize = 5000;
/// Smallest replication count `calibrate` accepts.
pub const MIN_REPLICATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileEntry {
    pub alpha: f64,
    pub quantile: f64,
}

/// Critical thresholds keyed by level, with everything needed to rebuild them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    pub model: Model,
    pub n: usize,
    pub r: usize,
    #[serde(rename = "C")]
    pub replications: usize,
    pub seed: u64,
    pub generator_id: String,
    pub entries: Vec<QuantileEntry>,
}

impl QuantileTable {
    /// Threshold stored for `alpha`. Levels are matched exactly (up to
    /// decimal round-off); there is no interpolation.
    pub fn quantile(&self, alpha: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| (e.alpha - alpha).abs() <= 1e-12)
            .map(|e| e.quantile)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("quantile table serializes")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        domain(format!("level must lie in (0, 1), got {alpha}"))
    }
}

/// Null white-noise statistic: a standard Brownian path sampled at `n * r`
/// points, scaled by `1/sqrt(n)` as in the white-noise model with unit noise,
/// then scanned over the coarse grid of size `n`.
pub fn null_white_statistic<R: Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> Result<f64> {
    if n < 2 || r < 1 {
        return domain(format!(
            "white-noise null needs n >= 2 and r >= 1, got n={n}, r={r}"
        ));
    }
    let m = n * r;
    let step = 1.0 / ((m as f64).sqrt() * (n as f64).sqrt());
    let mut path = Vec::with_capacity(m + 1);
    let mut sum = 0.0;
    path.push(0.0);
    for _ in 0..m {
        sum += gaussian(rng);
        path.push(sum * step);
    }
    let g = GridFunction::on_unit_interval(path)?;
    Ok(scan(&g, n, 1.0, None)?.max_stat)
}

/// Null regression statistic from `n` standard Gaussian observations.
pub fn null_regression_statistic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<f64> {
    if n < 4 || !n.is_multiple_of(2) {
        return domain(format!("regression null needs an even n >= 4, got {n}"));
    }
    let y: Vec<f64> = (0..n).map(|_| gaussian(rng)).collect();
    let sample = pair_and_estimate(&y)?;
    Ok(scan_regression(&sample, None)?.max_stat)
}

/// Draws `replications` null statistics, replication `k` on child stream `k`
/// of `seed`, in replication order.
pub fn null_statistics(
    model: Model,
    n: usize,
    r: usize,
    replications: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    validate_model_grid(model, n, r)?;
    replicate(seed, replications, |rng| match model {
        Model::White => null_white_statistic(n, r, rng),
        Model::Regression => null_regression_statistic(n, rng),
    })
    .into_iter()
    .collect()
}

fn validate_model_grid(model: Model, n: usize, r: usize) -> Result<()> {
    match model {
        Model::White if n < 2 || r < 1 => domain(format!(
            "white model needs n >= 2 and r >= 1, got n={n}, r={r}"
        )),
        Model::Regression if n < 4 || !n.is_multiple_of(2) => {
            domain(format!("regression model needs an even n >= 4, got {n}"))
        }
        Model::Regression if r != 1 => domain(format!("regression model uses r = 1, got {r}")),
        _ => Ok(()),
    }
}

/// 1-based rank `ceil((1 - alpha) * count)` of the upper order statistic.
pub fn quantile_rank(alpha: f64, count: usize) -> usize {
    let x = (1.0 - alpha) * count as f64;
    let nearest = x.round();
    let rank = if (x - nearest).abs() <= 1e-9 * count as f64 {
        nearest
    } else {
        x.ceil()
    };
    (rank as usize).clamp(1, count)
}

/// Empirical `(1 - alpha)`-quantile of an ascending sample.
pub fn empirical_quantile(sorted: &[f64], alpha: f64) -> f64 {
    sorted[quantile_rank(alpha, sorted.len()) - 1]
}

/// Monte Carlo thresholds for every level in `alphas` (ascending).
pub fn calibrate(
    model: Model,
    n: usize,
    r: usize,
    replications: usize,
    alphas: &[f64],
    seed: u64,
) -> Result<QuantileTable> {
    if replications < MIN_REPLICATIONS {
        return domain(format!(
            "at least {MIN_REPLICATIONS} replications required, got {replications}"
        ));
    }
    if alphas.is_empty() {
        return domain("no levels requested");
    }
    for a in alphas {
        check_alpha(*a)?;
    }
    if alphas.windows(2).any(|w| w[0] >= w[1]) {
        return domain("levels must be strictly ascending");
    }
    let mut stats = null_statistics(model, n, r, replications, seed)?;
    stats.sort_by(f64::total_cmp);
    Ok(QuantileTable {
        model,
        n,
        r,
        replications,
        seed,
        generator_id: GENERATOR_ID.to_string(),
        entries: alphas
            .iter()
            .map(|&alpha| QuantileEntry {
                alpha,
                quantile: empirical_quantile(&stats, alpha),
            })
            .collect(),
    })
}

/// Number of scanned intervals on a coarse grid of size `n`.
pub fn interval_count(n: usize) -> f64 {
    let n = n as f64;
    n * (n + 1.0) / 2.0
}

/// Conservative threshold `2 sqrt(2 log(2 |C_n| / alpha))`, which dominates
/// the Monte Carlo quantile at every level.
pub fn analytic_threshold(alpha: f64, n: usize) -> f64 {
    2.0 * (2.0 * (2.0 * interval_count(n) / alpha).ln()).sqrt()
}

/// Sub-Gaussian bound `min(1, 2 exp(-x^2 / 8))` on the tail of the sup-distance
/// between Brownian motion and its least concave majorant on `[0, 1]`.
pub fn z_tail_bound(x: f64) -> f64 {
    (2.0 * (-x * x / 8.0).exp()).min(1.0)
}

/// One draw of the sup-distance between a discretized Brownian motion on
/// `[0, 1]` (`steps` increments) and its least concave majorant.
pub fn simulate_majorant_gap<R: Rng + ?Sized>(steps: usize, rng: &mut R) -> Result<f64> {
    if steps < 1 {
        return domain("need at least one step");
    }
    let scale = 1.0 / (steps as f64).sqrt();
    let mut sum = 0.0;
    let mut path = Vec::with_capacity(steps + 1);
    path.push(0.0);
    for _ in 0..steps {
        sum += gaussian(rng);
        path.push(sum * scale);
    }
    let g = GridFunction::on_unit_interval(path)?;
    Ok(max_deviation(&lcm(&g)?, &g)?.0)
}
