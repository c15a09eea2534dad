//! Multiscale scan over all intervals `[i/n, j/n]` of the distance between a
//! cumulated observation and its local least concave majorants.

use serde::{Deserialize, Serialize};

use crate::error::{domain, precondition, Error, Result};
use crate::geometry::{turn, GridFunction};

/// Normalized statistic of one scanned interval `[i/n, j/n]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalStat {
    pub i: usize,
    pub j: usize,
    pub stat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    /// Coarse grid size.
    pub n: usize,
    pub max_stat: f64,
    /// Lexicographically smallest interval attaining `max_stat`.
    pub best_interval: (usize, usize),
    /// Floor used when retaining `interval_stats`, if any.
    pub retain_floor: Option<f64>,
    /// Intervals with `stat >= retain_floor`, ordered by `(i, j)`.
    pub interval_stats: Option<Vec<IntervalStat>>,
}

/// Interval counts above this need an explicit retention floor when the
/// caller asks for localization output.
pub const FULL_RETENTION_MAX_N: usize = 200;

/// Cumulative sum diagram with equal weights `1/len`: the grid function on
/// `[0, 1]` through `(j/len, (1/len) * sum_{i<=j} values_i)`, starting at 0.
pub fn cumulative_sum_diagram(values: &[f64]) -> Result<GridFunction> {
    if values.is_empty() {
        return domain("cumulative sum diagram of an empty sequence");
    }
    let weight = 1.0 / values.len() as f64;
    let mut knots = Vec::with_capacity(values.len() + 1);
    let mut sum = 0.0;
    knots.push(0.0);
    for v in values {
        sum += v;
        knots.push(sum * weight);
    }
    GridFunction::on_unit_interval(knots)
}

/// Scans every interval `[i/n, j/n]`, `0 <= i < j <= n`, of `g`.
///
/// The grid of `g` must refine the coarse grid: `g.cells()` is a multiple
/// `r` of `n`. For each interval, the largest gap between `g` and its least
/// concave majorant on that interval is scaled by `sqrt(n / (noise_sq * |I|))`
/// with `|I| = (j - i) / n`.
pub fn scan(
    g: &GridFunction,
    n: usize,
    noise_sq: f64,
    retain_floor: Option<f64>,
) -> Result<ScanResult> {
    if n == 0 {
        return domain("coarse grid size must be positive");
    }
    if !(noise_sq.is_finite() && noise_sq > 0.0) {
        return domain(format!("noise variance must be positive, got {noise_sq}"));
    }
    if !g.cells().is_multiple_of(n) {
        return precondition(format!(
            "grid with {} cells does not refine a coarse grid of {n} cells",
            g.cells()
        ));
    }
    if let Some(floor) = retain_floor {
        if floor.is_nan() {
            return domain("retention floor is NaN");
        }
    }
    let r = g.cells() / n;
    let scanner = Scanner::new(g.values(), n, r);

    let mut best = (0.0f64, (0usize, n));
    let mut first = true;
    let mut retained = retain_floor.map(|_| Vec::new());
    let scale = n as f64 / noise_sq.sqrt();
    let mut work = AnchorWork::default();
    for i in 0..n {
        scanner.anchor(i, &mut work, |j, dev| {
            let stat = dev * scale / ((j - i) as f64).sqrt();
            if first || stat > best.0 {
                best = (stat, (i, j));
                first = false;
            }
            if let (Some(out), Some(floor)) = (retained.as_mut(), retain_floor) {
                if stat >= floor {
                    out.push(IntervalStat { i, j, stat });
                }
            }
        });
    }
    Ok(ScanResult {
        n,
        max_stat: best.0,
        best_interval: best.1,
        retain_floor,
        interval_stats: retained,
    })
}

/// Majorants of each coarse cell in fine-grid index coordinates, used as the
/// building blocks that get concatenated onto the running hull.
struct Scanner<'a> {
    values: &'a [f64],
    n: usize,
    cell_offsets: Vec<usize>,
    cell_vertices: Vec<usize>,
}

#[derive(Default)]
struct AnchorWork {
    stack: Vec<usize>,
    /// `prefix[t]`: largest gap over knots of hull segments `0..=t`.
    prefix: Vec<f64>,
}

impl<'a> Scanner<'a> {
    fn new(values: &'a [f64], n: usize, r: usize) -> Self {
        let mut cell_offsets = Vec::with_capacity(n + 1);
        let mut cell_vertices = Vec::with_capacity(n * 2 + 1);
        let mut stack: Vec<usize> = Vec::with_capacity(r + 1);
        for c in 0..n {
            cell_offsets.push(cell_vertices.len());
            stack.clear();
            for k in c * r..=(c + 1) * r {
                push_index(&mut stack, values, k);
            }
            cell_vertices.extend_from_slice(&stack);
        }
        cell_offsets.push(cell_vertices.len());
        Self {
            values,
            n,
            cell_offsets,
            cell_vertices,
        }
    }

    fn cell(&self, c: usize) -> &[usize] {
        &self.cell_vertices[self.cell_offsets[c]..self.cell_offsets[c + 1]]
    }

    /// Grows the hull from anchor `i` one coarse cell at a time, reporting
    /// the maximal gap on `[i, j]` for every `j > i`.
    fn anchor(&self, i: usize, work: &mut AnchorWork, mut report: impl FnMut(usize, f64)) {
        let values = self.values;
        let AnchorWork { stack, prefix } = work;
        stack.clear();
        prefix.clear();
        stack.push(self.cell(i)[0]);
        for c in i..self.n {
            let mut low = stack.len();
            for &p in &self.cell(c)[1..] {
                while let [.., a, b] = stack.as_slice() {
                    if turn(
                        *a as f64, values[*a], *b as f64, values[*b], p as f64, values[p],
                    ) >= 0.0
                    {
                        stack.pop();
                    } else {
                        break;
                    }
                }
                low = low.min(stack.len());
                stack.push(p);
            }
            // Segments ending at or before stack[low - 1] are untouched.
            prefix.truncate(low - 1);
            let mut running = prefix.last().copied().unwrap_or(0.0);
            for t in low - 1..stack.len() - 1 {
                let (a, b) = (stack[t], stack[t + 1]);
                let va = values[a];
                let slope = (values[b] - va) / (b - a) as f64;
                for (d, v) in values[a + 1..b].iter().enumerate() {
                    let gap = va + slope * (d + 1) as f64 - v;
                    if gap > running {
                        running = gap;
                    }
                }
                prefix.push(running);
            }
            report(c + 1, running);
        }
    }
}

#[inline]
fn push_index(stack: &mut Vec<usize>, values: &[f64], p: usize) {
    while let [.., a, b] = stack.as_slice() {
        if turn(
            *a as f64, values[*a], *b as f64, values[*b], p as f64, values[p],
        ) >= 0.0
        {
            stack.pop();
        } else {
            break;
        }
    }
    stack.push(p);
}

/// Regression data reduced to pair means plus a variance estimate that is
/// independent of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    pub ybar: Vec<f64>,
    pub sigma_hat_sq: f64,
    pub sigma0_hat_sq: f64,
}

impl PairedSample {
    /// Number of pairs.
    pub fn pairs(&self) -> usize {
        self.ybar.len()
    }
}

/// Pairs `(y1, y2), (y3, y4), ...`; returns the pair means, the variance
/// estimate `(1/len) * sum (y_{2i} - y_{2i-1})^2` and half of it, which
/// estimates the noise variance of a pair mean.
pub fn pair_and_estimate(y: &[f64]) -> Result<PairedSample> {
    if y.len() < 4 || !y.len().is_multiple_of(2) {
        return domain(format!(
            "paired regression needs an even number (at least 4) of observations, got {}",
            y.len()
        ));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return domain("observations must be finite");
    }
    let mut ybar = Vec::with_capacity(y.len() / 2);
    let mut ss = 0.0;
    for pair in y.chunks_exact(2) {
        ybar.push((pair[0] + pair[1]) / 2.0);
        let d = pair[1] - pair[0];
        ss += d * d;
    }
    let sigma_hat_sq = ss / y.len() as f64;
    Ok(PairedSample {
        ybar,
        sigma_hat_sq,
        sigma0_hat_sq: sigma_hat_sq / 2.0,
    })
}

/// Scan of the cumulative sum diagram of the pair means, normalized by the
/// estimated pair-mean variance.
pub fn scan_regression(sample: &PairedSample, retain_floor: Option<f64>) -> Result<ScanResult> {
    if !(sample.sigma0_hat_sq.is_finite() && sample.sigma0_hat_sq > 0.0) {
        return Err(Error::DegenerateSample(
            "zero variance estimate: every pair has equal members".into(),
        ));
    }
    let diagram = cumulative_sum_diagram(&sample.ybar)?;
    scan(&diagram, sample.pairs(), sample.sigma0_hat_sq, retain_floor)
}

/// Retained intervals with `stat > threshold`, largest first.
pub fn violating_intervals(result: &ScanResult, threshold: f64) -> Result<Vec<IntervalStat>> {
    let (Some(stats), Some(floor)) = (&result.interval_stats, result.retain_floor) else {
        return precondition("scan did not retain interval statistics");
    };
    if floor > threshold {
        return precondition(format!(
            "retention floor {floor} exceeds threshold {threshold}; intervals may be missing"
        ));
    }
    let mut out: Vec<IntervalStat> = stats
        .iter()
        .copied()
        .filter(|s| s.stat > threshold)
        .collect();
    out.sort_by(|a, b| b.stat.total_cmp(&a.stat).then((a.i, a.j).cmp(&(b.i, b.j))));
    Ok(out)
}
