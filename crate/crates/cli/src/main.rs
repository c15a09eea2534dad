use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use monoscan::experiments::guarantee_threshold;
use monoscan::rng::configure_threads_from_env;
use monoscan::{
    analytic_threshold, calibrate, pair_and_estimate, power_study, scan, scan_regression,
    violating_intervals, AlternativeSpec, GridFunction, Model, PairedSample, PowerReport,
    QuantileTable, ScanResult,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Multiscale test of monotonicity (non-increasing signal) on [0, 1].
#[derive(Parser)]
#[command(name = "monoscan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo critical values under the least favorable null.
    Calibrate(CalibrateArgs),
    /// Test data for monotonicity and locate violating intervals.
    Test(TestArgs),
    /// Power of the test over a batch of scenarios.
    Power(PowerArgs),
    /// Closed-form thresholds.
    Bound(BoundArgs),
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    model: Model,
    #[arg(long)]
    n: usize,
    /// Fine-grid factor (white noise only).
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, value_parser = parse_reps)]
    reps: usize,
    /// Comma-separated levels, e.g. 0.01,0.05,0.1.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_level)]
    alphas: Vec<f64>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long)]
    model: Model,
    /// One value per line; white mode: path knots starting at 0, regression mode: raw Y.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_parser = parse_level)]
    alpha: f64,
    #[arg(
        long,
        conflicts_with = "analytic",
        required_unless_present = "analytic"
    )]
    table: Option<PathBuf>,
    /// Use the closed-form threshold instead of a table.
    #[arg(long)]
    analytic: bool,
    /// Noise standard deviation (white noise only).
    #[arg(long, value_parser = parse_positive)]
    sigma: Option<f64>,
    /// Coarse grid size (white noise only).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PowerArgs {
    /// JSON array of scenario rows.
    #[arg(long)]
    scenario: PathBuf,
    /// Quantile table; repeat for scenarios with different (model, n, r).
    #[arg(long, required = true)]
    table: Vec<PathBuf>,
    #[arg(long, value_parser = parse_reps)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    /// JSON reports; a CSV summary is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, value_parser = parse_level)]
    alpha: f64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, value_parser = parse_level)]
    beta: Option<f64>,
}

fn parse_level(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not in (0, 1)"))
    }
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is not positive"))
    }
}

fn parse_reps(s: &str) -> std::result::Result<usize, String> {
    let v: usize = s.trim().parse().map_err(|e| format!("{e}"))?;
    if v >= 100 {
        Ok(v)
    } else {
        Err(format!("at least 100 replications required, got {v}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ThresholdSource {
    Table,
    Analytic,
}

#[derive(Debug, Serialize, Deserialize)]
struct TestReport {
    model: Model,
    n: usize,
    alpha: f64,
    threshold: f64,
    threshold_source: ThresholdSource,
    statistic: f64,
    reject: bool,
    /// `(i/n, j/n, stat)` for every interval above the threshold, largest first.
    violating: Vec<(f64, f64, f64)>,
    input_digest: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Scenario {
    spec: AlternativeSpec,
    model: Model,
    n: usize,
    #[serde(default = "one")]
    r: usize,
    #[serde(default = "default_alpha")]
    alpha: f64,
}

fn one() -> usize {
    1
}

fn default_alpha() -> f64 {
    0.05
}

fn main() -> ExitCode {
    configure_threads_from_env();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Calibrate(a) => run_calibrate(a),
        Command::Test(a) => run_test(a),
        Command::Power(a) => run_power(a),
        Command::Bound(a) => run_bound(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn read_table(path: &Path) -> Result<QuantileTable> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    QuantileTable::from_json(&text)
        .with_context(|| format!("{} is not a quantile table", path.display()))
}

fn run_calibrate(a: CalibrateArgs) -> Result<()> {
    let r = match (a.model, a.r) {
        (Model::Regression, None | Some(1)) => 1,
        (Model::Regression, Some(r)) => {
            bail!("--r does not apply to the regression model (got {r})")
        }
        (Model::White, r) => r.unwrap_or(monoscan::calibration::DEFAULT_FINE_FACTOR),
    };
    let table = calibrate(a.model, a.n, r, a.reps, &a.alphas, a.seed)?;
    write(&a.out, &table.to_json())?;
    println!("model\tn\tr\tC\talpha\tquantile");
    for e in &table.entries {
        println!(
            "{}\t{}\t{}\t{}\t{}\t{:.6}",
            table.model, table.n, table.r, table.replications, e.alpha, e.quantile
        );
    }
    Ok(())
}

/// Values from a one-column CSV with an optional `value` header.
fn read_values(bytes: &[u8]) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 1 {
            bail!(
                "line {}: expected one value, found {} fields",
                line + 1,
                record.len()
            );
        }
        let field = &record[0];
        if line == 0 && field.eq_ignore_ascii_case("value") {
            continue;
        }
        let v: f64 = field
            .parse()
            .with_context(|| format!("line {}: {field:?} is not a number", line + 1))?;
        if !v.is_finite() {
            bail!("line {}: non-finite value", line + 1);
        }
        values.push(v);
    }
    Ok(values)
}

fn digest(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

enum Prepared {
    White {
        path: GridFunction,
        n: usize,
        noise_sq: f64,
    },
    Regression(PairedSample),
}

impl Prepared {
    /// Scan keeping every interval at or above `floor`.
    fn scan(&self, floor: f64) -> monoscan::Result<ScanResult> {
        match self {
            Prepared::White { path, n, noise_sq } => scan(path, *n, *noise_sq, Some(floor)),
            Prepared::Regression(sample) => scan_regression(sample, Some(floor)),
        }
    }
}

fn run_test(a: TestArgs) -> Result<()> {
    let bytes = fs::read(&a.data).with_context(|| format!("cannot read {}", a.data.display()))?;
    let values = read_values(&bytes)?;
    let (n, r, prepared) = match a.model {
        Model::White => {
            let sigma = a
                .sigma
                .context("--sigma is required for the white-noise model")?;
            let n = a.n.context("--n is required for the white-noise model")?;
            if values.first() != Some(&0.0) {
                bail!("a white-noise path must start at 0");
            }
            let cells = values.len().saturating_sub(1);
            if n < 1 || cells == 0 || cells % n != 0 {
                bail!("path has {cells} cells, not a positive multiple of n = {n}");
            }
            let path = GridFunction::on_unit_interval(values)?;
            (
                n,
                cells / n,
                Prepared::White {
                    path,
                    n,
                    noise_sq: sigma * sigma,
                },
            )
        }
        Model::Regression => {
            if a.sigma.is_some() {
                bail!("--sigma does not apply to the regression model (the variance is estimated)");
            }
            if values.len() % 2 != 0 {
                bail!(
                    "regression data must have an even number of observations, got {}",
                    values.len()
                );
            }
            if let Some(n) = a.n {
                if n != values.len() {
                    bail!("--n {n} does not match the {} observations", values.len());
                }
            }
            (
                values.len(),
                1,
                Prepared::Regression(pair_and_estimate(&values)?),
            )
        }
    };
    let (threshold, source) = match &a.table {
        Some(path) => {
            let table = read_table(path)?;
            if table.model != a.model || table.n != n || table.r != r {
                bail!(
                    "table is for ({}, n={}, r={}), data is ({}, n={n}, r={r})",
                    table.model,
                    table.n,
                    table.r,
                    a.model
                );
            }
            let q = table
                .quantile(a.alpha)
                .with_context(|| format!("table has no entry for level {}", a.alpha))?;
            (q, ThresholdSource::Table)
        }
        None => (analytic_threshold(a.alpha, n), ThresholdSource::Analytic),
    };
    let scanned = prepared.scan(threshold)?;
    let coarse = scanned.n as f64;
    let violating = violating_intervals(&scanned, threshold)?
        .into_iter()
        .map(|s| (s.i as f64 / coarse, s.j as f64 / coarse, s.stat))
        .collect();
    let report = TestReport {
        model: a.model,
        n,
        alpha: a.alpha,
        threshold,
        threshold_source: source,
        statistic: scanned.max_stat,
        reject: scanned.max_stat > threshold,
        violating,
        input_digest: digest(&bytes),
    };
    write(&a.out, &serde_json::to_string_pretty(&report)?)?;
    println!(
        "statistic {:.6} threshold {:.6} reject {}",
        report.statistic, report.threshold, report.reject
    );
    Ok(())
}

fn run_power(a: PowerArgs) -> Result<()> {
    let text = fs::read_to_string(&a.scenario)
        .with_context(|| format!("cannot read {}", a.scenario.display()))?;
    let scenarios: Vec<Scenario> = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a scenario list", a.scenario.display()))?;
    let tables = a
        .table
        .iter()
        .map(|p| read_table(p))
        .collect::<Result<Vec<_>>>()?;
    let mut reports: Vec<PowerReport> = Vec::with_capacity(scenarios.len());
    for (k, s) in scenarios.iter().enumerate() {
        let r = if s.model == Model::Regression { 1 } else { s.r };
        let table = tables
            .iter()
            .find(|t| t.model == s.model && t.n == s.n && t.r == r)
            .with_context(|| {
                format!("scenario {k}: no table for ({}, n={}, r={r})", s.model, s.n)
            })?;
        if table.quantile(s.alpha).is_none() {
            bail!("scenario {k}: table has no entry for level {}", s.alpha);
        }
        reports.push(power_study(
            &s.spec, s.model, s.n, r, s.alpha, table, a.reps, a.seed,
        )?);
    }
    write(&a.out, &serde_json::to_string_pretty(&reports)?)?;
    let csv_path = a.out.with_extension("csv");
    let mut w = csv::Writer::from_path(&csv_path)
        .with_context(|| format!("cannot write {}", csv_path.display()))?;
    w.write_record([
        "kind",
        "a",
        "sigma",
        "scale",
        "model",
        "n",
        "alpha",
        "threshold_used",
        "replications",
        "rejections",
        "power",
        "ci95_lo",
        "ci95_hi",
    ])?;
    for p in &reports {
        let kind = serde_json::to_value(p.spec.kind)?;
        w.write_record([
            kind.as_str().unwrap_or_default().to_string(),
            p.spec.a.to_string(),
            p.spec.sigma.to_string(),
            p.spec.scale.to_string(),
            p.model.to_string(),
            p.n.to_string(),
            p.alpha.to_string(),
            p.threshold_used.to_string(),
            p.replications.to_string(),
            p.rejections.to_string(),
            p.power.to_string(),
            p.ci95.0.to_string(),
            p.ci95.1.to_string(),
        ])?;
        println!(
            "{} {} n={} power {:.3}",
            kind.as_str().unwrap_or_default(),
            p.model,
            p.n,
            p.power
        );
    }
    w.flush()?;
    Ok(())
}

fn run_bound(a: BoundArgs) -> Result<()> {
    let n = usize::try_from(a.n)?;
    println!("analytic_threshold\t{}", analytic_threshold(a.alpha, n));
    if let Some(beta) = a.beta {
        println!(
            "guarantee_threshold\t{}",
            guarantee_threshold(a.alpha, beta, n)
        );
    }
    Ok(())
}
