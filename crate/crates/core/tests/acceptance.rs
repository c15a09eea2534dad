//! Acceptance run: every criterion prints one PASS/FAIL line; the process
//! fails if any criterion fails.

mod common;

use std::time::Instant;

use common::*;
use monoscan::calibration::{null_statistics, simulate_majorant_gap};
use monoscan::rng::{configure_threads_from_env, replicate, stream};
use monoscan::{
    analytic_threshold, calibrate, concat_lcm, detectability, lcm, pair_and_estimate, power_study,
    scan, scan_regression, simulate_regression_sample, simulate_white_path, z_tail_bound,
    AlternativeSpec, Model, QuantileTable, SignalKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WHITE_N: usize = 100;
const WHITE_R: usize = 200;
const LEVEL_R: usize = 20;
const TABLE2: [(f64, f64); 10] = [
    (0.01, 2.150903),
    (0.02, 2.090423),
    (0.03, 2.013185),
    (0.04, 1.998276),
    (0.05, 1.970304),
    (0.06, 1.950475),
    (0.07, 1.938510),
    (0.08, 1.906807),
    (0.09, 1.892049),
    (0.10, 1.870080),
];

struct Tables {
    white: QuantileTable,
    regression: QuantileTable,
    regression_1000: QuantileTable,
    regression_50: QuantileTable,
    level_white: QuantileTable,
    level_regression: QuantileTable,
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            detail: String::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(&what);
        if !ok {
            self.detail.push_str(" [miss]");
            self.pass = false;
        }
    }

    fn near(&mut self, label: &str, got: f64, want: f64, tol: f64) {
        self.check(
            (got - want).abs() <= tol,
            format!("{label} {got:.4} vs {want} ±{tol}"),
        );
    }
}

fn white_threshold_table(t: &Tables) -> Outcome {
    let mut o = Outcome::new();
    let q = t.white.quantile(0.05).unwrap();
    o.near("s(0.05,100) at r=200", q, 2.278482, 0.08);
    o.check(
        (1.46279052..=2.60451660).contains(&q),
        "inside [1.46279052, 2.60451660]".into(),
    );
    o
}

fn regression_threshold_tables(t: &Tables) -> Outcome {
    let mut o = Outcome::new();
    for (alpha, want) in TABLE2 {
        o.near(
            &format!("r({alpha:.2},100)"),
            t.regression.quantile(alpha).unwrap(),
            want,
            0.06,
        );
    }
    o.near(
        "r(0.05,1000)",
        t.regression_1000.quantile(0.05).unwrap(),
        2.295896,
        0.08,
    );
    o
}

fn rejection_rate(stats: &[f64], threshold: f64) -> f64 {
    stats.iter().filter(|s| **s > threshold).count() as f64 / stats.len() as f64
}

fn exact_level(t: &Tables) -> Outcome {
    let mut o = Outcome::new();
    let se = (0.05f64 * 0.95 / 2000.0).sqrt();
    let fresh = null_statistics(Model::White, WHITE_N, LEVEL_R, 2000, 303).unwrap();
    let rate = rejection_rate(&fresh, t.level_white.quantile(0.05).unwrap());
    o.check(
        (rate - 0.05).abs() <= 3.0 * se,
        format!("white (r={LEVEL_R}) rate {rate:.4}"),
    );
    let fresh = null_statistics(Model::Regression, 100, 1, 2000, 304).unwrap();
    let rate = rejection_rate(&fresh, t.level_regression.quantile(0.05).unwrap());
    o.check(
        (rate - 0.05).abs() <= 3.0 * se,
        format!("regression rate {rate:.4}"),
    );
    o.detail.push_str(&format!(" (3 SE = {:.4})", 3.0 * se));
    o
}

fn power(
    spec: &AlternativeSpec,
    model: Model,
    table: &QuantileTable,
    reps: usize,
    seed: u64,
) -> f64 {
    power_study(spec, model, table.n, table.r, 0.05, table, reps, seed)
        .unwrap()
        .power
}

fn table4(t: &Tables) -> Outcome {
    let mut o = Outcome::new();
    let f = |k| AlternativeSpec::new(k, 0.1);
    o.near(
        "reg f1",
        power(
            &f(SignalKind::F1),
            Model::Regression,
            &t.regression,
            1000,
            41,
        ),
        0.99,
        0.03,
    );
    o.near(
        "reg f3",
        power(
            &f(SignalKind::F3),
            Model::Regression,
            &t.regression,
            1000,
            43,
        ),
        0.98,
        0.03,
    );
    o.near(
        "reg f7",
        power(
            &f(SignalKind::F7),
            Model::Regression,
            &t.regression,
            1000,
            47,
        ),
        0.68,
        0.06,
    );
    o.near(
        "white f7 r=200",
        power(&f(SignalKind::F7), Model::White, &t.white, 1000, 48),
        0.79,
        0.08,
    );
    o
}

fn table5(t: &Tables) -> Outcome {
    let mut o = Outcome::new();
    for (sigma, seed) in [(0.025, 51), (0.05, 52)] {
        let p = power(
            &AlternativeSpec::gijbels(0.45, sigma),
            Model::Regression,
            &t.regression,
            1000,
            seed,
        );
        o.check(p >= 0.99, format!("a=0.45 σ={sigma} {p:.3} >= 0.99"));
    }
    for (sigma, seed) in [(0.025, 53), (0.05, 54), (0.1, 55)] {
        let p = power(
            &AlternativeSpec::gijbels(0.0, sigma),
            Model::Regression,
            &t.regression,
            1000,
            seed,
        );
        o.check(p <= 0.05, format!("a=0 σ={sigma} {p:.3} <= 0.05"));
    }
    o
}

fn table6(t: &Tables) -> Outcome {
    let mut o = Outcome::new();
    let table = &t.regression_50;
    o.detail = format!(
        "threshold {:.4} (published 1.837931); ",
        table.quantile(0.05).unwrap()
    );
    let f3 = AlternativeSpec::new(SignalKind::F3, 0.1);
    let f5 = AlternativeSpec::new(SignalKind::F5, 0.004f64.sqrt());
    o.near(
        "f3",
        power(&f3, Model::Regression, table, 1000, 61),
        0.84,
        0.05,
    );
    o.near(
        "f5",
        power(&f5, Model::Regression, table, 1000, 62),
        0.90,
        0.05,
    );
    let g = AlternativeSpec::gijbels(0.45, 0.05);
    o.near(
        "gijbels a=0.45 σ=0.05",
        power(&g, Model::Regression, table, 1000, 63),
        0.954,
        0.03,
    );
    o
}

fn geometry_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut hull, mut concat, mut linear, mut scale) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let g = random_grid(&mut rng, 64);
        let s = scale_of(&g);
        let direct = lcm(&g).unwrap();
        let wrapped = wrap_hull(&knots(&g));
        for v in g.knots() {
            hull = hull.max((direct.eval(v.x).unwrap() - interp(&wrapped, v.x)).abs() / s);
        }
        for split in 1..g.cells() {
            let l = lcm(&g.restrict(0, split).unwrap()).unwrap();
            let r = lcm(&g.restrict(split, g.cells()).unwrap()).unwrap();
            concat = concat.max(chain_gap(&concat_lcm(&l, &r).unwrap(), &direct, &g) / s);
        }
        let (a, b, c) = (
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(0.1..10.0),
        );
        let shifted = lcm(&g.add_linear(a, b)).unwrap();
        let scaled = lcm(&g.scaled(c)).unwrap();
        for v in g.knots() {
            let base = direct.eval(v.x).unwrap();
            linear = linear.max(
                (shifted.eval(v.x).unwrap() - base - a - b * v.x).abs()
                    / (s + a.abs() + b.abs() * (1.0 + v.x.abs())),
            );
            scale = scale.max((scaled.eval(v.x).unwrap() - c * base).abs() / (c * s));
        }
    }
    let mut o = Outcome::new();
    o.check(hull <= 1e-9, format!("hull err {hull:.1e}"));
    o.check(concat <= 1e-9, format!("concat err {concat:.1e}"));
    o.check(linear <= 1e-9, format!("linear err {linear:.1e}"));
    o.check(scale <= 1e-9, format!("scale err {scale:.1e}"));
    o.detail.push_str(" over 10^4 grids");
    o
}

fn invariances(t: &Tables) -> Outcome {
    let reg_q = t.regression.quantile(0.05).unwrap();
    let white_q = t.level_white.quantile(0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut shift_w, mut shift_r, mut scale_r) = (0, 0, 0);
    let (mut rej_w, mut rej_r) = (0, 0);
    for case in 0..1000u64 {
        let points: Vec<f64> = (0..6).map(|_| rng.random_range(-0.5..0.5)).collect();
        let c = rng.random_range(-5.0..5.0);
        let k = rng.random_range(0.05..20.0);
        let sigma = rng.random_range(0.05..1.0);
        let base = AlternativeSpec::custom(points.clone(), sigma);
        let moved = AlternativeSpec::custom(points.iter().map(|p| p + c).collect(), sigma);

        let a = simulate_white_path(&base, WHITE_N, LEVEL_R, &mut stream(900, case)).unwrap();
        let b = simulate_white_path(&moved, WHITE_N, LEVEL_R, &mut stream(900, case)).unwrap();
        let sa = scan(&a, WHITE_N, sigma * sigma, None).unwrap().max_stat;
        let sb = scan(&b, WHITE_N, sigma * sigma, None).unwrap().max_stat;
        shift_w += usize::from((sa > white_q) != (sb > white_q));
        rej_w += usize::from(sa > white_q);

        let y = simulate_regression_sample(&base, 100, &mut stream(901, case)).unwrap();
        let y_moved = simulate_regression_sample(&moved, 100, &mut stream(901, case)).unwrap();
        let y_scaled: Vec<f64> = y.iter().map(|v| v * k).collect();
        let stat = |d: &[f64]| {
            scan_regression(&pair_and_estimate(d).unwrap(), None)
                .unwrap()
                .max_stat
        };
        let s0 = stat(&y);
        shift_r += usize::from((s0 > reg_q) != (stat(&y_moved) > reg_q));
        scale_r += usize::from((s0 > reg_q) != (stat(&y_scaled) > reg_q));
        rej_r += usize::from(s0 > reg_q);
    }
    let mut o = Outcome::new();
    o.check(shift_w == 0, format!("white shift flips {shift_w}/1000"));
    o.check(
        shift_r == 0,
        format!("regression shift flips {shift_r}/1000"),
    );
    o.check(
        scale_r == 0,
        format!("regression scale flips {scale_r}/1000"),
    );
    o.detail
        .push_str(&format!(" (rejections: white {rej_w}, regression {rej_r})"));
    o
}

fn bound_ordering(t: &Tables) -> Outcome {
    let mut o = Outcome::new();
    let tables = [
        &t.white,
        &t.regression,
        &t.regression_1000,
        &t.regression_50,
        &t.level_white,
        &t.level_regression,
    ];
    let violations = tables
        .iter()
        .flat_map(|tb| tb.entries.iter().map(move |e| (tb.n, e)))
        .filter(|(n, e)| e.quantile > analytic_threshold(e.alpha, *n))
        .count();
    o.check(
        violations == 0,
        format!("{violations} table entries above the analytic bound"),
    );
    let z = replicate(10, 5000, |rng| simulate_majorant_gap(1000, rng).unwrap());
    for x in [1.0, 2.0, 3.0] {
        let bound = z_tail_bound(x);
        let frac = z.iter().filter(|v| **v > x).count() as f64 / z.len() as f64;
        let se = (bound * (1.0 - bound) / z.len() as f64).sqrt();
        o.check(
            frac <= bound + 3.0 * se,
            format!("P(Z>{x}) {frac:.4} <= {bound:.4}"),
        );
    }
    o
}

fn detectability_functional() -> Outcome {
    let mut o = Outcome::new();
    let decreasing = [
        AlternativeSpec::gijbels(0.0, 0.1),
        AlternativeSpec::new(SignalKind::Constant, 0.1),
        AlternativeSpec::custom(vec![3.0, 1.0, 1.0, -2.0], 0.1),
    ];
    let worst = decreasing
        .iter()
        .map(|s| detectability(s.as_fn().unwrap(), 0.0, 1.0, 512).unwrap())
        .fold(0.0, f64::max);
    o.check(worst == 0.0, format!("non-increasing max {worst:e}"));
    let lin = detectability(|u| u, 0.0, 1.0, 512).unwrap();
    o.near("f(u)=u", lin, 0.125, 1e-4);
    o
}

fn main() {
    configure_threads_from_env();
    let started = Instant::now();
    let alphas: Vec<f64> = TABLE2.iter().map(|(a, _)| *a).collect();
    let tables = Tables {
        white: calibrate(Model::White, WHITE_N, WHITE_R, 2000, &[0.05], 1).unwrap(),
        regression: calibrate(Model::Regression, 100, 1, 5000, &alphas, 1).unwrap(),
        regression_1000: calibrate(Model::Regression, 1000, 1, 2000, &[0.05], 1).unwrap(),
        regression_50: calibrate(Model::Regression, 50, 1, 5000, &[0.05], 1).unwrap(),
        level_white: calibrate(Model::White, WHITE_N, LEVEL_R, 5000, &[0.05], 2).unwrap(),
        level_regression: calibrate(Model::Regression, 100, 1, 5000, &[0.05], 2).unwrap(),
    };
    let criteria: Vec<Criterion> = vec![
        (
            "white-noise threshold",
            Box::new(|| white_threshold_table(&tables)),
        ),
        (
            "regression thresholds",
            Box::new(|| regression_threshold_tables(&tables)),
        ),
        ("exact level", Box::new(|| exact_level(&tables))),
        ("power, Baraud functions", Box::new(|| table4(&tables))),
        ("power, Gijbels family", Box::new(|| table5(&tables))),
        ("small-sample power", Box::new(|| table6(&tables))),
        ("geometry oracles", Box::new(geometry_oracles)),
        ("statistic invariances", Box::new(|| invariances(&tables))),
        (
            "analytic-bound ordering",
            Box::new(|| bound_ordering(&tables)),
        ),
        (
            "detectability functional",
            Box::new(detectability_functional),
        ),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        failed += usize::from(!o.pass);
        println!(
            "criterion {:>2} {} {name}: {}",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.0?}",
        criteria.len() - failed,
        criteria.len(),
        started.elapsed()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
