#![allow(dead_code)]

use monoscan::{GridFunction, Vertex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Upper hull by gift wrapping: from the current vertex, step to the point
/// of largest slope, taking the farthest one on ties.
pub fn wrap_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull = vec![points[0]];
    let mut cur = 0;
    while cur + 1 < points.len() {
        let mut next = cur + 1;
        let mut best = slope(points[cur], points[next]);
        for k in cur + 2..points.len() {
            let s = slope(points[cur], points[k]);
            if s >= best {
                best = s;
                next = k;
            }
        }
        hull.push(points[next]);
        cur = next;
    }
    hull
}

fn slope(a: (f64, f64), b: (f64, f64)) -> f64 {
    (b.1 - a.1) / (b.0 - a.0)
}

/// Piecewise-linear interpolation of sorted vertices at `x`.
pub fn interp(vs: &[(f64, f64)], x: f64) -> f64 {
    if vs.len() == 1 {
        return vs[0].1;
    }
    let k = vs.partition_point(|v| v.0 <= x).clamp(1, vs.len() - 1);
    let (a, b) = (vs[k - 1], vs[k]);
    a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
}

pub fn knots(g: &GridFunction) -> Vec<(f64, f64)> {
    g.knots().map(|v| (v.x, v.value)).collect()
}

pub fn pairs(vs: &[Vertex]) -> Vec<(f64, f64)> {
    vs.iter().map(|v| (v.x, v.value)).collect()
}

/// Brute-force deviation between the majorant of `g` and `g`.
pub fn brute_deviation(g: &GridFunction) -> f64 {
    let pts = knots(g);
    let hull = wrap_hull(&pts);
    pts.iter()
        .map(|p| interp(&hull, p.0) - p.1)
        .fold(0.0, f64::max)
}

/// Random grid function with 2..=max_knots knots. Mixes Gaussian walks,
/// small-integer values (many collinear triples) and smooth shapes.
pub fn random_grid(rng: &mut ChaCha8Rng, max_knots: usize) -> GridFunction {
    let len = rng.random_range(2..=max_knots);
    let left = rng.random_range(-2.0..2.0);
    let step = rng.random_range(0.01..1.0);
    let values: Vec<f64> = match rng.random_range(0..3) {
        0 => {
            let mut s = 0.0;
            (0..len)
                .map(|_| {
                    s += rng.random_range(-1.0..1.0);
                    s
                })
                .collect()
        }
        1 => (0..len).map(|_| rng.random_range(-3..=3) as f64).collect(),
        _ => {
            let c = rng.random_range(-1.0..1.0);
            let w = rng.random_range(0.5..8.0);
            (0..len)
                .map(|k| (w * k as f64 / len as f64).sin() + c * k as f64)
                .collect()
        }
    };
    GridFunction::new(left, step, values).unwrap()
}

/// Largest gap between two chains at the knots of `g`.
pub fn chain_gap(a: &monoscan::ConcaveChain, b: &monoscan::ConcaveChain, g: &GridFunction) -> f64 {
    g.knots()
        .map(|v| (at(a, v.x) - at(b, v.x)).abs())
        .fold(0.0, f64::max)
}

/// Chain value at `x`, clamped into the chain's domain to absorb abscissa
/// round-off between a grid and its restrictions.
pub fn at(c: &monoscan::ConcaveChain, x: f64) -> f64 {
    c.eval(x.clamp(c.first().x, c.last().x)).unwrap()
}

pub fn scale_of(g: &GridFunction) -> f64 {
    1.0 + g.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
