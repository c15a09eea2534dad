//! Piecewise-linear functions on uniform grids and their least concave
//! majorants.
//!
//! The majorant of a piecewise-linear function is the upper concave hull of
//! its knots, built with a monotone-chain stack. Collinear vertices are always
//! collapsed, so a [`ConcaveChain`] has strictly decreasing slopes and a
//! canonical vertex set.

use serde::{Deserialize, Serialize};

use crate::error::{domain, precondition, Result};

/// Continuous piecewise-linear function given by its values on a uniform grid.
///
/// Knot `k` sits at `left + k * step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    left: f64,
    step: f64,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(left: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return domain(format!(
                "grid function needs at least 2 knots, got {}",
                values.len()
            ));
        }
        if !(step.is_finite() && step > 0.0) {
            return domain(format!("grid step must be positive and finite, got {step}"));
        }
        if !left.is_finite() {
            return domain("grid origin must be finite");
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("non-finite value at knot {k}"));
        }
        Ok(Self { left, step, values })
    }

    /// Grid function on `[0, 1]` with `values.len() - 1` equal cells.
    pub fn on_unit_interval(values: Vec<f64>) -> Result<Self> {
        let cells = values.len().saturating_sub(1).max(1);
        Self::new(0.0, 1.0 / cells as f64, values)
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of knots.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of grid cells, `len() - 1`.
    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn abscissa(&self, k: usize) -> f64 {
        self.left + k as f64 * self.step
    }

    pub fn right(&self) -> f64 {
        self.abscissa(self.cells())
    }

    pub fn knot(&self, k: usize) -> Vertex {
        Vertex::new(self.abscissa(k), self.values[k])
    }

    pub fn knots(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.len()).map(move |k| self.knot(k))
    }

    /// Restriction to knots `first..=last`, keeping absolute abscissas.
    pub fn restrict(&self, first: usize, last: usize) -> Result<Self> {
        if first >= last || last >= self.len() {
            return domain(format!(
                "invalid restriction {first}..={last} of a grid with {} knots",
                self.len()
            ));
        }
        Ok(Self {
            left: self.abscissa(first),
            step: self.step,
            values: self.values[first..=last].to_vec(),
        })
    }

    /// Returns `self + (offset + slope * x)`.
    pub fn add_linear(&self, offset: f64, slope: f64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| v + offset + slope * self.abscissa(k))
            .collect();
        Self { values, ..*self }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let values = self.values.iter().map(|v| v * factor).collect();
        Self { values, ..*self }
    }

    /// Linear interpolation at `x`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let tol = 1e-12 * (1.0 + self.right().abs());
        if !(x >= self.left - tol && x <= self.right() + tol) {
            return domain(format!("x = {x} outside [{}, {}]", self.left, self.right()));
        }
        let pos = ((x - self.left) / self.step).clamp(0.0, self.cells() as f64);
        let k = (pos.floor() as usize).min(self.cells() - 1);
        let w = pos - k as f64;
        Ok(self.values[k] * (1.0 - w) + self.values[k + 1] * w)
    }
}

/// A point `(x, value)` of a piecewise-linear function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub x: f64,
    pub value: f64,
}

impl Vertex {
    pub fn new(x: f64, value: f64) -> Self {
        Self { x, value }
    }
}

/// Positive when `c` lies strictly above the line through `a` and `b`
/// (for `a.x < b.x < c.x` this means `b` is not a strict hull vertex).
#[inline]
pub(crate) fn turn(ax: f64, av: f64, bx: f64, bv: f64, cx: f64, cv: f64) -> f64 {
    (bx - ax) * (cv - av) - (bv - av) * (cx - ax)
}

/// Appends `p` to an upper hull held as a stack, popping vertices that end up
/// on or below the new chord.
#[inline]
fn push_upper(stack: &mut Vec<Vertex>, p: Vertex) {
    while let [.., a, b] = stack.as_slice() {
        if turn(a.x, a.value, b.x, b.value, p.x, p.value) >= 0.0 {
            stack.pop();
        } else {
            break;
        }
    }
    stack.push(p);
}

/// Least concave majorant, stored as its vertex list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcaveChain {
    vertices: Vec<Vertex>,
}

impl ConcaveChain {
    /// Upper concave hull of points sorted by strictly increasing abscissa,
    /// i.e. the majorant of their piecewise-linear interpolant.
    pub fn from_points<I: IntoIterator<Item = Vertex>>(points: I) -> Result<Self> {
        let mut stack: Vec<Vertex> = Vec::new();
        let mut last_x = f64::NEG_INFINITY;
        for p in points {
            if !p.x.is_finite() || !p.value.is_finite() {
                return domain("non-finite point");
            }
            if p.x <= last_x {
                return domain(format!(
                    "abscissas must increase strictly ({last_x} then {})",
                    p.x
                ));
            }
            last_x = p.x;
            push_upper(&mut stack, p);
        }
        if stack.is_empty() {
            return domain("no points");
        }
        Ok(Self { vertices: stack })
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn first(&self) -> Vertex {
        self.vertices[0]
    }

    pub fn last(&self) -> Vertex {
        self.vertices[self.vertices.len() - 1]
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.vertices
            .windows(2)
            .map(|w| (w[1].value - w[0].value) / (w[1].x - w[0].x))
            .collect()
    }

    /// Value of the chain at `x`, interpolating between bracketing vertices.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = (self.first().x, self.last().x);
        if !(x >= lo && x <= hi) {
            return domain(format!("x = {x} outside chain domain [{lo}, {hi}]"));
        }
        let j = self.vertices.partition_point(|v| v.x < x);
        let b = self.vertices[j];
        if b.x == x || j == 0 {
            return Ok(b.value);
        }
        let a = self.vertices[j - 1];
        Ok(interpolate(a, b, x))
    }

    /// Adds `offset + slope * x` to every vertex.
    pub fn add_linear(&self, offset: f64, slope: f64) -> Self {
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|v| Vertex::new(v.x, v.value + offset + slope * v.x))
                .collect(),
        }
    }
}

#[inline]
fn interpolate(a: Vertex, b: Vertex, x: f64) -> f64 {
    a.value + (b.value - a.value) * ((x - a.x) / (b.x - a.x))
}

/// Least concave majorant of `g` over its whole domain.
pub fn lcm(g: &GridFunction) -> Result<ConcaveChain> {
    if g.len() < 2 {
        return domain("least concave majorant needs at least 2 knots");
    }
    ConcaveChain::from_points(g.knots())
}

/// Majorant of the concatenation of two contiguous pieces, given the
/// majorants of the pieces. The left chain's last vertex must coincide with
/// the right chain's first vertex, up to floating-point round-off.
pub fn concat_lcm(left: &ConcaveChain, right: &ConcaveChain) -> Result<ConcaveChain> {
    let (l, r) = (left.last(), right.first());
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
    if !close(l.x, r.x) || !close(l.value, r.value) {
        return precondition(format!(
            "chains do not meet: left ends at ({}, {}), right starts at ({}, {})",
            l.x, l.value, r.x, r.value
        ));
    }
    let mut stack = left.vertices.clone();
    for &p in &right.vertices[1..] {
        push_upper(&mut stack, p);
    }
    Ok(ConcaveChain { vertices: stack })
}

/// Largest gap between `chain` and `g` over the knots of `g`, with the
/// smallest knot index attaining it. Both are piecewise linear with breaks
/// only at knots of `g`, so this is the supremum over the whole interval.
pub fn max_deviation(chain: &ConcaveChain, g: &GridFunction) -> Result<(f64, usize)> {
    let tol = 1e-9 * (1.0 + g.left().abs().max(g.right().abs()));
    if (chain.first().x - g.left()).abs() > tol || (chain.last().x - g.right()).abs() > tol {
        return precondition(format!(
            "chain domain [{}, {}] differs from grid domain [{}, {}]",
            chain.first().x,
            chain.last().x,
            g.left(),
            g.right()
        ));
    }
    let vs = chain.vertices();
    let mut seg = 0;
    let mut best = (0.0, 0);
    for (k, knot) in g.knots().enumerate() {
        while seg + 2 < vs.len() && vs[seg + 1].x <= knot.x {
            seg += 1;
        }
        let hull = if vs.len() == 1 {
            vs[0].value
        } else if knot.x == vs[seg + 1].x {
            vs[seg + 1].value
        } else {
            interpolate(vs[seg], vs[seg + 1], knot.x)
        };
        let gap = hull - knot.value;
        if gap > best.0 {
            best = (gap, k);
        }
    }
    Ok(best)
}
