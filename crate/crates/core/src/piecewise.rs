//! Exact algebra on piecewise-constant and continuous piecewise-linear
//! functions over `[0, 1]`.
//!
//! Every integral here is closed form: two functions are first brought onto a
//! common partition, after which the integrand is a polynomial of degree at
//! most two on each subinterval and a fixed low-order rule (midpoint,
//! trapezoid, Simpson) is exact.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Two breakpoints closer than this are treated as the same point.
pub const BREAK_TOL: f64 = 1e-14;

/// Sorted partition of `[0, 1]`, always starting at `0` and ending at `1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakpoints {
    points: Vec<f64>,
}

impl Breakpoints {
    /// The trivial partition `{0, 1}`.
    pub fn unit() -> Self {
        Breakpoints {
            points: alloc::vec![0.0, 1.0],
        }
    }

    /// Builds a partition from arbitrary points in `[0, 1]`.
    ///
    /// Points are sorted, near-duplicates collapsed and the endpoints added.
    pub fn new<I: IntoIterator<Item = f64>>(points: I) -> Result<Self> {
        let mut interior = Vec::new();
        for p in points {
            if !p.is_finite() {
                return Err(Error::NonFinite("breakpoint"));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::OutsideDomain(p));
            }
            interior.push(p);
        }
        Ok(Self::from_sorted_candidates(interior))
    }

    fn from_sorted_candidates(mut candidates: Vec<f64>) -> Self {
        candidates.sort_by(f64::total_cmp);
        let mut points = Vec::with_capacity(candidates.len() + 2);
        points.push(0.0);
        for p in candidates {
            if p >= 1.0 - BREAK_TOL {
                break;
            }
            let last = points[points.len() - 1];
            if p - last > BREAK_TOL {
                points.push(p);
            }
        }
        points.push(1.0);
        Breakpoints { points }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }

    /// Number of breakpoints, endpoints included.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of subintervals.
    pub fn pieces(&self) -> usize {
        self.points.len() - 1
    }

    /// Interior points, i.e. everything except `0` and `1`.
    pub fn interior(&self) -> &[f64] {
        &self.points[1..self.points.len() - 1]
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    /// Sorted union with tolerance-based deduplication.
    pub fn merge(&self, other: &Breakpoints) -> Breakpoints {
        let mut all = Vec::with_capacity(self.len() + other.len());
        all.extend_from_slice(self.interior());
        all.extend_from_slice(other.interior());
        Self::from_sorted_candidates(all)
    }

    /// Index of the piece containing `x`; a breakpoint belongs to the piece on
    /// its right, except `1` which closes the last piece.
    pub(crate) fn locate(&self, x: f64) -> usize {
        let idx = self.points.partition_point(|&p| p <= x);
        idx.saturating_sub(1).min(self.pieces() - 1)
    }
}

/// Sorted union of two partitions (see [`Breakpoints::merge`]).
pub fn merge_breakpoints(a: &Breakpoints, b: &Breakpoints) -> Breakpoints {
    a.merge(b)
}

fn check_domain(x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::NonFinite("evaluation point"));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutsideDomain(x));
    }
    Ok(())
}

/// A function taking one value on each subinterval of a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    breaks: Breakpoints,
    values: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn new(breaks: Breakpoints, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.pieces() {
            return Err(Error::LengthMismatch {
                what: "piecewise-constant values",
                expected: breaks.pieces(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("piecewise-constant values"));
        }
        Ok(PiecewiseConstant { breaks, values })
    }

    pub fn constant(value: f64) -> Self {
        PiecewiseConstant {
            breaks: Breakpoints::unit(),
            values: alloc::vec![value],
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn breaks(&self) -> &Breakpoints {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Point value, taken from the piece to the right of a breakpoint.
    pub fn eval(&self, x: f64) -> Result<f64> {
        check_domain(x)?;
        Ok(self.value_at(x))
    }

    pub(crate) fn value_at(&self, x: f64) -> f64 {
        self.values[self.breaks.locate(x)]
    }

    /// Mean of the left and right limits at `x`.
    ///
    /// Equals the ordinary value away from breakpoints (within
    /// [`BREAK_TOL`]); at `0` and `1` only one side exists and is returned.
    pub fn eval_average(&self, x: f64) -> Result<f64> {
        check_domain(x)?;
        Ok(self.average_at(x))
    }

    pub(crate) fn average_at(&self, x: f64) -> f64 {
        let pts = self.breaks.as_slice();
        let k = pts.partition_point(|&p| p < x - BREAK_TOL);
        if k < pts.len() && (pts[k] - x).abs() <= BREAK_TOL {
            if k == 0 {
                self.values[0]
            } else if k == pts.len() - 1 {
                self.values[k - 1]
            } else {
                0.5 * (self.values[k - 1] + self.values[k])
            }
        } else {
            self.value_at(x)
        }
    }

    /// `∫₀ˣ f`.
    pub fn integral_to(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for ((a, b), v) in self.breaks.intervals().zip(&self.values) {
            if x <= a {
                break;
            }
            acc += v * (x.min(b) - a);
        }
        acc
    }

    /// `∫₀ˣ ∫₀ᵗ f(s) ds dt = ∫₀ˣ f(s) (x − s) ds`.
    pub fn second_integral_to(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for ((a, b), v) in self.breaks.intervals().zip(&self.values) {
            if x <= a {
                break;
            }
            let hi = x.min(b);
            acc += 0.5 * v * ((x - a) * (x - a) - (x - hi) * (x - hi));
        }
        acc
    }

    /// The antiderivative vanishing at `0`.
    pub fn antiderivative(&self) -> PiecewiseLinear {
        let mut nodes = Vec::with_capacity(self.breaks.len());
        let mut acc = 0.0;
        nodes.push(0.0);
        for ((a, b), v) in self.breaks.intervals().zip(&self.values) {
            acc += v * (b - a);
            nodes.push(acc);
        }
        PiecewiseLinear {
            breaks: self.breaks.clone(),
            node_values: nodes,
        }
    }

    /// The same function on a finer partition.
    pub fn refine(&self, breaks: &Breakpoints) -> PiecewiseConstant {
        let merged = self.breaks.merge(breaks);
        let values = merged
            .intervals()
            .map(|(a, b)| self.value_at(0.5 * (a + b)))
            .collect();
        PiecewiseConstant {
            breaks: merged,
            values,
        }
    }

    /// `alpha·f + beta·g`.
    pub fn lin_comb(alpha: f64, f: &Self, beta: f64, g: &Self) -> Self {
        let merged = f.breaks.merge(&g.breaks);
        let values = merged
            .intervals()
            .map(|(a, b)| {
                let m = 0.5 * (a + b);
                alpha * f.value_at(m) + beta * g.value_at(m)
            })
            .collect();
        PiecewiseConstant {
            breaks: merged,
            values,
        }
    }
}

/// A continuous function, linear between consecutive breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    breaks: Breakpoints,
    node_values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(breaks: Breakpoints, node_values: Vec<f64>) -> Result<Self> {
        if node_values.len() != breaks.len() {
            return Err(Error::LengthMismatch {
                what: "piecewise-linear node values",
                expected: breaks.len(),
                got: node_values.len(),
            });
        }
        if node_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("piecewise-linear node values"));
        }
        Ok(PiecewiseLinear {
            breaks,
            node_values,
        })
    }

    /// The affine function with the given values at `0` and `1`.
    pub fn line(at_zero: f64, at_one: f64) -> Self {
        PiecewiseLinear {
            breaks: Breakpoints::unit(),
            node_values: alloc::vec![at_zero, at_one],
        }
    }

    pub fn zero() -> Self {
        Self::line(0.0, 0.0)
    }

    pub fn breaks(&self) -> &Breakpoints {
        &self.breaks
    }

    pub fn node_values(&self) -> &[f64] {
        &self.node_values
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        check_domain(x)?;
        Ok(self.value_at(x))
    }

    pub(crate) fn value_at(&self, x: f64) -> f64 {
        let k = self.breaks.locate(x);
        let pts = self.breaks.as_slice();
        let (a, b) = (pts[k], pts[k + 1]);
        let (ya, yb) = (self.node_values[k], self.node_values[k + 1]);
        if b - a <= 0.0 {
            return ya;
        }
        let t = (x - a) / (b - a);
        ya + t * (yb - ya)
    }

    /// Piecewise-constant derivative.
    pub fn derivative(&self) -> PiecewiseConstant {
        let values = self
            .breaks
            .intervals()
            .zip(self.node_values.windows(2))
            .map(|((a, b), y)| (y[1] - y[0]) / (b - a))
            .collect();
        PiecewiseConstant {
            breaks: self.breaks.clone(),
            values,
        }
    }

    /// `∫₀ˣ g`.
    pub fn integral_to(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (k, (a, b)) in self.breaks.intervals().enumerate() {
            if x <= a {
                break;
            }
            let hi = x.min(b);
            let y_hi = if hi == b {
                self.node_values[k + 1]
            } else {
                self.value_at(hi)
            };
            acc += 0.5 * (self.node_values[k] + y_hi) * (hi - a);
        }
        acc
    }

    pub fn lin_comb(alpha: f64, f: &Self, beta: f64, g: &Self) -> Self {
        let merged = f.breaks.merge(&g.breaks);
        let node_values = merged
            .as_slice()
            .iter()
            .map(|&x| alpha * f.value_at(x) + beta * g.value_at(x))
            .collect();
        PiecewiseLinear {
            breaks: merged,
            node_values,
        }
    }

    /// The same function on a finer partition.
    pub fn refine(&self, breaks: &Breakpoints) -> PiecewiseLinear {
        let merged = self.breaks.merge(breaks);
        let node_values = merged
            .as_slice()
            .iter()
            .map(|&x| self.value_at(x))
            .collect();
        PiecewiseLinear {
            breaks: merged,
            node_values,
        }
    }
}

/// `∫₀¹ f·g` for two piecewise constants.
pub fn integrate_cc(f: &PiecewiseConstant, g: &PiecewiseConstant) -> f64 {
    f.breaks
        .merge(&g.breaks)
        .intervals()
        .map(|(a, b)| {
            let m = 0.5 * (a + b);
            f.value_at(m) * g.value_at(m) * (b - a)
        })
        .sum()
}

/// `∫₀¹ f·g` for a piecewise constant against a piecewise linear function.
pub fn integrate_cl(f: &PiecewiseConstant, g: &PiecewiseLinear) -> f64 {
    f.breaks
        .merge(&g.breaks)
        .intervals()
        .map(|(a, b)| {
            let fv = f.value_at(0.5 * (a + b));
            0.5 * fv * (g.value_at(a) + g.value_at(b)) * (b - a)
        })
        .sum()
}

/// `∫₀¹ f·g` for two piecewise linear functions.
pub fn integrate_ll(f: &PiecewiseLinear, g: &PiecewiseLinear) -> f64 {
    f.breaks
        .merge(&g.breaks)
        .intervals()
        .map(|(a, b)| {
            let m = 0.5 * (a + b);
            (b - a) / 6.0
                * (f.value_at(a) * g.value_at(a)
                    + 4.0 * f.value_at(m) * g.value_at(m)
                    + f.value_at(b) * g.value_at(b))
        })
        .sum()
}

/// `‖f − g‖_{L²(0,1)}` for a piecewise constant and a piecewise linear.
pub fn l2_distance_cl(f: &PiecewiseConstant, g: &PiecewiseLinear) -> f64 {
    let sq: f64 = f
        .breaks
        .merge(&g.breaks)
        .intervals()
        .map(|(a, b)| {
            let fv = f.value_at(0.5 * (a + b));
            let (ha, hb) = (fv - g.value_at(a), fv - g.value_at(b));
            (b - a) * (ha * ha + ha * hb + hb * hb) / 3.0
        })
        .sum();
    libm::sqrt(sq.max(0.0))
}
