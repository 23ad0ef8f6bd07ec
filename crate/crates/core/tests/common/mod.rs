#![allow(dead_code)]

use proptest::prelude::*;
use uzawa_ritz_core::piecewise::{Breakpoints, PiecewiseConstant, PiecewiseLinear};

/// Breakpoints on the grid `k/1000`, so a uniform midpoint rule with a
/// multiple of 1000 cells never straddles a jump.
pub fn grid_points(max: usize) -> impl Strategy<Value = Vec<f64>> {
    grid_points_on(max, 1000)
}

pub fn grid_points_on(max: usize, denom: u32) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1u32..denom, 0..=max)
        .prop_map(move |ks| ks.into_iter().map(|k| k as f64 / denom as f64).collect())
}

pub fn constant_fn(max_breaks: usize) -> impl Strategy<Value = PiecewiseConstant> {
    grid_points(max_breaks).prop_flat_map(|pts| {
        let br = Breakpoints::new(pts).unwrap();
        let n = br.pieces();
        prop::collection::vec(-5.0..5.0f64, n)
            .prop_map(move |v| PiecewiseConstant::new(br.clone(), v).unwrap())
    })
}

/// Nodes on the grid `k/100` with values in `[−1, 1]`. Slopes stay below
/// 200, which keeps the `h²` error of the midpoint rule on products of two
/// such functions under `1e-9` at `10⁶` cells.
pub fn linear_fn(max_breaks: usize) -> impl Strategy<Value = PiecewiseLinear> {
    grid_points_on(max_breaks, 100).prop_flat_map(|pts| {
        let br = Breakpoints::new(pts).unwrap();
        let n = br.len();
        prop::collection::vec(-1.0..1.0f64, n)
            .prop_map(move |v| PiecewiseLinear::new(br.clone(), v).unwrap())
    })
}

/// Composite midpoint rule on `cells` uniform cells.
pub fn midpoint<F: Fn(f64) -> f64>(cells: usize, f: F) -> f64 {
    let h = 1.0 / cells as f64;
    let mut acc = 0.0;
    for i in 0..cells {
        acc += f((i as f64 + 0.5) * h);
    }
    acc * h
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}
