//! Numerical building blocks: quadrature, bracketing root finders, grids.

pub mod quadrature;
pub mod root;

pub use quadrature::{integrate, Estimate, QuadOptions};
pub use root::{bisect, expand_bracket, BisectOptions, Bracketed};

/// `n` evenly spaced points from `lo` to `hi`, both included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { hi } else { lo + step * i as f64 }).collect()
        }
    }
}

/// Interior type grid `{step, 2*step, ..., 1 - step}`.
pub fn type_grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    (1..n).map(|k| k as f64 / n as f64).collect()
}
