//! Trapezoid self-convolution `c(s) = integral of p(u) p(s - u) du` on the
//! doubled grid `[0, 2 x_max]`.
//!
//! Each output node is an independent window dot-product, so the map
//! parallelizes over rows. Both execution paths share [`row`], which fixes the
//! per-point summation order (ascending `u`), making serial and parallel
//! results bitwise identical.

use crate::grid::GridPdf;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// One convolution row: trapezoid over the overlap window
/// `u in [max(0, s_j - x_max), min(s_j, x_max)]` at spacing `h`.
/// Zero-width windows (j = 0 and j = 2n - 2) integrate to zero.
pub(crate) fn row(values: &[f64], j: usize, h: f64) -> f64 {
    let n = values.len();
    let lo = j.saturating_sub(n - 1);
    let hi = j.min(n - 1);
    if lo == hi {
        return 0.0;
    }
    let a = &values[lo..=hi];
    let b = &values[j - hi..=j - lo];
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b.iter().rev()) {
        sum += x * y;
    }
    let ends = a[0] * b[b.len() - 1] + a[a.len() - 1] * b[0];
    h * (sum - 0.5 * ends)
}

/// Rows `0..=j_max`, sequential.
pub(crate) fn rows_serial(values: &[f64], j_max: usize, h: f64) -> Vec<f64> {
    (0..=j_max).map(|j| row(values, j, h)).collect()
}

/// Rows `0..=j_max`, data-parallel over output nodes.
#[cfg(feature = "parallel")]
pub(crate) fn rows_parallel(values: &[f64], j_max: usize, h: f64) -> Vec<f64> {
    (0..=j_max)
        .into_par_iter()
        .map(|j| row(values, j, h))
        .collect()
}

/// Rows `0..=j_max` on the default execution path for this build.
pub(crate) fn rows(values: &[f64], j_max: usize, h: f64) -> Vec<f64> {
    #[cfg(feature = "parallel")]
    {
        rows_parallel(values, j_max, h)
    }
    #[cfg(not(feature = "parallel"))]
    {
        rows_serial(values, j_max, h)
    }
}

/// Self-convolution of `p` on the doubled grid, default execution path.
pub fn self_convolution(p: &GridPdf) -> GridPdf {
    assemble(
        p,
        rows(p.values(), 2 * (p.grid().len() - 1), p.grid().spacing()),
    )
}

/// Self-convolution forced down the sequential path.
pub fn self_convolution_serial(p: &GridPdf) -> GridPdf {
    assemble(
        p,
        rows_serial(p.values(), 2 * (p.grid().len() - 1), p.grid().spacing()),
    )
}

/// Self-convolution forced down the rayon path.
#[cfg(feature = "parallel")]
pub fn self_convolution_parallel(p: &GridPdf) -> GridPdf {
    assemble(
        p,
        rows_parallel(p.values(), 2 * (p.grid().len() - 1), p.grid().spacing()),
    )
}

fn assemble(p: &GridPdf, values: Vec<f64>) -> GridPdf {
    GridPdf::from_values_unchecked(p.grid().doubled(), values)
}
