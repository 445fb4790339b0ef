//! Uniform grids on `[0, x_max]` and densities sampled on them.
//!
//! Every integral in this crate is the composite trapezoid rule with spacing
//! `h = x_max / (n - 1)`. Densities keep the norm they were constructed with in
//! `declared_norm`; operators report norm drift instead of correcting it.

use crate::error::{Error, Result};

/// Fewer points than this and the trapezoid rule is not worth trusting.
pub const MIN_POINTS: usize = 16;

/// Uniform grid `x_i = i * h` on `[0, x_max]`, `i = 0..n-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_max: f64,
    n: usize,
}

impl Grid {
    pub fn new(x_max: f64, n: usize) -> Result<Self> {
        if !(x_max.is_finite() && x_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid x_max must be finite and positive, got {x_max}"
            )));
        }
        if n < MIN_POINTS {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least {MIN_POINTS} points, got {n}"
            )));
        }
        Ok(Self { x_max, n })
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.x_max / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        debug_assert!(i < self.n);
        i as f64 * self.spacing()
    }

    /// Grid on `[0, 2 x_max]` with bitwise the same spacing (2n - 1 points).
    /// Self-convolutions of densities on `self` live here.
    pub fn doubled(&self) -> Grid {
        Grid {
            x_max: 2.0 * self.x_max,
            n: 2 * self.n - 1,
        }
    }

    /// Index of the node at `x`, if `x` lies on one (relative tolerance 1e-9).
    pub fn node_at(&self, x: f64) -> Option<usize> {
        let h = self.spacing();
        let i = (x / h).round();
        if i < 0.0 || i > (self.n - 1) as f64 {
            return None;
        }
        let tol = 1e-9 * x.abs().max(1.0);
        if (i * h - x).abs() <= tol {
            Some(i as usize)
        } else {
            None
        }
    }
}

/// Trapezoid sum of `values` at spacing `h`: interior points get weight `h`,
/// the two endpoints `h/2`.
pub(crate) fn trapezoid(values: &[f64], h: f64) -> f64 {
    debug_assert!(values.len() >= 2);
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    h * (inner + 0.5 * (values[0] + values[values.len() - 1]))
}

/// A density sampled on a [`Grid`].
///
/// `declared_norm` is the trapezoid norm at construction time. The public
/// constructor rejects negative values; operator outputs, which may carry a
/// small negative overshoot, are built through an internal path and flag it
/// explicitly.
#[derive(Debug, Clone)]
pub struct GridPdf {
    grid: Grid,
    values: Vec<f64>,
    declared_norm: f64,
}

impl GridPdf {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values on a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "density value at node {i} is {v}; must be finite and nonnegative"
                )));
            }
        }
        Ok(Self::from_values_unchecked(grid, values))
    }

    /// Internal constructor for values that are finite but possibly slightly
    /// negative (kernel-perturbed operator outputs, CSV round-trips).
    pub(crate) fn from_values_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        let declared_norm = trapezoid(&values, grid.spacing());
        Self {
            grid,
            values,
            declared_norm,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Trapezoid norm at construction time.
    pub fn declared_norm(&self) -> f64 {
        self.declared_norm
    }

    /// Current trapezoid norm (equals `declared_norm` unless constructed
    /// from values that were since reinterpreted; kept separate so drift
    /// checks read as intent).
    pub fn norm(&self) -> f64 {
        trapezoid(&self.values, self.grid.spacing())
    }

    /// Trapezoid mean `integral of x y(x) dx`.
    pub fn mean(&self) -> f64 {
        let h = self.grid.spacing();
        let weighted: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| self.grid.x(i) * v)
            .collect();
        trapezoid(&weighted, h)
    }

    /// Entropy `- integral of y ln y dx` with the convention that any point
    /// where `y <= 0` contributes zero.
    pub fn entropy(&self) -> f64 {
        let h = self.grid.spacing();
        let integrand: Vec<f64> = self
            .values
            .iter()
            .map(|&v| if v > 0.0 { -v * v.ln() } else { 0.0 })
            .collect();
        trapezoid(&integrand, h)
    }

    /// L1 distance `integral of |y - z| dx`; both densities must share a grid.
    pub fn l1_distance(&self, other: &GridPdf) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(
                "L1 distance requires identical grids".into(),
            ));
        }
        let diff: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .collect();
        Ok(trapezoid(&diff, self.grid.spacing()))
    }

    /// Rescaled copy with trapezoid norm exactly computed as 1.
    pub fn normalized(&self) -> Result<GridPdf> {
        let norm = self.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Domain(format!(
                "cannot normalize a density with norm {norm}"
            )));
        }
        let values: Vec<f64> = self.values.iter().map(|v| v / norm).collect();
        Ok(GridPdf::from_values_unchecked(self.grid, values))
    }
}
