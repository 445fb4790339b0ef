//! Stock density families used as initial data and comparison targets.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridPdf};
use std::fmt;

/// Families are sampled pointwise; no renormalization is applied, so the
/// trapezoid norm of the result carries both the discretization error and any
/// mass beyond `x_max` (reported separately as `tail_mass`).
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `rate * exp(-rate x)`, unit mass on the half-line.
    Exponential { rate: f64 },
    /// `x * exp(-x)`, unit mass, mean 2.
    Gamma1,
    /// Uniform density `1/(hi - lo)` on `[lo, hi]`. Jump points that fall on
    /// interior grid nodes take the half-maximum value, which keeps the
    /// trapezoid norm and mean exact there.
    Rectangular { lo: f64, hi: f64 },
    /// `1/(1 + x)^2`, unit mass but infinite mean; the heavy-tail stress case.
    ParetoLike,
    /// `rate * exp(-rate x) / (1 - exp(-rate cap))` on `[0, cap]`, zero after.
    TruncatedExponential { rate: f64, cap: f64 },
}

impl Family {
    fn validate(&self, grid: Grid) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            Family::Exponential { rate } => {
                if !(rate.is_finite() && rate > 0.0) {
                    return bad(format!("exponential rate must be positive, got {rate}"));
                }
            }
            Family::Gamma1 => {}
            Family::Rectangular { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
                    return bad(format!("rectangular needs 0 <= lo < hi, got [{lo}, {hi}]"));
                }
                if hi > grid.x_max() {
                    return bad(format!(
                        "rectangular support ends at {hi}, beyond x_max = {}",
                        grid.x_max()
                    ));
                }
            }
            Family::ParetoLike => {}
            Family::TruncatedExponential { rate, cap } => {
                if !(rate.is_finite() && rate > 0.0) {
                    return bad(format!("truncation rate must be positive, got {rate}"));
                }
                if !(cap.is_finite() && cap > 0.0 && cap <= grid.x_max()) {
                    return bad(format!(
                        "cap must lie in (0, x_max = {}], got {cap}",
                        grid.x_max()
                    ));
                }
            }
        }
        Ok(())
    }

    /// Mass of the ideal density beyond `x_max`, in closed form.
    fn tail_mass(&self, x_max: f64) -> f64 {
        match *self {
            Family::Exponential { rate } => (-rate * x_max).exp(),
            Family::Gamma1 => (1.0 + x_max) * (-x_max).exp(),
            Family::Rectangular { .. } => 0.0,
            Family::ParetoLike => 1.0 / (1.0 + x_max),
            Family::TruncatedExponential { .. } => 0.0,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Family::Exponential { rate } => write!(f, "exp:{rate}"),
            Family::Gamma1 => write!(f, "gamma1"),
            Family::Rectangular { lo, hi } => write!(f, "rect:{lo},{hi}"),
            Family::ParetoLike => write!(f, "pareto"),
            Family::TruncatedExponential { rate, cap } => write!(f, "truncexp:{rate},{cap}"),
        }
    }
}

/// A family sampled on a grid, with the analytic tail report.
#[derive(Debug, Clone)]
pub struct SampledPdf {
    pub pdf: GridPdf,
    /// Ideal mass beyond the grid, in closed form. Zero for compactly
    /// supported families that fit the grid.
    pub tail_mass: f64,
}

/// Sample a family on `grid`.
///
/// Discontinuous families use the half-maximum convention at jumps that land
/// on interior nodes; at a boundary node the restriction to the grid has no
/// far side, so the one-sided value stands.
pub fn make_pdf(family: &Family, grid: Grid) -> Result<SampledPdf> {
    family.validate(grid)?;
    let n = grid.len();
    let values: Vec<f64> = match *family {
        Family::Exponential { rate } => (0..n).map(|i| rate * (-rate * grid.x(i)).exp()).collect(),
        Family::Gamma1 => (0..n)
            .map(|i| {
                let x = grid.x(i);
                x * (-x).exp()
            })
            .collect(),
        Family::Rectangular { lo, hi } => {
            let v = 1.0 / (hi - lo);
            sample_with_jumps(grid, &[(lo, 0.0, v), (hi, v, 0.0)], |x| {
                if lo < x && x < hi {
                    v
                } else {
                    0.0
                }
            })
        }
        Family::ParetoLike => (0..n)
            .map(|i| {
                let t = 1.0 + grid.x(i);
                1.0 / (t * t)
            })
            .collect(),
        Family::TruncatedExponential { rate, cap } => {
            let z = 1.0 - (-rate * cap).exp();
            let f = move |x: f64| rate * (-rate * x).exp() / z;
            sample_with_jumps(grid, &[(cap, f(cap), 0.0)], move |x| {
                if x < cap {
                    f(x)
                } else {
                    0.0
                }
            })
        }
    };
    let pdf = GridPdf::new(grid, values)?;
    Ok(SampledPdf {
        pdf,
        tail_mass: family.tail_mass(grid.x_max()),
    })
}

/// Pointwise sampling with jump handling: each `(x_j, left, right)` names a
/// jump location and its one-sided values. On an interior node the sample is
/// the average; on a boundary node the inward-facing limit.
fn sample_with_jumps(grid: Grid, jumps: &[(f64, f64, f64)], f: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = grid.len();
    (0..n)
        .map(|i| {
            let x = grid.x(i);
            for &(xj, left, right) in jumps {
                if grid.node_at(xj) == Some(i) {
                    return if i == 0 {
                        right
                    } else if i == n - 1 {
                        left
                    } else {
                        0.5 * (left + right)
                    };
                }
            }
            f(x)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample(family: Family, x_max: f64, n: usize) -> SampledPdf {
        make_pdf(&family, Grid::new(x_max, n).unwrap()).unwrap()
    }

    #[test]
    fn exponential_norm_tracks_trapezoid_error() {
        // h^2/12 curvature error dominates at moderate resolution and falls
        // out at fine resolution.
        let coarse = sample(Family::Exponential { rate: 1.0 }, 60.0, 6000);
        assert!((coarse.pdf.norm() - 1.0).abs() < 1e-5);
        let fine = sample(Family::Exponential { rate: 1.0 }, 60.0, 800_001);
        assert!((fine.pdf.norm() - 1.0).abs() < 1e-9);
        assert_relative_eq!(coarse.tail_mass, (-60.0f64).exp());
    }

    #[test]
    fn slow_exponential_needs_a_longer_window() {
        let s = sample(Family::Exponential { rate: 1.0 / 3.0 }, 72.0, 400_001);
        assert!((s.pdf.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exponential_mean() {
        let s = sample(Family::Exponential { rate: 1.0 }, 60.0, 20_001);
        assert!((s.pdf.mean() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gamma_norm_and_mean() {
        // Norm error is the h^2/12 boundary-slope term (8.3e-6 at h = 0.01);
        // the mean integrand has no boundary slope, so it lands orders closer.
        let s = sample(Family::Gamma1, 40.0, 4001);
        let norm_err = (s.pdf.norm() - 1.0).abs();
        assert!(norm_err < 1e-5, "norm error {norm_err}");
        assert!(norm_err > 1e-6, "suspiciously exact: {norm_err}");
        assert!((s.pdf.mean() - 2.0).abs() < 1e-8);
        assert_relative_eq!(s.tail_mass, 41.0 * (-40.0f64).exp());
    }

    #[test]
    fn pareto_norm_matches_truncated_mass() {
        let s = sample(Family::ParetoLike, 1000.0, 500_001);
        let expected = 1.0 - 1.0 / 1001.0;
        assert!((s.pdf.norm() - expected).abs() < 1e-6);
        assert_relative_eq!(s.tail_mass, 1.0 / 1001.0);
    }

    #[test]
    fn rectangular_is_exact_on_aligned_grids() {
        // Jumps at 2 and 4 sit on nodes of [0, 60] with n = 6001; the
        // half-maximum convention makes norm and mean exact.
        let s = sample(Family::Rectangular { lo: 2.0, hi: 4.0 }, 60.0, 6001);
        assert_relative_eq!(s.pdf.norm(), 1.0, epsilon = 1e-13);
        assert_relative_eq!(s.pdf.mean(), 3.0, epsilon = 1e-12);
        let g = s.pdf.grid();
        let i2 = g.node_at(2.0).unwrap();
        assert_eq!(s.pdf.values()[i2], 0.25);
        assert_eq!(s.pdf.values()[i2 - 1], 0.0);
        assert_eq!(s.pdf.values()[i2 + 1], 0.5);
    }

    #[test]
    fn rectangular_off_node_jumps_still_integrate_close() {
        let s = sample(Family::Rectangular { lo: 2.0, hi: 4.0 }, 60.0, 4000);
        let h = s.pdf.grid().spacing();
        assert!((s.pdf.norm() - 1.0).abs() < h);
    }

    #[test]
    fn truncated_exponential_mean_closed_form() {
        let s = sample(
            Family::TruncatedExponential {
                rate: 1.0,
                cap: 2.0,
            },
            2.0,
            2001,
        );
        let expected = 1.0 + 2.0 / (1.0 - (2.0f64).exp());
        assert!((s.pdf.mean() - expected).abs() < 1e-6);
        // Cap at the boundary node keeps the full one-sided value.
        let last = *s.pdf.values().last().unwrap();
        assert_relative_eq!(
            last,
            (-2.0f64).exp() / (1.0 - (-2.0f64).exp()),
            epsilon = 1e-14
        );
    }

    #[test]
    fn truncated_exponential_interior_cap_takes_half_value() {
        let s = sample(
            Family::TruncatedExponential {
                rate: 1.0,
                cap: 2.0,
            },
            4.0,
            4001,
        );
        let g = s.pdf.grid();
        let i = g.node_at(2.0).unwrap();
        let full = (-2.0f64).exp() / (1.0 - (-2.0f64).exp());
        assert_relative_eq!(s.pdf.values()[i], 0.5 * full, epsilon = 1e-14);
        assert_eq!(s.pdf.values()[i + 1], 0.0);
    }

    #[test]
    fn parameter_validation() {
        let g = Grid::new(10.0, 101).unwrap();
        assert!(make_pdf(&Family::Exponential { rate: 0.0 }, g).is_err());
        assert!(make_pdf(&Family::Exponential { rate: -1.0 }, g).is_err());
        assert!(make_pdf(&Family::Rectangular { lo: 4.0, hi: 2.0 }, g).is_err());
        assert!(make_pdf(&Family::Rectangular { lo: 2.0, hi: 12.0 }, g).is_err());
        assert!(make_pdf(
            &Family::TruncatedExponential {
                rate: 1.0,
                cap: 11.0
            },
            g
        )
        .is_err());
        assert!(make_pdf(
            &Family::TruncatedExponential {
                rate: 1.0,
                cap: 0.0
            },
            g
        )
        .is_err());
    }

    #[test]
    fn display_round_trips_intent() {
        assert_eq!(Family::Exponential { rate: 0.5 }.to_string(), "exp:0.5");
        assert_eq!(Family::Gamma1.to_string(), "gamma1");
        assert_eq!(
            Family::Rectangular { lo: 2.0, hi: 4.0 }.to_string(),
            "rect:2,4"
        );
        assert_eq!(Family::ParetoLike.to_string(), "pareto");
        assert_eq!(
            Family::TruncatedExponential {
                rate: 1.0,
                cap: 5.0
            }
            .to_string(),
            "truncexp:1,5"
        );
    }
}
