//! Orbit traces, entropy ordering reports, middle-class statistics, and the
//! bridge between particle simulations and the density operators.

use crate::error::{Error, Result};
use crate::family::{make_pdf, Family};
use crate::grid::GridPdf;
use crate::operators::OperatorParams;
use crate::quad::adaptive_simpson;

/// One recorded iteration step: functionals of the current density plus its
/// distance to the equilibrium target.
#[derive(Debug, Clone, Copy)]
pub struct TraceStep {
    pub step: usize,
    pub norm: f64,
    pub mean: f64,
    pub entropy: f64,
    pub distance: f64,
}

/// Full record of an operator orbit.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Rows `0..=n_steps`; row 0 describes the input.
    pub steps: Vec<TraceStep>,
    pub final_pdf: GridPdf,
    /// Equilibrium density matching the input's (normalized) mean: exponential
    /// for unconfined operators, truncated exponential under a cap.
    pub target: GridPdf,
    pub target_rate: f64,
    /// Closed-form entropy of the ideal target, the ceiling the orbit
    /// entropies approach: `1 - ln rate` unconfined, `ln(Z/rate) + rate * m`
    /// under a cap.
    pub target_entropy: f64,
    /// Whether the driving operator guarantees nondecreasing entropy.
    pub entropy_ordered: bool,
}

/// Apply `params` to `p0` for `n_steps` steps, recording functionals and the
/// L1 distance to the matched equilibrium at every step.
///
/// The orbit runs on `p0` exactly as given (norm drift stays visible in the
/// trace); the comparison target is built from the normalized mean, which the
/// dynamics preserve.
pub fn iterate(p0: &GridPdf, params: &OperatorParams, n_steps: usize) -> Result<Trace> {
    params.validate()?;
    let norm0 = p0.norm();
    if !(norm0.is_finite() && norm0 > 0.0) {
        return Err(Error::Domain(format!("input has unusable norm {norm0}")));
    }
    let mean_n = p0.mean() / norm0;
    if !(mean_n.is_finite() && mean_n > 0.0) {
        return Err(Error::Domain(format!("input has unusable mean {mean_n}")));
    }
    let grid = p0.grid();
    let (target_rate, target_family, target_entropy) = match params.cap {
        Some(cap) => {
            let rate = solve_rate_for_mean(cap, mean_n)?;
            let z = 1.0 - (-rate * cap).exp();
            let m = truncated_exponential_mean(rate, cap);
            (
                rate,
                Family::TruncatedExponential { rate, cap },
                (z / rate).ln() + rate * m,
            )
        }
        None => {
            let rate = 1.0 / mean_n;
            (rate, Family::Exponential { rate }, 1.0 - rate.ln())
        }
    };
    let target = make_pdf(&target_family, grid)?.pdf.normalized()?;

    let mut current = p0.clone();
    let mut steps = Vec::with_capacity(n_steps + 1);
    for step in 0..=n_steps {
        steps.push(TraceStep {
            step,
            norm: current.norm(),
            mean: current.mean(),
            entropy: current.entropy(),
            distance: current.l1_distance(&target)?,
        });
        if step < n_steps {
            current = params.apply(&current)?.pdf;
        }
    }
    Ok(Trace {
        steps,
        final_pdf: current,
        target,
        target_rate,
        target_entropy,
        entropy_ordered: params.entropy_ordered(),
    })
}

/// Entropy ordering report for a trace.
#[derive(Debug, Clone)]
pub struct EntropyReport {
    /// Steps `i` whose entropy fell more than `slack` below step `i - 1`.
    pub violations: Vec<usize>,
    pub final_entropy: f64,
    pub target_entropy: f64,
    /// `target_entropy - final_entropy`; small and nonnegative once the orbit
    /// has settled under an entropy-ordered operator.
    pub gap: f64,
    /// False when the driving operator carries no ordering guarantee (kernel
    /// perturbations); the report is then informational.
    pub gated: bool,
}

pub fn h_theorem_check(trace: &Trace, slack: f64) -> EntropyReport {
    let violations = trace
        .steps
        .windows(2)
        .filter(|w| w[1].entropy < w[0].entropy - slack)
        .map(|w| w[1].step)
        .collect();
    let final_entropy = trace.steps.last().map(|s| s.entropy).unwrap_or(0.0);
    EntropyReport {
        violations,
        final_entropy,
        target_entropy: trace.target_entropy,
        gap: trace.target_entropy - final_entropy,
        gated: trace.entropy_ordered,
    }
}

/// Mean of the truncated exponential with the given rate and cap:
/// `1/rate - cap/(e^{rate cap} - 1)`, always strictly below `cap / 2`.
pub fn truncated_exponential_mean(rate: f64, cap: f64) -> f64 {
    1.0 / rate - cap / (rate * cap).exp_m1()
}

/// Invert [`truncated_exponential_mean`] in the rate at fixed cap by
/// bisection, to absolute accuracy 1e-12 in the mean.
///
/// The mean decreases from `cap / 2` (rate -> 0) toward zero, so any
/// `0 < mean < cap / 2` is reachable; accuracy near the upper edge is limited
/// by cancellation in the mean formula itself.
pub fn solve_rate_for_mean(cap: f64, mean: f64) -> Result<f64> {
    if !(cap.is_finite() && cap > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cap must be positive, got {cap}"
        )));
    }
    if !(mean.is_finite() && mean > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mean must be positive, got {mean}"
        )));
    }
    if mean >= 0.5 * cap {
        return Err(Error::Infeasible(format!(
            "no confined equilibrium has mean {mean} >= cap/2 = {}",
            0.5 * cap
        )));
    }
    let mut lo = 1e-12 / cap;
    let mut hi = 1.0 / cap;
    for _ in 0..80 {
        if truncated_exponential_mean(hi, cap) < mean {
            break;
        }
        hi *= 2.0;
    }
    if truncated_exponential_mean(hi, cap) >= mean {
        return Err(Error::Infeasible(format!(
            "mean {mean} is too small to bracket at cap {cap}"
        )));
    }
    let mut rate = 0.5 * (lo + hi);
    for _ in 0..200 {
        rate = 0.5 * (lo + hi);
        let m = truncated_exponential_mean(rate, cap);
        if (m - mean).abs() <= 1e-12 {
            return Ok(rate);
        }
        if m > mean {
            lo = rate;
        } else {
            hi = rate;
        }
    }
    Ok(rate)
}

/// Middle-class statistics of the confined equilibrium with the given rate
/// and cap: mass and stock held by agents between half and twice the mean.
///
/// All four headline numbers are closed forms; `quadrature_gap` reports their
/// worst disagreement with direct adaptive quadrature of the density, and
/// `per_capita_consistency` the gap between the two algebraic forms of the
/// per-capita stock.
#[derive(Debug, Clone, Copy)]
pub struct MiddleClassReport {
    pub rate: f64,
    pub cap: f64,
    pub mean: f64,
    /// Population fraction in `[mean/2, 2 mean]`.
    pub cm: f64,
    /// Stock fraction of the whole economy held by that band, in units of the
    /// per-agent mean: `xcm / mean` is `proportion`.
    pub xcm: f64,
    /// Average stock of a middle-class agent, `xcm / cm`.
    pub per_capita: f64,
    /// Share of total stock held by the middle class, `xcm / mean`.
    pub proportion: f64,
    pub quadrature_gap: f64,
    pub per_capita_consistency: f64,
}

pub fn middle_class_stats(rate: f64, cap: f64) -> Result<MiddleClassReport> {
    if !(rate.is_finite() && rate > 0.0) || !(cap.is_finite() && cap > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rate and cap must be positive, got {rate} and {cap}"
        )));
    }
    let z = 1.0 - (-rate * cap).exp();
    let m = truncated_exponential_mean(rate, cap);
    let am = rate * m;
    // The band [m/2, 2m] always fits under the cap since 2m < cap.
    debug_assert!(2.0 * m < cap);
    let e1 = (-0.5 * am).exp();
    let e2 = (-2.0 * am).exp();
    let cm = (e1 - e2) / z;
    let xcm = m * ((am + 2.0) * e1 - 2.0 * (2.0 * am + 1.0) * e2) / (2.0 * am * z);
    let per_capita = xcm / cm;
    let per_capita_alt = 1.0 / rate + m * (e1 - 4.0 * e2) / (2.0 * (e1 - e2));
    let proportion = xcm / m;

    let density = |x: f64| rate * (-rate * x).exp() / z;
    let band = (0.5 * m, 2.0 * m);
    let cm_quad = adaptive_simpson(density, band.0, band.1, 1e-12);
    let xcm_quad = adaptive_simpson(|x| x * density(x), band.0, band.1, 1e-12);
    let quadrature_gap = (cm - cm_quad).abs().max((xcm - xcm_quad).abs());

    Ok(MiddleClassReport {
        rate,
        cap,
        mean: m,
        cm,
        xcm,
        per_capita,
        proportion,
        quadrature_gap,
        per_capita_consistency: (per_capita - per_capita_alt).abs(),
    })
}

/// One feasible point of a fixed-mean scan.
#[derive(Debug, Clone, Copy)]
pub struct ScanRow {
    /// The dimensionless confinement strength `rate * cap`.
    pub al: f64,
    pub report: MiddleClassReport,
}

#[derive(Debug, Clone)]
pub enum ScanOutcome {
    Row(ScanRow),
    Infeasible { al: f64, reason: String },
}

/// Middle-class statistics along a family of confined equilibria sharing one
/// mean, parameterized by `rate * cap`.
#[derive(Debug, Clone)]
pub struct ScanTable {
    pub mean: f64,
    pub outcomes: Vec<ScanOutcome>,
}

/// Fraction of the mean taken by the rate at confinement `x = rate * cap`:
/// `rate * mean = 1 - x e^{-x} / (1 - e^{-x})`, increasing from 0 toward 1.
fn rate_mean_product(x: f64) -> f64 {
    let emx = (-x).exp();
    1.0 - x * emx / (1.0 - emx)
}

/// Scan `rate * cap` values at fixed mean. The pair `(rate, cap)` solves in
/// closed form: `rate = rate_mean_product(al) / mean`, `cap = al / rate`.
/// `al_values` must be strictly increasing so the monotonicity verdict reads
/// rows in scan order; nonpositive entries come back infeasible, not fatal.
pub fn monotonicity_scan(mean: f64, al_values: &[f64]) -> Result<ScanTable> {
    if !(mean.is_finite() && mean > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mean must be positive, got {mean}"
        )));
    }
    if al_values.is_empty() {
        return Err(Error::InvalidParameter("empty scan".into()));
    }
    // partial_cmp so NaN windows fail the strictness test too.
    let strictly_less = |a: f64, b: f64| a.partial_cmp(&b) == Some(std::cmp::Ordering::Less);
    if al_values.windows(2).any(|w| !strictly_less(w[0], w[1])) {
        return Err(Error::InvalidParameter(
            "scan values must be strictly increasing".into(),
        ));
    }
    let outcomes = al_values
        .iter()
        .map(|&al| {
            if !(al.is_finite() && al > 0.0) {
                return ScanOutcome::Infeasible {
                    al,
                    reason: "confinement strength must be positive".into(),
                };
            }
            let rate = rate_mean_product(al) / mean;
            let cap = al / rate;
            match middle_class_stats(rate, cap) {
                Ok(report) => ScanOutcome::Row(ScanRow { al, report }),
                Err(e) => ScanOutcome::Infeasible {
                    al,
                    reason: e.to_string(),
                },
            }
        })
        .collect();
    Ok(ScanTable { mean, outcomes })
}

/// Strict-decrease verdict per column across the feasible rows of a scan.
#[derive(Debug, Clone, Copy)]
pub struct MonotonicityVerdict {
    pub cm: bool,
    pub xcm: bool,
    pub per_capita: bool,
    pub proportion: bool,
}

impl MonotonicityVerdict {
    pub fn all_decreasing(&self) -> bool {
        self.cm && self.xcm && self.per_capita && self.proportion
    }
}

impl ScanTable {
    pub fn rows(&self) -> impl Iterator<Item = &ScanRow> {
        self.outcomes.iter().filter_map(|o| match o {
            ScanOutcome::Row(r) => Some(r),
            ScanOutcome::Infeasible { .. } => None,
        })
    }

    pub fn verdict(&self) -> MonotonicityVerdict {
        let rows: Vec<&ScanRow> = self.rows().collect();
        let strictly_decreasing = |f: &dyn Fn(&MiddleClassReport) -> f64| {
            rows.windows(2).all(|w| f(&w[1].report) < f(&w[0].report))
        };
        MonotonicityVerdict {
            cm: strictly_decreasing(&|r| r.cm),
            xcm: strictly_decreasing(&|r| r.xcm),
            per_capita: strictly_decreasing(&|r| r.per_capita),
            proportion: strictly_decreasing(&|r| r.proportion),
        }
    }
}

/// How closely a binned ensemble matches a reference density.
#[derive(Debug, Clone, Copy)]
pub struct BridgeReport {
    pub l1: f64,
    pub mean_gap: f64,
}

pub fn gas_vs_operator(observed: &GridPdf, reference: &GridPdf) -> Result<BridgeReport> {
    Ok(BridgeReport {
        l1: observed.l1_distance(reference)?,
        mean_gap: (observed.mean() - reference.mean()).abs(),
    })
}
