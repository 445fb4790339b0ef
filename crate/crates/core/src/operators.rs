//! The exchange operators acting on grid densities.
//!
//! The core map sends a density to the distribution of `eps * (u + v)` where
//! `u, v` are drawn from it and `eps` is uniform: pointwise
//! `(E p)(x) = integral over s > x of c(s)/s ds`, with `c` the self-convolution
//! of `p`. Variants damp the map toward the identity, confine it below a hard
//! cap, or bias the split kernel away from uniform.
//!
//! Discretization notes that matter for conservation:
//! - the `s = 0` node of `c(s)/s` takes its limit value `p(0)^2`;
//! - the image is computed on the doubled grid `[0, 2 x_max]` first, and the
//!   part beyond `x_max` is folded into a [`TailLoss`] report (mass and mean)
//!   rather than dropped, so the discrete norm and mean laws hold to rounding.

use crate::convolve::{rows, self_convolution};
use crate::error::{Error, Result};
use crate::grid::{trapezoid, GridPdf};

/// Mass and mean carried past `x_max` by one operator application.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TailLoss {
    pub mass: f64,
    pub mean: f64,
}

/// One operator application: the restricted image, what leaked past the grid,
/// and the smallest output value (kernel-perturbed runs can dip below zero;
/// that is reported, never clamped).
#[derive(Debug, Clone)]
pub struct OperatorOutput {
    pub pdf: GridPdf,
    pub tail: TailLoss,
    pub min_value: f64,
}

impl OperatorOutput {
    pub fn has_negative(&self) -> bool {
        self.min_value < 0.0
    }

    /// Norm accounted for leakage: `norm(pdf) + tail.mass`.
    pub fn conserved_norm(&self) -> f64 {
        self.pdf.norm() + self.tail.mass
    }

    /// Mean accounted for leakage: `mean(pdf) + tail.mean`.
    pub fn conserved_mean(&self) -> f64 {
        self.pdf.mean() + self.tail.mean
    }
}

/// Backward cumulative trapezoid: `out[j] = integral of q from node j to the
/// last node`. The scan runs high-to-low with a single accumulator, so the
/// summation order is fixed regardless of execution path.
pub(crate) fn suffix_trapezoid(q: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; q.len()];
    for j in (0..q.len() - 1).rev() {
        out[j] = out[j + 1] + 0.5 * h * (q[j] + q[j + 1]);
    }
    out
}

/// `c(s)/s` on the doubled grid with the limit value at `s = 0`.
fn ratio_to_s(p: &GridPdf, c: &GridPdf) -> Vec<f64> {
    let h = c.grid().spacing();
    let mut g = vec![0.0; c.grid().len()];
    g[0] = p.values()[0] * p.values()[0];
    for (j, gj) in g.iter_mut().enumerate().skip(1) {
        *gj = c.values()[j] / (j as f64 * h);
    }
    g
}

/// Split an image on the doubled grid into the restricted output plus its
/// tail report.
fn split_extended(p: &GridPdf, f: Vec<f64>) -> OperatorOutput {
    let grid = p.grid();
    let n = grid.len();
    let h = grid.spacing();
    let dg = grid.doubled();
    let tail_slice = &f[n - 1..];
    let mass = trapezoid(tail_slice, h);
    let weighted: Vec<f64> = tail_slice
        .iter()
        .enumerate()
        .map(|(k, &v)| dg.x(n - 1 + k) * v)
        .collect();
    let mean = trapezoid(&weighted, h);
    let out = f[..n].to_vec();
    let min_value = out.iter().copied().fold(f64::INFINITY, f64::min);
    OperatorOutput {
        pdf: GridPdf::from_values_unchecked(grid, out),
        tail: TailLoss { mass, mean },
        min_value,
    }
}

/// The plain exchange operator.
pub fn exchange(p: &GridPdf) -> OperatorOutput {
    let c = self_convolution(p);
    let g = ratio_to_s(p, &c);
    let f = suffix_trapezoid(&g, p.grid().spacing());
    split_extended(p, f)
}

/// Damped exchange: `(1 - effectiveness) p + effectiveness * E p`.
///
/// `effectiveness = 0` returns the input bitwise; `effectiveness = 1` is
/// exactly [`exchange`].
pub fn exchange_damped(p: &GridPdf, effectiveness: f64) -> Result<OperatorOutput> {
    validate_effectiveness(effectiveness)?;
    if effectiveness == 0.0 {
        return Ok(frozen(p));
    }
    let base = exchange(p);
    Ok(damp(p, base, effectiveness))
}

/// Capped exchange: pairs whose merged stock would exceed `cap` refuse to
/// trade and keep their state, so the operator is
/// `(E_cap p)(x) = integral of c(s)/s over (x, cap] + p(x) * integral of p
/// over (cap - x, cap]`. The input must live on `[0, cap]`: `cap` has to sit
/// on a grid node and `p` must vanish beyond it. Nothing can leak, so the
/// tail report is zero.
pub fn exchange_capped(p: &GridPdf, cap: f64) -> Result<OperatorOutput> {
    let grid = p.grid();
    if !(cap.is_finite() && cap > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cap must be positive, got {cap}"
        )));
    }
    let i_cap = grid.node_at(cap).ok_or_else(|| {
        Error::Domain(format!(
            "cap {cap} does not lie on a node of the {}-point grid on [0, {}]",
            grid.len(),
            grid.x_max()
        ))
    })?;
    if p.values()[i_cap + 1..].iter().any(|&v| v != 0.0) {
        return Err(Error::Domain("density has support beyond the cap".into()));
    }
    let h = grid.spacing();
    let sub = &p.values()[..=i_cap];
    // Windows with j <= i_cap never hit the convolution edge, so these rows
    // equal the unrestricted self-convolution there.
    let c = rows(sub, i_cap, h);
    let mut g = vec![0.0; i_cap + 1];
    g[0] = sub[0] * sub[0];
    for (j, gj) in g.iter_mut().enumerate().skip(1) {
        *gj = c[j] / (j as f64 * h);
    }
    let s = suffix_trapezoid(&g, h);
    let q = suffix_trapezoid(sub, h);
    let mut out = vec![0.0; grid.len()];
    for i in 0..=i_cap {
        // q[i_cap - i] = integral of p over [cap - x_i, cap]: the refusal mass
        // frozen in place at x_i.
        out[i] = s[i] + sub[i] * q[i_cap - i];
    }
    let min_value = out.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(OperatorOutput {
        pdf: GridPdf::from_values_unchecked(grid, out),
        tail: TailLoss::default(),
        min_value,
    })
}

/// Kernel-perturbed exchange: the split fraction is drawn from the polynomial
/// density encoded by `coeffs` instead of uniformly. Each moment `m`
/// contributes `(m + 1) a_m x^m * integral of c(s)/s^{m+1} over s > x`,
/// evaluated with the same suffix scans as the plain operator (coefficients
/// `[1]` or `[1, 0]` reproduce [`exchange`] bitwise).
pub fn exchange_kernel(p: &GridPdf, coeffs: &KernelCoefficients) -> OperatorOutput {
    let grid = p.grid();
    let h = grid.spacing();
    let c = self_convolution(p);
    let g = ratio_to_s(p, &c);
    let m_len = g.len();
    let mut f = vec![0.0; m_len];
    for (ord, &a) in coeffs.as_slice().iter().enumerate() {
        if ord > 0 && a == 0.0 {
            continue;
        }
        let q: Vec<f64> = if ord == 0 {
            g.clone()
        } else {
            // s^ord ratio; the s = 0 node of c(s)/s^{ord+1} has limit 0 ... a
            // finite limit only for ord = 0, and the x^ord prefactor kills the
            // node's contribution to every output anyway.
            (0..m_len)
                .map(|j| {
                    if j == 0 {
                        0.0
                    } else {
                        g[j] / (j as f64 * h).powi(ord as i32)
                    }
                })
                .collect()
        };
        let s = suffix_trapezoid(&q, h);
        let scale = (ord + 1) as f64 * a;
        if ord == 0 {
            for (fj, sj) in f.iter_mut().zip(&s) {
                *fj += scale * sj;
            }
        } else {
            for (j, (fj, sj)) in f.iter_mut().zip(&s).enumerate() {
                *fj += scale * (j as f64 * h).powi(ord as i32) * sj;
            }
        }
    }
    split_extended(p, f)
}

fn validate_effectiveness(effectiveness: f64) -> Result<()> {
    if !(effectiveness.is_finite() && (0.0..=1.0).contains(&effectiveness)) {
        return Err(Error::InvalidParameter(format!(
            "effectiveness must lie in [0, 1], got {effectiveness}"
        )));
    }
    Ok(())
}

/// Identity application: the input unchanged, nothing leaked.
fn frozen(p: &GridPdf) -> OperatorOutput {
    let min_value = p.values().iter().copied().fold(f64::INFINITY, f64::min);
    OperatorOutput {
        pdf: p.clone(),
        tail: TailLoss::default(),
        min_value,
    }
}

/// Convex mix `(1 - lambda) p + lambda base`; `lambda = 1` hands back `base`
/// untouched so the undamped call stays bitwise reproducible.
fn damp(p: &GridPdf, base: OperatorOutput, lambda: f64) -> OperatorOutput {
    if lambda == 1.0 {
        return base;
    }
    let values: Vec<f64> = p
        .values()
        .iter()
        .zip(base.pdf.values())
        .map(|(&a, &b)| (1.0 - lambda) * a + lambda * b)
        .collect();
    let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    OperatorOutput {
        pdf: GridPdf::from_values_unchecked(p.grid(), values),
        tail: TailLoss {
            mass: lambda * base.tail.mass,
            mean: lambda * base.tail.mean,
        },
        min_value,
    }
}

/// Split-fraction kernel coefficients `a_0..a_N` for the polynomial density
/// `K(r) = sum of a_m (m + 1) r^m` on `[0, 1]`.
///
/// Two linear constraints keep the operator exchange-like: unit mass
/// (`sum a_m = 1`) and a symmetric split (`sum a_m (m+1)/(m+2) = 1/2`).
/// Coefficients outside the uniform point can push outputs slightly negative;
/// see [`OperatorOutput::min_value`].
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCoefficients {
    coeffs: Vec<f64>,
}

impl KernelCoefficients {
    const TOL: f64 = 1e-12;

    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > 3 {
            return Err(Error::UnsupportedKernelOrder(coeffs.len().max(1) - 1));
        }
        if coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter(
                "kernel coefficients must be finite".into(),
            ));
        }
        let mass: f64 = coeffs.iter().sum();
        let split: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(m, &a)| a * (m + 1) as f64 / (m + 2) as f64)
            .sum();
        if (mass - 1.0).abs() > Self::TOL {
            return Err(Error::InvalidParameter(format!(
                "kernel mass constraint violated: sum a_m = {mass}"
            )));
        }
        if (split - 0.5).abs() > Self::TOL {
            return Err(Error::InvalidParameter(format!(
                "kernel symmetry constraint violated: weighted sum = {split}"
            )));
        }
        Ok(Self { coeffs })
    }

    /// Solve the two constraints at the given order. Order 0 and 1 are rigid
    /// (the uniform kernel); order 2 has the one-parameter family
    /// `(1 - eps/3, eps, -2 eps/3)`.
    pub fn solve(order: usize, eps: f64) -> Result<Self> {
        if !eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kernel parameter must be finite, got {eps}"
            )));
        }
        match order {
            0 => Self::new(vec![1.0]),
            1 => Self::new(vec![1.0, 0.0]),
            2 => Self::new(vec![1.0 - eps / 3.0, eps, -2.0 * eps / 3.0]),
            n => Err(Error::UnsupportedKernelOrder(n)),
        }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }
}

/// A fully specified operator: damping plus at most one of a cap or a split
/// kernel (the capped and kernel variants do not compose).
#[derive(Debug, Clone, Default)]
pub struct OperatorParams {
    /// Fraction of the population that actually trades each round; `None`
    /// means the undamped operator.
    pub effectiveness: Option<f64>,
    pub cap: Option<f64>,
    pub kernel: Option<KernelCoefficients>,
}

impl OperatorParams {
    pub fn plain() -> Self {
        Self::default()
    }

    pub fn damped(effectiveness: f64) -> Self {
        Self {
            effectiveness: Some(effectiveness),
            ..Self::default()
        }
    }

    pub fn capped(cap: f64) -> Self {
        Self {
            cap: Some(cap),
            ..Self::default()
        }
    }

    pub fn kernel(kernel: KernelCoefficients) -> Self {
        Self {
            kernel: Some(kernel),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.effectiveness {
            validate_effectiveness(l)?;
        }
        if self.cap.is_some() && self.kernel.is_some() {
            return Err(Error::InvalidParameter(
                "cap and split kernel cannot be combined".into(),
            ));
        }
        Ok(())
    }

    /// True when the entropy ordering argument applies to this operator
    /// (plain, damped, capped). Kernel perturbations carry no such guarantee.
    pub fn entropy_ordered(&self) -> bool {
        self.kernel.is_none()
    }

    pub fn apply(&self, p: &GridPdf) -> Result<OperatorOutput> {
        self.validate()?;
        let lambda = self.effectiveness.unwrap_or(1.0);
        if lambda == 0.0 {
            return Ok(frozen(p));
        }
        let base = match (&self.cap, &self.kernel) {
            (Some(cap), None) => exchange_capped(p, *cap)?,
            (None, Some(k)) => exchange_kernel(p, k),
            (None, None) => exchange(p),
            (Some(_), Some(_)) => unreachable!("validate rejects this"),
        };
        Ok(damp(p, base, lambda))
    }
}
