//! The exponential integral on the negative axis and the closed-form image of
//! an exponential density under the kernel-perturbed exchange operator.

use crate::error::{Error, Result};

const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `Ei(z)` for strictly negative arguments,
/// `Ei(z) = -E1(-z)`. Relative accuracy is ~1e-14 over the range used here.
pub fn ei(z: f64) -> Result<f64> {
    if !(z.is_finite() && z < 0.0) {
        return Err(Error::Domain(format!(
            "ei is implemented for finite z < 0, got {z}"
        )));
    }
    Ok(-e1(-z))
}

/// `E1(x) = integral of exp(-t)/t over [x, inf)` for `x > 0`.
///
/// Power series below the crossover, Lentz-style continued fraction above;
/// both converge to machine precision in well under the iteration caps.
fn e1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..=60 {
            term *= -x / k as f64;
            let contrib = -term / k as f64;
            sum += contrib;
            if contrib.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_MASCHERONI - x.ln() + sum
    } else {
        let mut b = x + 1.0;
        let mut c = 1e308;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=200u32 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Closed-form image of `p(x) = rate * exp(-rate x)` under the exchange
/// operator with polynomial split kernel `a_0..a_N`, `N <= 2`:
///
/// ```text
/// (a0 + 3 a2 r x) r e^{-rx} + (2 a1 - 3 a2 r x) r^2 x E1(r x)
/// ```
///
/// obtained by integrating each `(m+1) a_m (x/s)^m` moment of `c(s)/s`
/// (`c(s) = r^2 s e^{-rs}`) from `x` to infinity, using
/// `integral of e^{-rs}/s^2 = e^{-rx}/x - r E1(rx)`. At `x = 0` the limit is
/// `a0 * rate`.
pub fn kernel_image_exponential(rate: f64, coeffs: &[f64], x: f64) -> Result<f64> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rate must be positive, got {rate}"
        )));
    }
    if coeffs.is_empty() || coeffs.len() > 3 {
        return Err(Error::UnsupportedKernelOrder(coeffs.len().max(1) - 1));
    }
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::Domain(format!("x must be finite and >= 0, got {x}")));
    }
    let a0 = coeffs[0];
    let a1 = coeffs.get(1).copied().unwrap_or(0.0);
    let a2 = coeffs.get(2).copied().unwrap_or(0.0);
    if x == 0.0 {
        return Ok(a0 * rate);
    }
    let rx = rate * x;
    let smooth = rate * (-rx).exp() * (a0 + 3.0 * a2 * rx);
    let log_part = (2.0 * a1 - 3.0 * a2 * rx) * rate * rx * e1(rx);
    Ok(smooth + log_part)
}
