//! Adaptive Simpson quadrature for smooth integrands on finite intervals.
//!
//! Used for cross-checking closed-form expressions, not in any hot path.

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Classic recursive bisection with Richardson extrapolation; per-interval
/// tolerance halves on each split, and a depth cap of 50 bounds the recursion
/// on pathological integrands (at that depth the interval width has collapsed
/// to rounding anyway).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    assert!(a.is_finite() && b.is_finite() && a <= b);
    assert!(tol > 0.0);
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    recurse(&f, a, b, fa, fm, fb, whole, tol, 50)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        let half = 0.5 * tol;
        recurse(f, a, m, fa, flm, fm, left, half, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, half, depth - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        // Simpson is exact on cubics, so no refinement is even needed.
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12);
        assert_relative_eq!(v, 4.0 - 4.0 + 2.0, epsilon = 1e-12);
    }

    #[test]
    fn exponential_tail() {
        let v = adaptive_simpson(|x| (-x).exp(), 0.0, 30.0, 1e-12);
        assert_relative_eq!(v, 1.0 - (-30.0f64).exp(), epsilon = 1e-11);
    }

    #[test]
    fn oscillatory_integrand() {
        let v = adaptive_simpson(f64::sin, 0.0, std::f64::consts::PI, 1e-11);
        assert_relative_eq!(v, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(adaptive_simpson(|x| x, 3.0, 3.0, 1e-12), 0.0);
    }
}
