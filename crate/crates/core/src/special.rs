//! Small special-function helpers used by the kernel code.

/// Exponentially scaled modified Bessel function `e^{-x} I_0(x)` for `x >= 0`.
pub fn bessel_i0e(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= 30.0 {
        // Power series sum_k (x^2/4)^k / (k!)^2, all terms positive.
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        let inv8x = 1.0 / (8.0 * x);
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0_f64;
        loop {
            let ratio = (2.0 * k - 1.0) * (2.0 * k - 1.0) * inv8x / k;
            if ratio >= 1.0 {
                break;
            }
            term *= ratio;
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
            k += 1.0;
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

/// `c / sinh(c)`, continuous at zero.
pub fn c_over_sinh(c: f64) -> f64 {
    let a = c.abs();
    if a < 1e-4 {
        1.0 - a * a / 6.0
    } else if a > 700.0 {
        0.0
    } else {
        a / a.sinh()
    }
}

/// `c * coth(c)`, continuous at zero.
pub fn c_coth(c: f64) -> f64 {
    let a = c.abs();
    if a < 1e-4 {
        1.0 + a * a / 3.0
    } else {
        a / a.tanh()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadOptions};
    use std::f64::consts::PI;

    // Independent route: I_0(x) = (1/pi) int_0^pi e^{x cos t} dt.
    fn i0e_by_quadrature(x: f64) -> f64 {
        integrate(
            |t: f64| (x * (t.cos() - 1.0)).exp(),
            0.0,
            PI,
            &[],
            QuadOptions {
                abs_tol: 0.0,
                rel_tol: 1e-14,
                max_panels: 2000,
            },
        )
        .value
            / PI
    }

    #[test]
    fn i0e_matches_integral_representation() {
        for &x in &[0.0, 1e-3, 0.5, 1.0, 2.5, 7.0, 15.0, 29.9, 30.1, 45.0, 120.0, 900.0] {
            let a = bessel_i0e(x);
            let b = i0e_by_quadrature(x);
            assert!(((a - b) / b).abs() < 1e-12, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn hyperbolic_helpers_are_continuous() {
        for &c in &[0.0_f64, 1e-6, 9.9e-5, 1.01e-4, 0.3, 5.0] {
            let s = if c == 0.0 { 1.0 } else { c / c.sinh() };
            let t = if c == 0.0 { 1.0 } else { c / c.tanh() };
            assert!((c_over_sinh(c) - s).abs() < 1e-12);
            assert!((c_coth(c) - t).abs() < 1e-12);
        }
    }
}
