//! Heat kernel of the sub-Laplacian on `H^n` and the Euclidean baseline.
//!
//! Two independent evaluators are provided:
//!
//! * [`KernelEvaluator::heat_kernel_h`] integrates the real cosine form
//!   `(4 pi t)^{-n-1} int_0^L cos(l zeta / 4t) exp(-|xi|^2 l coth(l) / 4t) (l / sinh l)^n dl`
//!   with panels no wider than half an oscillation period;
//! * [`KernelEvaluator::p1`] evaluates `p_1` on the contour `Im l = sigma`
//!   through the saddle point of the phase, which removes the cancellation
//!   that makes the cosine form useless for `|zeta| >> |xi|^2`.
//!   [`KernelEvaluator::heat_kernel_scaled`] feeds it through the dilation law.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{cc_distance_from_parts, geodesic_angle, GroupParams, HeisenbergPoint};
use crate::quadrature::{integrate, QuadOptions};
use crate::special::{c_coth, c_over_sinh};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("quadrature did not converge: value {value:e}, estimated error {abs_err:e}")]
    NonConvergence { value: f64, abs_err: f64 },
    #[error("empty sample")]
    EmptySample,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point has dimension {0}, evaluator expects {1}")]
    DimensionMismatch(usize, usize),
}

/// Quadrature configuration for kernel evaluation on `H^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEvaluator {
    pub params: GroupParams,
    pub quad_rel_tol: f64,
    pub quad_abs_tol: f64,
    pub max_panels: usize,
}

/// Outcome of [`li_sandwich_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiEstimate {
    pub n: usize,
    pub a_empirical: f64,
    /// Smallest and largest `p_1 / P` over the sample.
    pub min_ratio: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioBoundReport {
    pub t1: f64,
    pub t2: f64,
    pub bound: f64,
    pub min_ratio: f64,
    /// `min_ratio - bound`; non-negative when the bound holds everywhere.
    pub min_margin: f64,
    pub violations: usize,
    pub points: usize,
}

impl KernelEvaluator {
    pub fn new(params: GroupParams) -> Self {
        Self {
            params,
            quad_rel_tol: 1e-10,
            quad_abs_tol: 1e-300,
            max_panels: 20_000,
        }
    }

    pub fn h1() -> Self {
        Self::new(GroupParams::new(1).expect("n = 1 is valid"))
    }

    pub fn with_tolerances(mut self, rel: f64, abs: f64) -> Result<Self, KernelError> {
        if !(rel > 0.0 && rel < 1.0) || !(abs > 0.0 && abs < 1.0) {
            return Err(KernelError::InvalidArgument(
                "tolerances must lie in (0, 1)".into(),
            ));
        }
        self.quad_rel_tol = rel;
        self.quad_abs_tol = abs;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    fn opts(&self) -> QuadOptions {
        QuadOptions {
            abs_tol: self.quad_abs_tol,
            rel_tol: self.quad_rel_tol,
            max_panels: self.max_panels,
        }
    }

    fn check_point(&self, x: &HeisenbergPoint) -> Result<(), KernelError> {
        if x.n() != self.n() {
            return Err(KernelError::DimensionMismatch(x.n(), self.n()));
        }
        Ok(())
    }

    /// Truncation point of the real lambda-integral. The integrand is bounded
    /// by `(2l)^n exp(-(n + |xi|^2/4t) l)` for `l >= 1`; the tail of that
    /// envelope times the prefactor is pushed below `quad_abs_tol` and
    /// below `quad_rel_tol` times a lower estimate of the integral.
    pub fn lambda_cutoff(&self, t: f64, xi_norm: f64, _zeta: f64) -> f64 {
        let n = self.n() as f64;
        let k = n + xi_norm * xi_norm / (4.0 * t);
        let log_pref = -(n + 1.0) * (4.0 * PI * t).ln();
        // Lower estimate of the integrand scale: its value at the origin
        // times exp(-rho^2/4t) loss from oscillation.
        let rho = cc_distance_from_parts(xi_norm, _zeta);
        let log_scale = log_pref - rho * rho / (4.0 * t) - xi_norm * xi_norm / (4.0 * t);
        let log_target = (self.quad_abs_tol.ln()).max(self.quad_rel_tol.ln() + log_scale) - 2.0;
        let mut lam: f64 = 1.0;
        while lam < 700.0 {
            if k > 2.0 * n / lam {
                let tail = n * (2.0 * lam).ln() - k * lam - (k - n / lam).ln();
                if log_pref + tail < log_target {
                    break;
                }
            }
            lam += 1.0;
        }
        lam
    }

    /// `p_t(x)` from the cosine form of the oscillatory integral.
    pub fn heat_kernel_h(&self, t: f64, x: &HeisenbergPoint) -> Result<f64, KernelError> {
        self.check_point(x)?;
        self.heat_kernel_h_radial(t, x.xi_norm(), x.zeta)
    }

    pub fn heat_kernel_h_radial(&self, t: f64, xi_norm: f64, zeta: f64) -> Result<f64, KernelError> {
        if !(t > 0.0) {
            return Err(KernelError::NonPositiveTime(t));
        }
        let n = self.n() as i32;
        let r2 = xi_norm * xi_norm;
        let omega = zeta.abs() / (4.0 * t);
        let cutoff = self.lambda_cutoff(t, xi_norm, zeta);
        let breaks: Vec<f64> = if omega > 0.0 {
            let width = PI / omega;
            let count = (cutoff / width).ceil() as usize;
            (1..count).map(|k| k as f64 * width).collect()
        } else {
            vec![0.5, 2.0, 8.0]
        };
        let integrand = |l: f64| {
            let damp = if r2 == 0.0 {
                1.0
            } else {
                (-r2 * c_coth(l) / (4.0 * t)).exp()
            };
            (omega * l).cos() * damp * c_over_sinh(l).powi(n)
        };
        let pref = (4.0 * PI * t).powi(-(n + 1));
        let res = integrate(integrand, 0.0, cutoff, &breaks, self.opts());
        let value = pref * res.value;
        let abs_err = pref * res.abs_err;
        if !res.converged || !(value > 0.0) {
            return Err(KernelError::NonConvergence { value, abs_err });
        }
        Ok(value)
    }

    /// `p_1` as a function of `(|xi|, zeta)` on the saddle-shifted contour.
    pub fn p1(&self, xi_norm: f64, zeta: f64) -> Result<f64, KernelError> {
        let n = self.n();
        let nf = n as f64;
        let r = xi_norm.abs();
        let z = zeta.abs();
        let r2 = r * r;
        let theta = geodesic_angle(r, z);
        // Keep clear of the order-n pole of (w / sinh w)^n at i pi.
        let sigma = if z > 0.0 {
            theta.min(PI - (4.0 * nf / z).min(PI)).max(0.0)
        } else {
            0.0
        };
        if sigma == 0.0 {
            return self.heat_kernel_h_radial(1.0, r, z);
        }
        let log_f = |u: f64| -> Complex64 {
            let w = Complex64::new(u, sigma);
            let (w_coth, log_ratio) = if w.norm() < 1e-3 {
                let w2 = w * w;
                (
                    1.0 + w2 / 3.0 - w2 * w2 / 45.0,
                    -w2 / 6.0 + w2 * w2 / 180.0,
                )
            } else {
                let e = (-2.0 * w).exp();
                let one_minus = 1.0 - e;
                (
                    w * (1.0 + e) / one_minus,
                    (2.0 * w).ln() - w - one_minus.ln(),
                )
            };
            Complex64::i() * w * (z / 4.0) - r2 / 4.0 * w_coth + nf * log_ratio
        };
        let peak = log_f(0.0).re;
        // Envelope for large u: exp(-sigma z/4 - (n + r^2/4) u) (2(u + pi))^n.
        let k = nf + r2 / 4.0;
        let log_target = peak + self.quad_rel_tol.ln() - 6.0;
        let mut cutoff: f64 = 4.0;
        while cutoff < 700.0 {
            let tail = -sigma * z / 4.0 - k * cutoff + nf * (2.0 * (cutoff + PI)).ln() - k.ln();
            if tail < log_target {
                break;
            }
            cutoff += 1.0;
        }
        // One panel per oscillation period of e^{i u z/4}, at most unit width.
        let width = if z > 0.0 { (8.0 * PI / z).min(1.0) } else { 1.0 };
        let count = (cutoff / width).ceil() as usize;
        let breaks: Vec<f64> = (1..count).map(|j| j as f64 * width).collect();
        // Factor out the saddle magnitude so panels see O(1) values.
        let res = integrate(
            |u: f64| (log_f(u) - peak).exp().re,
            0.0,
            cutoff,
            &breaks,
            QuadOptions {
                abs_tol: 1e-300,
                rel_tol: self.quad_rel_tol,
                max_panels: self.max_panels,
            },
        );
        let log_pref = -(nf + 1.0) * (4.0 * PI).ln() + peak;
        let value = res.value * log_pref.exp();
        let abs_err = res.abs_err * log_pref.exp();
        if !res.converged || !(value > 0.0) {
            return Err(KernelError::NonConvergence { value, abs_err });
        }
        Ok(value)
    }

    /// `p_t(x) = t^{-n-1} p_1(xi / sqrt t, zeta / t)`.
    pub fn heat_kernel_scaled(&self, t: f64, x: &HeisenbergPoint) -> Result<f64, KernelError> {
        self.check_point(x)?;
        self.heat_kernel_scaled_radial(t, x.xi_norm(), x.zeta)
    }

    pub fn heat_kernel_scaled_radial(
        &self,
        t: f64,
        xi_norm: f64,
        zeta: f64,
    ) -> Result<f64, KernelError> {
        if !(t > 0.0) {
            return Err(KernelError::NonPositiveTime(t));
        }
        let p = self.p1(xi_norm / t.sqrt(), zeta / t)?;
        Ok(p * t.powi(-(self.n() as i32) - 1))
    }
}

/// Gaussian kernel `(4 pi t)^{-d/2} exp(-|x|^2 / 4t)` on `R^d`.
pub fn heat_kernel_euclidean(dim: usize, t: f64, x: &[f64]) -> Result<f64, KernelError> {
    if !(t > 0.0) {
        return Err(KernelError::NonPositiveTime(t));
    }
    if dim == 0 || x.len() != dim {
        return Err(KernelError::DimensionMismatch(x.len(), dim));
    }
    let r2: f64 = x.iter().map(|c| c * c).sum();
    Ok((4.0 * PI * t).powf(-(dim as f64) / 2.0) * (-r2 / (4.0 * t)).exp())
}

/// `P(n; y, w) = e^{-w^2/4} (1 + w^2)^{n-1} / (1 + y w)^{n - 1/2}`.
pub fn li_envelope(n: usize, y: f64, w: f64) -> f64 {
    let nf = n as f64;
    (-w * w / 4.0).exp() * (1.0 + w * w).powf(nf - 1.0) / (1.0 + y * w).powf(nf - 0.5)
}

/// Smallest `A >= 1` with `A^{-1} <= p_1 / P <= A` over the sample.
pub fn li_sandwich_check(
    ev: &KernelEvaluator,
    sample: &[HeisenbergPoint],
) -> Result<LiEstimate, KernelError> {
    if sample.is_empty() {
        return Err(KernelError::EmptySample);
    }
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = 0.0_f64;
    for x in sample {
        ev.check_point(x)?;
        let y = x.xi_norm();
        let p = ev.p1(y, x.zeta)?;
        let env = li_envelope(ev.n(), y, cc_distance_from_parts(y, x.zeta));
        let ratio = p / env;
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
    }
    Ok(LiEstimate {
        n: ev.n(),
        a_empirical: max_ratio.max(1.0 / min_ratio).max(1.0),
        min_ratio,
        max_ratio,
    })
}

/// Check `p_{t1}(x) / p_{t2}(x) >= A^{-2} (t2 / t1)^{2n}` over the sample.
pub fn kernel_ratio_bound_check(
    ev: &KernelEvaluator,
    t1: f64,
    t2: f64,
    sample: &[HeisenbergPoint],
    a: f64,
) -> Result<RatioBoundReport, KernelError> {
    if !(t2 > 0.0) {
        return Err(KernelError::NonPositiveTime(t2));
    }
    if t1 < t2 {
        return Err(KernelError::InvalidArgument(format!(
            "need t1 >= t2, got t1={t1}, t2={t2}"
        )));
    }
    if sample.is_empty() {
        return Err(KernelError::EmptySample);
    }
    let bound = (t2 / t1).powi(2 * ev.n() as i32) / (a * a);
    let mut min_ratio = f64::INFINITY;
    let mut violations = 0;
    for x in sample {
        let ratio = ev.heat_kernel_scaled(t1, x)? / ev.heat_kernel_scaled(t2, x)?;
        if ratio < bound {
            violations += 1;
        }
        min_ratio = min_ratio.min(ratio);
    }
    Ok(RatioBoundReport {
        t1,
        t2,
        bound,
        min_ratio,
        min_margin: min_ratio - bound,
        violations,
        points: sample.len(),
    })
}

/// Default Koranyi radius for [`kernel_mass`]: the mass outside `N <= 7 sqrt(t)`
/// is below `1e-4`.
pub fn default_mass_radius(t: f64) -> f64 {
    7.0 * t.sqrt()
}

/// Default horizontal grid step for [`kernel_mass`].
pub fn default_mass_step(t: f64) -> f64 {
    0.25 * t.sqrt()
}

/// Riemann sum of `p_t` over the Koranyi ball `N(x) <= radius` on `H^1`.
///
/// The grid is uniform with step `h` in `g` and `v` and `4 h^2` in `zeta`,
/// so it is carried onto itself by the dilations. Points lie at integer
/// multiples of the steps.
pub fn kernel_mass(
    ev: &KernelEvaluator,
    t: f64,
    radius: f64,
    step: f64,
) -> Result<f64, KernelError> {
    use std::collections::HashMap;
    if !(t > 0.0) {
        return Err(KernelError::NonPositiveTime(t));
    }
    if !(radius > 0.0) || !(step > 0.0) {
        return Err(KernelError::InvalidArgument(
            "radius and step must be positive".into(),
        ));
    }
    if ev.n() != 1 {
        return Err(KernelError::InvalidArgument(
            "kernel_mass is implemented for n = 1".into(),
        ));
    }
    let hz = 4.0 * step * step;
    let m = (radius / step).floor() as i64;
    let r4 = radius.powi(4);
    // Multiplicity of each |xi|^2 = (i^2 + j^2) h^2 inside the square.
    let mut shells: HashMap<i64, u64> = HashMap::new();
    for i in -m..=m {
        for j in -m..=m {
            let s = i * i + j * j;
            let r2 = s as f64 * step * step;
            if r2 * r2 <= r4 {
                *shells.entry(s).or_insert(0) += 1;
            }
        }
    }
    let mut keys: Vec<i64> = shells.keys().copied().collect();
    keys.sort_unstable();
    let mut total = 0.0;
    for s in keys {
        let mult = shells[&s] as f64;
        let r2 = s as f64 * step * step;
        let zmax = (r4 - r2 * r2).max(0.0).sqrt();
        let kmax = (zmax / hz).floor() as i64;
        let r = r2.sqrt();
        let mut column = ev.heat_kernel_scaled_radial(t, r, 0.0)?;
        for k in 1..=kmax {
            column += 2.0 * ev.heat_kernel_scaled_radial(t, r, k as f64 * hz)?;
        }
        total += mult * column;
    }
    Ok(total * step * step * hz)
}

/// Riemann sum of the Euclidean kernel on `R^1` over `[-radius, radius]`.
pub fn kernel_mass_euclidean_1d(t: f64, radius: f64, step: f64) -> Result<f64, KernelError> {
    if !(radius > 0.0) || !(step > 0.0) {
        return Err(KernelError::InvalidArgument(
            "radius and step must be positive".into(),
        ));
    }
    let m = (radius / step).floor() as i64;
    let mut total = 0.0;
    for i in -m..=m {
        total += heat_kernel_euclidean(1, t, &[i as f64 * step])?;
    }
    Ok(total * step)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn origin_value() {
        let ev = KernelEvaluator::h1();
        let p = ev.heat_kernel_h(1.0, &HeisenbergPoint::identity(1)).unwrap();
        assert!((p - 1.0 / 64.0).abs() < 1e-12, "{p}");
        let p4 = ev.heat_kernel_h(4.0, &HeisenbergPoint::identity(1)).unwrap();
        // t^{-2} / 64 = 1/1024.
        assert!(rel(p4, 0.0009765625) < 1e-10, "{p4}");
        let s = ev.heat_kernel_scaled(0.25, &HeisenbergPoint::identity(1)).unwrap();
        assert!(rel(s, 0.25) < 1e-10, "{s}");
    }

    #[test]
    fn contour_matches_cosine_form() {
        let ev = KernelEvaluator::h1();
        for &(r, z) in &[(0.0, 1.0), (0.5, 8.0), (1.0, 0.0), (2.0, 3.0), (0.1, 12.0), (3.0, 0.5)] {
            let a = ev.p1(r, z).unwrap();
            let b = ev.heat_kernel_h_radial(1.0, r, z).unwrap();
            assert!(rel(a, b) < 1e-9, "r={r} z={z}: {a} vs {b}");
        }
    }

    #[test]
    fn nonpositive_time_is_rejected() {
        let ev = KernelEvaluator::h1();
        let x = HeisenbergPoint::identity(1);
        assert!(matches!(ev.heat_kernel_h(0.0, &x), Err(KernelError::NonPositiveTime(_))));
        assert!(ev.heat_kernel_scaled(-1.0, &x).is_err());
        assert!(heat_kernel_euclidean(1, 0.0, &[0.0]).is_err());
    }

    #[test]
    fn euclidean_examples() {
        assert!(rel(heat_kernel_euclidean(1, 1.0 / (4.0 * PI), &[0.0]).unwrap(), 1.0) < 1e-15);
        assert!(rel(heat_kernel_euclidean(2, 1.0, &[0.0, 0.0]).unwrap(), 1.0 / (4.0 * PI)) < 1e-15);
        let v = heat_kernel_euclidean(3, 2.0, &[2.0, 0.0, 0.0]).unwrap();
        assert!(rel(v, (8.0 * PI).powf(-1.5) * (-0.5_f64).exp()) < 1e-15);
    }

    #[test]
    fn envelope_examples() {
        assert_eq!(li_envelope(1, 0.0, 0.0), 1.0);
        assert_eq!(li_envelope(3, 0.0, 0.0), 1.0);
        assert!(rel(li_envelope(1, 0.0, 2.0), (-1.0_f64).exp()) < 1e-15);
        assert!(rel(li_envelope(2, 1.0, 1.0), (-0.25_f64).exp() / 2.0_f64.sqrt()) < 1e-15);
    }

    #[test]
    fn sandwich_at_origin_and_empty() {
        let ev = KernelEvaluator::h1();
        let est = li_sandwich_check(&ev, &[HeisenbergPoint::identity(1)]).unwrap();
        assert!(rel(est.a_empirical, 64.0) < 1e-10);
        assert_eq!(li_sandwich_check(&ev, &[]), Err(KernelError::EmptySample));
    }

    #[test]
    fn ratio_bound_examples() {
        let ev = KernelEvaluator::h1();
        let o = [HeisenbergPoint::identity(1)];
        let same = kernel_ratio_bound_check(&ev, 1.5, 1.5, &o, 64.0).unwrap();
        assert!(rel(same.min_ratio, 1.0) < 1e-14 && same.violations == 0);
        let r = kernel_ratio_bound_check(&ev, 2.0, 1.0, &o, 64.0).unwrap();
        assert!(rel(r.min_ratio, 0.25) < 1e-10);
        assert!(kernel_ratio_bound_check(&ev, 1.0, 2.0, &o, 64.0).is_err());
    }

    #[test]
    fn mass_vanishes_with_radius() {
        let ev = KernelEvaluator::h1();
        let m = kernel_mass(&ev, 1.0, 1e-3, 0.25).unwrap();
        assert!(m <= 0.25 * 0.25 * 0.25 / 64.0 * 1.000001);
        assert!(kernel_mass(&ev, 1.0, 0.0, 0.25).is_err());
        assert!(kernel_mass(&ev, 1.0, 1.0, -0.25).is_err());
    }

    #[test]
    fn higher_n_origin() {
        // p_1(0) = (4 pi)^{-n-1} int_0^inf (l / sinh l)^n dl; for n = 2 the
        // integral is pi^2 / 6.
        let ev = KernelEvaluator::new(GroupParams::new(2).unwrap());
        let expect = PI * PI / 6.0 / (4.0 * PI).powi(3);
        let p = ev.heat_kernel_h(1.0, &HeisenbergPoint::identity(2)).unwrap();
        assert!(rel(p, expect) < 1e-10, "{p} vs {expect}");
        let q = ev.p1(0.0, 0.0).unwrap();
        assert!(rel(q, expect) < 1e-10);
    }
}
