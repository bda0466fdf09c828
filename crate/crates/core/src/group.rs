//! Heisenberg group algebra: law, inverse, dilations, gauges and the
//! Carnot-Caratheodory distance from the origin.
//!
//! Coordinates are `(g, v, zeta)` with `xi = g + i v`. The law is
//!
//! ```text
//! (xi, zeta) o (xi', zeta') = (xi + xi', zeta + zeta' + 2 s(xi, xi'))
//! s(xi, xi') = sum_i (v_i g'_i - g_i v'_i)
//! ```
//!
//! which makes `X_i = d/dg_i + 2 v_i d/dzeta` and `Y_i = d/dv_i - 2 g_i d/dzeta`
//! left-invariant. With this normalization `[X_i, Y_i] = -4 d/dzeta`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("group index must be at least 1")]
    ZeroDimension,
    #[error("dilation factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("non-finite coordinate")]
    NonFinite,
}

/// Structural constants of `H^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupParams {
    n: usize,
}

impl GroupParams {
    pub fn new(n: usize) -> Result<Self, GeometryError> {
        if n == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Homogeneous dimension `Q = 2n + 2`.
    pub fn homogeneous_dim(&self) -> usize {
        2 * self.n + 2
    }

    pub fn topological_dim(&self) -> usize {
        2 * self.n + 1
    }
}

/// A point `(xi, zeta)` of `H^n`, `xi = g + i v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergPoint {
    pub g: Vec<f64>,
    pub v: Vec<f64>,
    pub zeta: f64,
}

impl HeisenbergPoint {
    pub fn new(g: Vec<f64>, v: Vec<f64>, zeta: f64) -> Result<Self, GeometryError> {
        if g.len() != v.len() {
            return Err(GeometryError::DimensionMismatch(g.len(), v.len()));
        }
        if g.is_empty() {
            return Err(GeometryError::ZeroDimension);
        }
        if !zeta.is_finite() || g.iter().chain(v.iter()).any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { g, v, zeta })
    }

    /// Point of `H^1`.
    pub fn h1(g: f64, v: f64, zeta: f64) -> Self {
        Self {
            g: vec![g],
            v: vec![v],
            zeta,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            g: vec![0.0; n],
            v: vec![0.0; n],
            zeta: 0.0,
        }
    }

    /// Build from a flat coordinate list `g_1..g_n, v_1..v_n, zeta`.
    pub fn from_flat(coords: &[f64]) -> Result<Self, GeometryError> {
        if coords.len() < 3 || coords.len() % 2 == 0 {
            return Err(GeometryError::DimensionMismatch(coords.len(), 3));
        }
        let n = (coords.len() - 1) / 2;
        Self::new(
            coords[..n].to_vec(),
            coords[n..2 * n].to_vec(),
            coords[2 * n],
        )
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    /// `||xi||^2 = ||g||^2 + ||v||^2`.
    pub fn xi_norm_sq(&self) -> f64 {
        self.g.iter().chain(self.v.iter()).map(|c| c * c).sum()
    }

    pub fn xi_norm(&self) -> f64 {
        self.xi_norm_sq().sqrt()
    }
}

/// Symplectic form `s(xi, xi') = sum_i (v_i g'_i - g_i v'_i)`.
pub fn symplectic(a: &HeisenbergPoint, b: &HeisenbergPoint) -> f64 {
    a.g.iter()
        .zip(&a.v)
        .zip(b.g.iter().zip(&b.v))
        .map(|((ga, va), (gb, vb))| va * gb - ga * vb)
        .sum()
}

pub fn group_law(
    a: &HeisenbergPoint,
    b: &HeisenbergPoint,
) -> Result<HeisenbergPoint, GeometryError> {
    if a.n() != b.n() {
        return Err(GeometryError::DimensionMismatch(a.n(), b.n()));
    }
    Ok(HeisenbergPoint {
        g: a.g.iter().zip(&b.g).map(|(x, y)| x + y).collect(),
        v: a.v.iter().zip(&b.v).map(|(x, y)| x + y).collect(),
        zeta: a.zeta + b.zeta + 2.0 * symplectic(a, b),
    })
}

pub fn inverse(x: &HeisenbergPoint) -> HeisenbergPoint {
    HeisenbergPoint {
        g: x.g.iter().map(|c| -c).collect(),
        v: x.v.iter().map(|c| -c).collect(),
        zeta: -x.zeta,
    }
}

/// Anisotropic dilation `(xi, zeta) -> (r xi, r^2 zeta)`.
pub fn dilate(x: &HeisenbergPoint, r: f64) -> Result<HeisenbergPoint, GeometryError> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(GeometryError::NonPositiveScale(r));
    }
    Ok(HeisenbergPoint {
        g: x.g.iter().map(|c| r * c).collect(),
        v: x.v.iter().map(|c| r * c).collect(),
        zeta: r * r * x.zeta,
    })
}

/// Koranyi gauge `(||xi||^4 + zeta^2)^{1/4}`.
pub fn koranyi_gauge(x: &HeisenbergPoint) -> f64 {
    koranyi_from_parts(x.xi_norm(), x.zeta)
}

pub fn koranyi_from_parts(xi_norm: f64, zeta: f64) -> f64 {
    let r2 = xi_norm * xi_norm;
    (r2 * r2 + zeta * zeta).sqrt().sqrt()
}

/// Carnot-Caratheodory distance from the origin.
pub fn cc_distance(x: &HeisenbergPoint) -> f64 {
    cc_distance_from_parts(x.xi_norm(), x.zeta)
}

/// `rho` as a function of `(||xi||, zeta)`; the distance is radial in `xi`.
pub fn cc_distance_from_parts(xi_norm: f64, zeta: f64) -> f64 {
    let r = xi_norm.abs();
    let z = zeta.abs();
    if z == 0.0 {
        return r;
    }
    if r == 0.0 {
        return (std::f64::consts::PI * z).sqrt();
    }
    let theta = geodesic_angle(r, z);
    let s = std::f64::consts::PI - theta;
    if theta < 1e-6 {
        r * (1.0 + theta * theta / 6.0)
    } else {
        r * theta / s.sin()
    }
}

/// Half-angle `theta in [0, pi)` of the circular arc whose horizontal lift
/// joins the origin to a point with `||xi|| = r`, `|zeta| = z`. It solves
/// `(theta - sin(theta)cos(theta)) / sin^2(theta) = z / r^2`.
///
/// The same angle is the saddle point of the oscillatory kernel integral.
pub fn geodesic_angle(r: f64, z: f64) -> f64 {
    use std::f64::consts::PI;
    if z == 0.0 {
        return 0.0;
    }
    if r == 0.0 {
        return PI;
    }
    let target = z / (r * r);
    // Work in s = pi - theta so the regime theta -> pi keeps relative precision.
    let mu_of_s = |s: f64| {
        let theta = PI - s;
        if theta < 1e-3 {
            // (x - sin x)/2 with x = 2 theta, over sin^2(theta).
            let x = 2.0 * theta;
            let x2 = x * x;
            let num = x * x2 / 12.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0));
            let st = theta.sin();
            num / (st * st)
        } else {
            let ss = s.sin();
            (theta + ss * s.cos()) / (ss * ss)
        }
    };
    if !target.is_finite() {
        return PI;
    }
    // mu is decreasing in s on (0, pi).
    let (mut lo, mut hi) = (0.0_f64, PI);
    // Bracket from below geometrically so tiny s are resolved.
    let mut probe = PI / 2.0;
    while probe > 1e-300 && mu_of_s(probe) < target {
        hi = probe;
        probe *= 0.5;
    }
    lo = lo.max(if mu_of_s(probe) >= target { probe } else { 0.0 });
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mu_of_s(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    PI - 0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn identity_is_neutral() {
        let x = HeisenbergPoint::h1(1.0, 2.0, 3.0);
        let e = HeisenbergPoint::identity(1);
        assert_eq!(group_law(&e, &x).unwrap(), x);
        assert_eq!(group_law(&x, &e).unwrap(), x);
    }

    #[test]
    fn inverse_cancels() {
        let x = HeisenbergPoint::h1(0.7, -0.3, 1.1);
        let y = group_law(&x, &inverse(&x)).unwrap();
        assert_eq!(y, HeisenbergPoint::identity(1));
        assert_eq!(inverse(&HeisenbergPoint::h1(1.0, 2.0, 3.0)), HeisenbergPoint::h1(-1.0, -2.0, -3.0));
        assert_eq!(inverse(&inverse(&x)), x);
    }

    #[test]
    fn group_commutator_in_center() {
        let a = HeisenbergPoint::h1(1.0, 0.0, 0.0);
        let b = HeisenbergPoint::h1(0.0, 1.0, 0.0);
        let ab = group_law(&a, &b).unwrap();
        let ba = group_law(&b, &a).unwrap();
        assert_eq!(ab.zeta - ba.zeta, -4.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = HeisenbergPoint::identity(1);
        let b = HeisenbergPoint::identity(2);
        assert!(matches!(group_law(&a, &b), Err(GeometryError::DimensionMismatch(1, 2))));
        assert!(HeisenbergPoint::new(vec![1.0], vec![], 0.0).is_err());
        assert!(HeisenbergPoint::from_flat(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn dilation_examples() {
        let x = HeisenbergPoint::h1(1.0, 0.0, 1.0);
        assert_eq!(dilate(&x, 1.0).unwrap(), x);
        assert_eq!(dilate(&x, 3.0).unwrap(), HeisenbergPoint::h1(3.0, 0.0, 9.0));
        let y = dilate(&dilate(&x, 2.0).unwrap(), 0.5).unwrap();
        assert_eq!(y, x);
        assert!(dilate(&x, 0.0).is_err());
        assert!(dilate(&x, -1.0).is_err());
    }

    #[test]
    fn gauge_examples() {
        assert_eq!(koranyi_gauge(&HeisenbergPoint::identity(1)), 0.0);
        assert_eq!(koranyi_gauge(&HeisenbergPoint::h1(1.0, 0.0, 0.0)), 1.0);
        assert!(close(koranyi_gauge(&HeisenbergPoint::h1(0.0, 0.0, 4.0)), 2.0, 1e-15));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(cc_distance(&HeisenbergPoint::h1(2.0, 0.0, 0.0)), 2.0);
        assert_eq!(cc_distance(&HeisenbergPoint::identity(1)), 0.0);
        assert!(close(cc_distance(&HeisenbergPoint::h1(0.0, 0.0, 1.0)), PI.sqrt(), 1e-15));
        // Approaching the center continuously.
        let near = cc_distance(&HeisenbergPoint::h1(1e-9, 0.0, 1.0));
        assert!(close(near, PI.sqrt(), 1e-7), "{near}");
    }

    #[test]
    fn distance_is_radial_in_xi_for_higher_n() {
        let a = HeisenbergPoint::new(vec![0.6, 0.0], vec![0.0, 0.8], 0.5).unwrap();
        let b = HeisenbergPoint::h1(1.0, 0.0, 0.5);
        assert!(close(cc_distance(&a), cc_distance(&b), 1e-14));
    }

    #[test]
    fn geodesic_angle_solves_its_equation() {
        for &(r, z) in &[(1.0, 0.1), (1.0, 1.0), (0.3, 5.0), (1e-4, 2.0), (2.0, 1e-6)] {
            let t = geodesic_angle(r, z);
            let mu = (t - t.sin() * t.cos()) / t.sin().powi(2);
            assert!(close(mu, z / (r * r), 1e-9), "r={r} z={z} mu={mu}");
        }
    }
}
