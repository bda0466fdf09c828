//! Heat semigroup on `H^1` for data that are radial in `xi`.
//!
//! A field `u(|xi|, zeta)` stays radial under the flow. After a Fourier
//! transform in `zeta` each mode `mu` evolves by an explicit radial kernel
//!
//! ```text
//! out^(r, mu) = int_0^inf G(r, rho, mu) u^(rho, mu) rho d rho
//! G = (c / sinh c) / (2t) exp(-a (r^2 + rho^2) + b) I0e(b)
//! c = 4 t mu,  a = c coth(c) / 4t,  b = (r rho / 2t)(c / sinh c)
//! ```
//!
//! obtained by averaging the twisted convolution over the angle of `xi`.
//! The radial integral uses the trapezoid rule with the Euler-Maclaurin
//! endpoint weight `h^2/12` at `rho = 0`; each row is normalized by its
//! untruncated zero-mode sum so that under-resolved steps (`4t << h^2`)
//! degrade to the identity instead of losing mass.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::grid::InitialData;
use super::{Semigroup, SolverError};
use crate::special::{bessel_i0e, c_coth, c_over_sinh};

/// Kernel rows are cut where `exp(-(r - rho)^2 / 4t) < e^{-41.5}`.
const BAND_FACTOR: f64 = 166.0;

/// Nodes `r_i = i h_r` (`i < nr`) and `zeta_k = (k - nz/2) h_z` (`k < nz`);
/// the `zeta` direction is periodic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub nr: usize,
    pub hr: f64,
    pub nz: usize,
    pub hz: f64,
}

impl RadialGrid {
    pub fn new(nr: usize, hr: f64, nz: usize, hz: f64) -> Result<Self, SolverError> {
        if nr < 4 || nz < 4 || nz % 2 != 0 {
            return Err(SolverError::InvalidConfig("radial grid needs nr >= 4 and even nz >= 4".into()));
        }
        if !(hr > 0.0 && hz > 0.0) {
            return Err(SolverError::InvalidConfig("grid steps must be positive".into()));
        }
        Ok(Self { nr, hr, nz, hz })
    }

    /// Box `|xi| < 9.6`, `|zeta| < 32`, resolving a bump of radius 1.
    pub fn default_coarse() -> Self {
        Self { nr: 96, hr: 0.1, nz: 512, hz: 0.125 }
    }

    /// Same box with all steps halved.
    pub fn refined(&self) -> Self {
        Self { nr: 2 * self.nr, hr: 0.5 * self.hr, nz: 2 * self.nz, hz: 0.5 * self.hz }
    }

    /// Grid carried by the dilation `delta_2`: steps `(2 h_r, 4 h_z)`.
    pub fn dilated(&self) -> Self {
        Self { hr: 2.0 * self.hr, hz: 4.0 * self.hz, ..*self }
    }

    pub fn len(&self) -> usize {
        self.nr * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.hr
    }

    pub fn zeta(&self, k: usize) -> f64 {
        (k as f64 - (self.nz / 2) as f64) * self.hz
    }

    pub fn index(&self, i: usize, k: usize) -> usize {
        i * self.nz + k
    }

    /// Radial weights for `int_0^inf F(rho) rho d rho`.
    pub fn radial_weight(&self, j: usize) -> f64 {
        if j == 0 {
            self.hr * self.hr / 12.0
        } else {
            j as f64 * self.hr * self.hr
        }
    }

    pub fn sample(&self, data: &InitialData) -> RadialField {
        let mut values = Vec::with_capacity(self.len());
        for i in 0..self.nr {
            for k in 0..self.nz {
                values.push(data.value(self.r(i), self.zeta(k)));
            }
        }
        RadialField { grid: *self, data: values }
    }

    /// True if some value in the outer quarter of the box exceeds
    /// `rel * sup`.
    pub fn edge_exceeds(&self, u: &[f64], rel: f64) -> bool {
        let sup = super::sup_norm(u);
        if sup == 0.0 {
            return false;
        }
        let i_edge = 3 * self.nr / 4;
        let k_edge = 3 * self.nz / 8;
        let mid = self.nz / 2;
        (0..self.nr).any(|i| {
            (0..self.nz).any(|k| {
                let outer = i > i_edge || k.abs_diff(mid) > k_edge;
                outer && u[self.index(i, k)] > rel * sup
            })
        })
    }

    /// Resample onto [`RadialGrid::dilated`]: node `(i, k)` of the new grid
    /// is node `(2i, mid + 4(k - mid))` of the old one; nodes outside the old
    /// box are zero.
    pub fn regrid(&self, u: &[f64]) -> (RadialGrid, Vec<f64>) {
        let new = self.dilated();
        let mid = (self.nz / 2) as i64;
        let mut out = vec![0.0; new.len()];
        for i in 0..new.nr {
            let oi = 2 * i;
            if oi >= self.nr {
                break;
            }
            for k in 0..new.nz {
                let ok = mid + 4 * (k as i64 - mid);
                if ok >= 0 && (ok as usize) < self.nz {
                    out[new.index(i, k)] = u[self.index(oi, ok as usize)];
                }
            }
        }
        (new, out)
    }

    pub fn mass(&self, u: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.nr {
            let row: f64 = u[i * self.nz..(i + 1) * self.nz].iter().sum();
            total += self.radial_weight(i) * row;
        }
        2.0 * PI * total * self.hz
    }

    /// Supremum over nodes, with the node where it is attained.
    pub fn argmax(&self, u: &[f64]) -> (f64, usize, usize) {
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for i in 0..self.nr {
            for k in 0..self.nz {
                let v = u[self.index(i, k)];
                if v > best.0 {
                    best = (v, i, k);
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub grid: RadialGrid,
    pub data: Vec<f64>,
}

impl RadialField {
    pub fn sup(&self) -> f64 {
        super::sup_norm(&self.data)
    }

    pub fn mass(&self) -> f64 {
        self.grid.mass(&self.data)
    }
}

/// One banded row: coefficients for `j in start..start + coef.len()`.
#[derive(Debug, Clone)]
struct Row {
    start: usize,
    coef: Vec<f64>,
}

/// Radial mode kernel of `e^{tL}` on `H^1`.
pub fn mode_kernel(t: f64, r: f64, rho: f64, mu: f64) -> f64 {
    let c = 4.0 * t * mu;
    let cs = c_over_sinh(c);
    let a = c_coth(c) / (4.0 * t);
    let b = r * rho / (2.0 * t) * cs;
    cs / (2.0 * t) * (-a * (r * r + rho * rho) + b).exp() * bessel_i0e(b)
}

fn band(t: f64, h: f64) -> usize {
    ((BAND_FACTOR * t).sqrt() / h).ceil() as usize + 1
}

/// Banded rows `K_ij = W_j G(r_i, rho_j) / S_i`, with `S_i` the zero-mode
/// row sum continued past the end of the grid.
fn build_rows(
    nr: usize,
    h: f64,
    t: f64,
    weight: &dyn Fn(usize) -> f64,
    kernel: &dyn Fn(f64, f64) -> f64,
    norm_kernel: &dyn Fn(f64, f64) -> f64,
) -> Vec<Row> {
    let w = band(t, h);
    (0..nr)
        .map(|i| {
            let r = i as f64 * h;
            let lo = i.saturating_sub(w);
            let hi_ext = i + w;
            let mut s = 0.0;
            for j in lo..=hi_ext {
                s += weight(j) * norm_kernel(r, j as f64 * h);
            }
            let hi = hi_ext.min(nr - 1);
            let scale = if s > 0.0 { 1.0 / s } else { 1.0 };
            let coef = (lo..=hi).map(|j| weight(j) * kernel(r, j as f64 * h) * scale).collect();
            Row { start: lo, coef }
        })
        .collect()
}

struct ModeTables {
    t: f64,
    /// Rows for `|mu_m|`, `m = 0..=nz/2`.
    modes: Vec<Vec<Row>>,
}

/// [`Semigroup`] on a [`RadialGrid`] of `H^1`, caching kernel tables for the
/// most recent step sizes.
pub struct RadialSemigroup {
    grid: RadialGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    cache: VecDeque<ModeTables>,
    cache_size: usize,
}

impl std::fmt::Debug for RadialSemigroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialSemigroup").field("grid", &self.grid).finish()
    }
}

impl RadialSemigroup {
    pub fn new(grid: RadialGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.nz),
            inverse: planner.plan_fft_inverse(grid.nz),
            cache: VecDeque::new(),
            cache_size: 4,
        }
    }

    pub fn with_cache_size(mut self, size: usize) -> Self {
        self.cache_size = size.max(1);
        self
    }

    pub fn grid(&self) -> RadialGrid {
        self.grid
    }

    pub fn mode_frequency(&self, m: usize) -> f64 {
        2.0 * PI * m as f64 / (self.grid.nz as f64 * self.grid.hz)
    }

    fn tables(&mut self, t: f64) -> usize {
        if let Some(pos) = self.cache.iter().position(|c| c.t == t) {
            return pos;
        }
        let g = self.grid;
        let weight = |j: usize| g.radial_weight(j);
        let norm = |r: f64, rho: f64| mode_kernel(t, r, rho, 0.0);
        let modes: Vec<Vec<Row>> = (0..=g.nz / 2)
            .into_par_iter()
            .map(|m| {
                let mu = 2.0 * PI * m as f64 / (g.nz as f64 * g.hz);
                let kernel = |r: f64, rho: f64| mode_kernel(t, r, rho, mu);
                build_rows(g.nr, g.hr, t, &weight, &kernel, &norm)
            })
            .collect();
        if self.cache.len() >= self.cache_size {
            self.cache.pop_front();
        }
        self.cache.push_back(ModeTables { t, modes });
        self.cache.len() - 1
    }
}

impl Semigroup for RadialSemigroup {
    fn len(&self) -> usize {
        self.grid.len()
    }

    fn apply(&mut self, u: &[f64], t: f64) -> Result<Vec<f64>, SolverError> {
        if !(t > 0.0) {
            return Err(SolverError::NonPositiveTime(t));
        }
        let g = self.grid;
        if u.len() != g.len() {
            return Err(SolverError::LengthMismatch(u.len(), g.len()));
        }
        let idx = self.tables(t);
        let (nr, nz) = (g.nr, g.nz);
        let mut spec: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let forward = self.forward.clone();
        spec.par_chunks_mut(nz).for_each(|row| forward.process(row));
        // Transpose to mode-major for the radial sums.
        let mut by_mode = vec![Complex64::new(0.0, 0.0); g.len()];
        for i in 0..nr {
            for m in 0..nz {
                by_mode[m * nr + i] = spec[i * nz + m];
            }
        }
        let tables = &self.cache[idx];
        let mut out_mode = vec![Complex64::new(0.0, 0.0); g.len()];
        out_mode.par_chunks_mut(nr).enumerate().for_each(|(m, out)| {
            let mm = m.min(nz - m);
            let rows = &tables.modes[mm];
            let src = &by_mode[m * nr..(m + 1) * nr];
            for (i, row) in rows.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, s) in row.coef.iter().zip(&src[row.start..row.start + row.coef.len()]) {
                    acc += s * *c;
                }
                out[i] = acc;
            }
        });
        for i in 0..nr {
            for m in 0..nz {
                spec[i * nz + m] = out_mode[m * nr + i];
            }
        }
        let inverse = self.inverse.clone();
        spec.par_chunks_mut(nz).for_each(|row| inverse.process(row));
        let scale = 1.0 / nz as f64;
        Ok(spec.iter().map(|c| c.re * scale).collect())
    }

    fn mass(&self, u: &[f64]) -> f64 {
        self.grid.mass(u)
    }
}

/// Heat semigroup on `R^d` (`d <= 3`) for radial data on nodes `r_i = i h`.
#[derive(Debug, Clone)]
pub struct EuclideanRadial {
    pub dim: usize,
    pub nr: usize,
    pub hr: f64,
    cache: Option<(f64, Vec<Row>)>,
}

impl EuclideanRadial {
    pub fn new(dim: usize, nr: usize, hr: f64) -> Result<Self, SolverError> {
        if !(1..=3).contains(&dim) {
            return Err(SolverError::InvalidConfig(format!("euclidean solver supports d = 1, 2, 3, got {dim}")));
        }
        if nr < 4 || !(hr > 0.0) {
            return Err(SolverError::InvalidConfig("radial grid needs nr >= 4 and h > 0".into()));
        }
        Ok(Self { dim, nr, hr, cache: None })
    }

    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.hr
    }

    /// Weights for `int_{R^d} u` of a radial function, without the sphere area.
    pub fn weight(&self, j: usize) -> f64 {
        let h = self.hr;
        match (self.dim, j) {
            (1, 0) => 0.5 * h,
            (1, _) => h,
            (2, 0) => h * h / 12.0,
            (2, _) => j as f64 * h * h,
            (_, _) => (j as f64 * h).powi(2) * h,
        }
    }

    fn sphere(&self) -> f64 {
        match self.dim {
            1 => 2.0,
            2 => 2.0 * PI,
            _ => 4.0 * PI,
        }
    }

    /// Kernel against the weights of [`EuclideanRadial::weight`].
    pub fn kernel(&self, t: f64, r: f64, rho: f64) -> f64 {
        let p = |x: f64| (4.0 * PI * t).powf(-0.5 * self.dim as f64) * (-x * x / (4.0 * t)).exp();
        match self.dim {
            1 => p(r - rho) + p(r + rho),
            2 => mode_kernel(t, r, rho, 0.0),
            _ => {
                let z = r * rho / (2.0 * t);
                let angular = if z < 1e-8 { 2.0 - 2.0 * z } else { (1.0 - (-2.0 * z).exp()) / z };
                p(r - rho) * 2.0 * PI * angular
            }
        }
    }

    pub fn sample(&self, data: &InitialData) -> Vec<f64> {
        (0..self.nr).map(|i| data.value_euclidean(self.r(i))).collect()
    }
}

impl Semigroup for EuclideanRadial {
    fn len(&self) -> usize {
        self.nr
    }

    fn apply(&mut self, u: &[f64], t: f64) -> Result<Vec<f64>, SolverError> {
        if !(t > 0.0) {
            return Err(SolverError::NonPositiveTime(t));
        }
        if u.len() != self.nr {
            return Err(SolverError::LengthMismatch(u.len(), self.nr));
        }
        if self.cache.as_ref().is_none_or(|c| c.0 != t) {
            let weight = |j: usize| self.weight(j);
            let kernel = |r: f64, rho: f64| self.kernel(t, r, rho);
            let rows = build_rows(self.nr, self.hr, t, &weight, &kernel, &kernel);
            self.cache = Some((t, rows));
        }
        let rows = &self.cache.as_ref().expect("cache filled above").1;
        Ok(rows
            .iter()
            .map(|row| row.coef.iter().zip(&u[row.start..row.start + row.coef.len()]).map(|(c, x)| c * x).sum())
            .collect())
    }

    fn mass(&self, u: &[f64]) -> f64 {
        self.sphere() * u.iter().enumerate().map(|(j, x)| self.weight(j) * x).sum::<f64>()
    }
}
