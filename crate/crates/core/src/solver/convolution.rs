//! Group convolution `out(x) = sum_y p_t(y^{-1} x) u(y) dV` on a Cartesian
//! `H^1` grid, by direct summation or by a truncated stencil per
//! `zeta`-Fourier mode.
//!
//! For the second path, with `u^(xi, mu)` the Fourier transform in `zeta`,
//!
//! ```text
//! out^(xi, mu) = int p^(xi - eta, mu) exp(-2 i mu (dg v_xi - dv g_xi)) u^(eta, mu) d eta
//! p^(xi, mu)   = (4 pi t)^{-1} (c / sinh c) exp(-|xi|^2 c coth(c) / 4t),  c = 4 t mu
//! ```
//!
//! where `(dg, dv) = xi - eta`. The `zeta` direction is treated as periodic.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::{Field3, GridSpec};
use super::{Semigroup, SolverError};
use crate::heat_kernel::KernelEvaluator;
use crate::special::{c_coth, c_over_sinh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvolutionMethod {
    Direct,
    Spectral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionOutput {
    pub field: Field3,
    /// Mass in minus mass out; the part of the kernel falling outside the box.
    pub boundary_mass_loss: f64,
}

pub fn semigroup_apply(
    ev: &KernelEvaluator,
    grid: &GridSpec,
    u: &Field3,
    t: f64,
    method: ConvolutionMethod,
) -> Result<ConvolutionOutput, SolverError> {
    if u.data.iter().any(|&x| x < 0.0) {
        return Err(SolverError::Precondition("semigroup_apply needs u >= 0".into()));
    }
    let data = match method {
        ConvolutionMethod::Direct => DirectConvolution::new(*ev, *grid)?.apply(&u.data, t)?,
        ConvolutionMethod::Spectral => SpectralConvolution::new(*grid)?.apply(&u.data, t)?,
    };
    let field = Field3 { grid: *grid, data };
    Ok(ConvolutionOutput { boundary_mass_loss: u.mass() - field.mass(), field })
}

/// `O(N^2)` sum with kernel values from [`KernelEvaluator::heat_kernel_scaled`],
/// memoized on `(|dg|, |dv|, |zeta|)`.
#[derive(Debug, Clone)]
pub struct DirectConvolution {
    pub ev: KernelEvaluator,
    pub grid: GridSpec,
    memo: HashMap<(u32, u32, i64), f64>,
    memo_t: f64,
}

impl DirectConvolution {
    pub fn new(ev: KernelEvaluator, grid: GridSpec) -> Result<Self, SolverError> {
        if ev.n() != 1 {
            return Err(SolverError::InvalidConfig("grid convolution is implemented on H^1".into()));
        }
        Ok(Self { ev, grid, memo: HashMap::new(), memo_t: f64::NAN })
    }

    /// Center coordinate of `y^{-1} x` for integer offsets `(a, b, dk) = x - y`
    /// and centered output indices `(ix, jx)`.
    pub fn zeta_offset(&self, a: i64, b: i64, dk: i64, ix: i64, jx: i64) -> f64 {
        let g = &self.grid;
        dk as f64 * g.hz - 2.0 * g.hg * g.hv * (a * jx - b * ix) as f64
    }

    fn kernel(&mut self, t: f64, a: i64, b: i64, zeta: f64) -> Result<f64, SolverError> {
        let quantum = 1e-9 * self.grid.hz.min(self.grid.hg * self.grid.hv);
        let key = (a.unsigned_abs() as u32, b.unsigned_abs() as u32, (zeta.abs() / quantum).round() as i64);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        let dg = a as f64 * self.grid.hg;
        let dv = b as f64 * self.grid.hv;
        let v = self.ev.heat_kernel_scaled_radial(t, (dg * dg + dv * dv).sqrt(), zeta)?;
        self.memo.insert(key, v);
        Ok(v)
    }
}

impl Semigroup for DirectConvolution {
    fn len(&self) -> usize {
        self.grid.len()
    }

    fn apply(&mut self, u: &[f64], t: f64) -> Result<Vec<f64>, SolverError> {
        if !(t > 0.0) {
            return Err(SolverError::NonPositiveTime(t));
        }
        if u.len() != self.grid.len() {
            return Err(SolverError::LengthMismatch(u.len(), self.grid.len()));
        }
        if self.memo_t != t {
            self.memo.clear();
            self.memo_t = t;
        }
        let g = self.grid;
        let sources: Vec<(usize, usize, usize, f64)> = (0..g.ng)
            .flat_map(|i| (0..g.nv).flat_map(move |j| (0..g.nz).map(move |k| (i, j, k))))
            .filter_map(|(i, j, k)| {
                let val = u[g.index(i, j, k)];
                (val != 0.0).then_some((i, j, k, val))
            })
            .collect();
        let mut out = vec![0.0; g.len()];
        let dvol = g.cell_volume();
        for i in 0..g.ng {
            for j in 0..g.nv {
                for k in 0..g.nz {
                    let (ix, jx, _) = g.centered(i, j, k);
                    let mut acc = 0.0;
                    for &(iy, jy, ky, val) in &sources {
                        let a = i as i64 - iy as i64;
                        let b = j as i64 - jy as i64;
                        let dk = k as i64 - ky as i64;
                        let zeta = self.zeta_offset(a, b, dk, ix, jx);
                        acc += self.kernel(t, a, b, zeta)? * val;
                    }
                    out[g.index(i, j, k)] = acc * dvol;
                }
            }
        }
        Ok(out)
    }

    fn mass(&self, u: &[f64]) -> f64 {
        u.iter().sum::<f64>() * self.grid.cell_volume()
    }
}

/// Truncated-stencil convolution: FFT in `zeta`, then per mode a twisted
/// 2D convolution whose stencil is cut where `p^` drops below
/// `1e-14` of its peak.
pub struct SpectralConvolution {
    pub grid: GridSpec,
    pub cutoff: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralConvolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralConvolution").field("grid", &self.grid).field("cutoff", &self.cutoff).finish()
    }
}

impl SpectralConvolution {
    pub fn new(grid: GridSpec) -> Result<Self, SolverError> {
        let mut planner = FftPlanner::new();
        Ok(Self {
            grid,
            cutoff: 1e-14,
            forward: planner.plan_fft_forward(grid.nz),
            inverse: planner.plan_fft_inverse(grid.nz),
        })
    }

    pub fn mode_frequency(&self, m: usize) -> f64 {
        let nz = self.grid.nz;
        let signed = if m < nz.div_ceil(2) { m as f64 } else { m as f64 - nz as f64 };
        2.0 * PI * signed / (nz as f64 * self.grid.hz)
    }
}

/// Fourier transform in `zeta` of `p_t(xi, .)` at frequency `mu`.
pub fn kernel_zeta_transform(t: f64, xi_norm_sq: f64, mu: f64) -> f64 {
    let c = 4.0 * t * mu;
    c_over_sinh(c) / (4.0 * PI * t) * (-xi_norm_sq * c_coth(c) / (4.0 * t)).exp()
}

impl Semigroup for SpectralConvolution {
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
        let (ng, nv, nz) = (g.ng, g.nv, g.nz);
        let mut spec: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        for row in spec.chunks_mut(nz) {
            self.forward.process(row);
        }
        let mut out_spec = vec![Complex64::new(0.0, 0.0); g.len()];
        let area = g.hg * g.hv;
        for m in 0..nz {
            let mu = self.mode_frequency(m);
            let peak = kernel_zeta_transform(t, 0.0, mu);
            let mut stencil = Vec::new();
            for a in -(ng as i64 - 1)..ng as i64 {
                for b in -(nv as i64 - 1)..nv as i64 {
                    let dg = a as f64 * g.hg;
                    let dv = b as f64 * g.hv;
                    let w = kernel_zeta_transform(t, dg * dg + dv * dv, mu);
                    if w >= self.cutoff * peak {
                        stencil.push((a, b, w * area));
                    }
                }
            }
            for i in 0..ng {
                for j in 0..nv {
                    let (ix, jx, _) = g.centered(i, j, 0);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &(a, b, w) in &stencil {
                        let si = i as i64 - a;
                        let sj = j as i64 - b;
                        if si < 0 || sj < 0 || si >= ng as i64 || sj >= nv as i64 {
                            continue;
                        }
                        let phase = -2.0 * mu * g.hg * g.hv * (a * jx - b * ix) as f64;
                        acc += Complex64::from_polar(w, phase) * spec[g.index(si as usize, sj as usize, m)];
                    }
                    out_spec[g.index(i, j, m)] = acc;
                }
            }
        }
        for row in out_spec.chunks_mut(nz) {
            self.inverse.process(row);
        }
        let scale = 1.0 / nz as f64;
        Ok(out_spec.iter().map(|c| c.re * scale).collect())
    }

    fn mass(&self, u: &[f64]) -> f64 {
        u.iter().sum::<f64>() * self.grid.cell_volume()
    }
}
