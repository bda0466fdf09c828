//! Picard iterates of the Duhamel map,
//! `v_k(t) = e^{tL} u_0 + int_0^t phi(s) e^{(t-s)L} f(v_{k-1}(s)) ds`,
//! on a fixed set of time nodes.

use super::{sup_norm, Semigroup, SolverError};
use crate::nonlinearity::{NonlinearitySpec, TimeWeightSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    /// Number of geometric nodes after `t = 0`.
    pub nodes: usize,
    /// First positive node as a fraction of the horizon.
    pub first_node: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self { nodes: 16, first_node: 1e-3 }
    }
}

impl PicardOptions {
    /// `0, t_1, ..., t_m = horizon` with `t_{j+1} / t_j` constant.
    pub fn time_nodes(&self, horizon: f64) -> Vec<f64> {
        let m = self.nodes.max(1);
        let t1 = horizon * self.first_node;
        let q = if m > 1 { (horizon / t1).powf(1.0 / (m - 1) as f64) } else { 1.0 };
        let mut out = vec![0.0];
        out.extend((0..m).map(|j| if j + 1 == m { horizon } else { t1 * q.powi(j as i32) }));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardTrace {
    pub times: Vec<f64>,
    /// `iterates[k][i]` is `v_k` at `times[i]`.
    pub iterates: Vec<Vec<Vec<f64>>>,
    /// `sup |v_k - v_{k-1}|` over all nodes, for `k >= 1`.
    pub deltas: Vec<f64>,
    /// `min (v_k - v_{k-1})` over all nodes, for `k >= 1`.
    pub min_deltas: Vec<f64>,
}

impl PicardTrace {
    pub fn k_max(&self) -> usize {
        self.iterates.len() - 1
    }

    /// Pointwise `v_k >= v_{k-1} - tol` for every `k`.
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.min_deltas.iter().all(|&d| d >= -tol)
    }

    /// Largest `v_k / v_0` over nodes where `v_0 >= floor * sup v_0(t)`.
    pub fn max_ratio_to_v0(&self, floor: f64) -> f64 {
        let mut worst: f64 = 1.0;
        for k in 1..self.iterates.len() {
            for (vk, v0) in self.iterates[k].iter().zip(&self.iterates[0]) {
                let cut = floor * sup_norm(v0);
                for (a, b) in vk.iter().zip(v0) {
                    if *b > cut && *b > 0.0 {
                        worst = worst.max(a / b);
                    }
                }
            }
        }
        worst
    }
}

/// Builds `v_0, ..., v_{k_max}` at the nodes of `opts`. The Duhamel integral
/// uses the trapezoid rule over the nodes, accumulated recursively so that
/// every node costs one semigroup application per iterate:
/// `acc_{i+1} = e^{d_{i+1} L}[acc_i + c_i g_i]`, `I_i = acc_i + d_i/2 g_i`.
pub fn picard_iterate<S: Semigroup + ?Sized>(
    semigroup: &mut S,
    u0: &[f64],
    phi: &TimeWeightSpec,
    f: &NonlinearitySpec,
    horizon: f64,
    k_max: usize,
    opts: PicardOptions,
) -> Result<PicardTrace, SolverError> {
    if !(horizon > 0.0) {
        return Err(SolverError::NonPositiveTime(horizon));
    }
    if u0.len() != semigroup.len() {
        return Err(SolverError::LengthMismatch(u0.len(), semigroup.len()));
    }
    if u0.iter().any(|&x| !(x >= 0.0)) || sup_norm(u0) == 0.0 {
        return Err(SolverError::Precondition("Picard iteration needs u0 >= 0, not identically zero".into()));
    }
    if !f.check_ratio_monotone()? {
        return Err(SolverError::Precondition("f(v)/v must be non-decreasing".into()));
    }
    let times = opts.time_nodes(horizon);
    let m = times.len();
    let len = u0.len();
    let source = |v: &[f64], t: f64| -> Result<Vec<f64>, SolverError> {
        let w = phi.eval(t);
        v.iter().map(|&x| Ok(w * f.eval(x.max(0.0))?)).collect()
    };
    let mut iterates = vec![vec![u0.to_vec()]; k_max + 1];
    // acc[k] and g[k] belong to iterate k + 1.
    let mut acc = vec![vec![0.0; len]; k_max];
    let mut g: Vec<Vec<f64>> = Vec::with_capacity(k_max);
    for k in 0..k_max {
        g.push(source(&iterates[k][0], times[0])?);
    }
    for i in 1..m {
        let d = times[i] - times[i - 1];
        let d_prev = if i >= 2 { times[i - 1] - times[i - 2] } else { 0.0 };
        let v0 = semigroup.apply(&iterates[0][i - 1], d)?;
        iterates[0].push(v0.clone());
        for k in 0..k_max {
            let c = 0.5 * (d_prev + d);
            let pre: Vec<f64> = acc[k].iter().zip(&g[k]).map(|(a, b)| a + c * b).collect();
            acc[k] = semigroup.apply(&pre, d)?;
        }
        for k in 1..=k_max {
            let g_i = source(&iterates[k - 1][i], times[i])?;
            let v: Vec<f64> = v0.iter().zip(&acc[k - 1]).zip(&g_i).map(|((a, b), s)| a + b + 0.5 * d * s).collect();
            g[k - 1] = g_i;
            iterates[k].push(v);
        }
    }
    let mut deltas = Vec::with_capacity(k_max);
    let mut min_deltas = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let (mut sup, mut min) = (0.0_f64, f64::INFINITY);
        for (a, b) in iterates[k].iter().zip(&iterates[k - 1]) {
            for (x, y) in a.iter().zip(b) {
                sup = sup.max((x - y).abs());
                min = min.min(x - y);
            }
        }
        deltas.push(sup);
        min_deltas.push(min);
    }
    Ok(PicardTrace { times, iterates, deltas, min_deltas })
}
