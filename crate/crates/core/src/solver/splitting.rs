//! Strang splitting: half reaction step, diffusion step, half reaction step.

use serde::{Deserialize, Serialize};

use super::{sup_norm, Semigroup, SolverError};
use crate::nonlinearity::{NonlinearitySpec, TimeWeightSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowUpReason {
    /// `sup u` exceeded the configured multiple of `sup u_0`.
    Threshold,
    /// The reaction ODE reached its singularity inside a substep.
    OdeSingularity,
}

impl BlowUpReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            BlowUpReason::Threshold => "threshold",
            BlowUpReason::OdeSingularity => "ode_singularity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowUp {
    pub t_star: f64,
    pub reason: BlowUpReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub u: Vec<f64>,
    pub t: f64,
    pub sup0: f64,
    pub sup_history: Vec<(f64, f64)>,
    pub mass_history: Vec<(f64, f64)>,
    pub blow_up: Option<BlowUp>,
}

impl SimulationState {
    pub fn new(u: Vec<f64>, mass: f64) -> Result<Self, SolverError> {
        if u.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(SolverError::Precondition("initial data must be finite and non-negative".into()));
        }
        let sup0 = sup_norm(&u);
        Ok(Self {
            u,
            t: 0.0,
            sup0,
            sup_history: vec![(0.0, sup0)],
            mass_history: vec![(0.0, mass)],
            blow_up: None,
        })
    }

    pub fn sup(&self) -> f64 {
        sup_norm(&self.u)
    }
}

/// Result of integrating `u' = phi(t) f(u)` over a substep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReactionOutcome {
    Regular,
    /// Earliest singular time inside the substep.
    Singular(f64),
}

/// `s` with `int_{t0}^{s} phi = target`, by bisection on `[t0, t1]`.
fn invert_weight(phi: &TimeWeightSpec, t0: f64, t1: f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (t0, t1);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi.integral(t0, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Advance every node by `u' = phi(t) f(u)` from `t0` to `t1`: closed form
/// for powers, classical RK4 with adaptive substep count otherwise.
pub fn reaction_step(
    u: &mut [f64],
    f: &NonlinearitySpec,
    phi: &TimeWeightSpec,
    t0: f64,
    t1: f64,
) -> Result<ReactionOutcome, SolverError> {
    if phi.is_zero() || t1 <= t0 {
        return Ok(ReactionOutcome::Regular);
    }
    let big_phi = phi.integral(t0, t1);
    if !big_phi.is_finite() {
        return Err(SolverError::Precondition("time weight is not integrable on the step".into()));
    }
    match f {
        NonlinearitySpec::Power { p } => {
            let p = *p;
            let mut singular: Option<f64> = None;
            for x in u.iter_mut() {
                if *x == 0.0 {
                    continue;
                }
                if p == 1.0 {
                    *x *= big_phi.exp();
                } else if p < 1.0 {
                    *x = (x.powf(1.0 - p) + (1.0 - p) * big_phi).powf(1.0 / (1.0 - p));
                } else {
                    let base = x.powf(1.0 - p) - (p - 1.0) * big_phi;
                    if base > 0.0 {
                        *x = base.powf(-1.0 / (p - 1.0));
                    } else {
                        let ts = invert_weight(phi, t0, t1, x.powf(1.0 - p) / (p - 1.0));
                        singular = Some(singular.map_or(ts, |s: f64| s.min(ts)));
                        *x = f64::INFINITY;
                    }
                }
            }
            Ok(singular.map_or(ReactionOutcome::Regular, ReactionOutcome::Singular))
        }
        _ => {
            let mut singular: Option<f64> = None;
            for x in u.iter_mut() {
                if *x == 0.0 {
                    continue;
                }
                match rk4_node(*x, f, phi, t0, t1)? {
                    (v, None) => *x = v,
                    (_, Some(ts)) => {
                        singular = Some(singular.map_or(ts, |s: f64| s.min(ts)));
                        *x = f64::INFINITY;
                    }
                }
            }
            Ok(singular.map_or(ReactionOutcome::Regular, ReactionOutcome::Singular))
        }
    }
}

fn rk4_node(
    x0: f64,
    f: &NonlinearitySpec,
    phi: &TimeWeightSpec,
    t0: f64,
    t1: f64,
) -> Result<(f64, Option<f64>), SolverError> {
    let rhs = |t: f64, x: f64| -> Result<f64, SolverError> { Ok(phi.eval(t) * f.eval(x.max(0.0))?) };
    let mut t = t0;
    let mut x = x0;
    while t < t1 {
        // Keep the relative change per substep near 5%.
        let rate = (rhs(t, x)? / x).abs().max(1e-300);
        let h = (0.05 / rate).min(t1 - t).max((t1 - t0) * 1e-6);
        let k1 = rhs(t, x)?;
        let k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1)?;
        let k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2)?;
        let k4 = rhs(t + h, x + h * k3)?;
        let next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !next.is_finite() || next > 1e150 {
            return Ok((f64::INFINITY, Some(t + h)));
        }
        x = next;
        t += h;
    }
    Ok((x, None))
}

/// One Strang step of size `dt`. Negative round-off from the diffusion step
/// is clamped to zero. Sets `blow_up` when the reaction ODE becomes singular
/// inside the step or when `sup u > blowup_factor * sup u_0`.
pub fn step_splitting<S: Semigroup + ?Sized>(
    state: &SimulationState,
    semigroup: &mut S,
    phi: &TimeWeightSpec,
    f: &NonlinearitySpec,
    dt: f64,
    blowup_factor: f64,
) -> Result<SimulationState, SolverError> {
    if !(dt > 0.0) {
        return Err(SolverError::NonPositiveTime(dt));
    }
    let t0 = state.t;
    let half = t0 + 0.5 * dt;
    let t1 = t0 + dt;
    let mut next = state.clone();
    let mut u = state.u.clone();
    let mut singular = None;
    if let ReactionOutcome::Singular(ts) = reaction_step(&mut u, f, phi, t0, half)? {
        singular = Some(ts);
    }
    if singular.is_none() {
        u = semigroup.apply(&u, dt)?;
        for x in u.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        if let ReactionOutcome::Singular(ts) = reaction_step(&mut u, f, phi, half, t1)? {
            singular = Some(ts);
        }
    }
    next.t = t1;
    if let Some(ts) = singular {
        next.blow_up = Some(BlowUp { t_star: ts, reason: BlowUpReason::OdeSingularity });
        next.u = u;
        return Ok(next);
    }
    let sup = sup_norm(&u);
    let mass = semigroup.mass(&u);
    next.u = u;
    next.sup_history.push((t1, sup));
    next.mass_history.push((t1, mass));
    if state.sup0 > 0.0 && sup > blowup_factor * state.sup0 {
        next.blow_up = Some(BlowUp { t_star: t1, reason: BlowUpReason::Threshold });
    }
    Ok(next)
}
