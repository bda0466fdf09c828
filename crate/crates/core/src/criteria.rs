//! Divergence criteria `int_1^inf phi(t) t^beta f(theta t^-beta) dt = +inf`
//! and the condition-(a) integral built from the heat flow of a profile.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::nonlinearity::{loglog_slope, NonlinearityError, NonlinearitySpec, TimeWeightSpec};
use crate::quadrature::{integrate, QuadOptions};
use crate::solver::{InitialData, RadialGrid, RadialSemigroup, Semigroup, SolverError};

/// Half-width of the undecided band around the critical tail exponent -1.
pub const UNDECIDED_BAND: f64 = 0.02;

/// Cut-offs `T` of the reported partial integrals.
pub const PARTIAL_CUTOFFS: [f64; 4] = [1e2, 1e3, 1e4, 1e5];

/// Amplitudes used for the sensitivity map.
pub const THETA_PROBES: [f64; 3] = [0.1, 1.0, 10.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriteriaError {
    #[error("invalid criterion: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionSpec {
    pub phi: TimeWeightSpec,
    pub f: NonlinearitySpec,
    pub beta: f64,
    pub theta: f64,
    pub lower_limit: f64,
}

impl CriterionSpec {
    pub fn new(phi: TimeWeightSpec, f: NonlinearitySpec, beta: f64, theta: f64) -> Result<Self, CriteriaError> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(CriteriaError::InvalidSpec(format!("beta must be positive, got {beta}")));
        }
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(CriteriaError::InvalidSpec(format!("theta must be positive, got {theta}")));
        }
        Ok(Self { phi, f, beta, theta, lower_limit: 1.0 })
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self, CriteriaError> {
        Self::new(self.phi, self.f.clone(), self.beta, theta)
    }

    /// `phi(t) t^beta f(theta t^-beta)`.
    pub fn integrand(&self, t: f64) -> Result<f64, CriteriaError> {
        let phi = self.phi.eval(t);
        if phi == 0.0 {
            return Ok(0.0);
        }
        Ok(phi * t.powf(self.beta) * self.f.eval(self.theta * t.powf(-self.beta))?)
    }

    /// `int_1^T` of [`CriterionSpec::integrand`], by quadrature in `log t`.
    pub fn partial_integral(&self, upper: f64) -> Result<f64, CriteriaError> {
        let mut failure = None;
        let top = (upper / self.lower_limit).ln();
        let breaks: Vec<f64> = (1..).map(|k| k as f64 * 10f64.ln()).take_while(|&s| s < top).collect();
        let res = integrate(
            |s| {
                let t = self.lower_limit * s.exp();
                match self.integrand(t) {
                    Ok(v) => t * v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            0.0,
            top,
            &breaks,
            QuadOptions { abs_tol: 0.0, rel_tol: 1e-10, max_panels: 4000 },
        );
        match failure {
            Some(e) => Err(e),
            None => Ok(res.value),
        }
    }

    /// Exponents `r_i + beta (1 - p_j)` of the power terms, when `phi` and `f`
    /// are power families. Zero-coefficient weight terms are dropped.
    pub fn tail_exponents(&self) -> Option<Vec<f64>> {
        let ps = self.f.exponents()?;
        let mut out = Vec::new();
        for (c, r) in self.phi.terms() {
            if c == 0.0 {
                continue;
            }
            for &p in &ps {
                out.push(r + self.beta * (1.0 - p));
            }
        }
        Some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Divergent,
    Convergent,
    Undecided,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Divergent => "divergent",
            Verdict::Convergent => "convergent",
            Verdict::Undecided => "undecided",
        }
    }

    /// Verdict for a fitted tail exponent of the integrand; `-inf` stands for
    /// an integrand that vanishes.
    pub fn from_tail_exponent(e: f64) -> Self {
        if e.is_nan() {
            Verdict::Undecided
        } else if e > -1.0 + UNDECIDED_BAND {
            Verdict::Divergent
        } else if e < -1.0 - UNDECIDED_BAND {
            Verdict::Convergent
        } else {
            Verdict::Undecided
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    Numeric,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::Numeric => "numeric",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub verdict: Verdict,
    pub method: Method,
    #[serde(rename = "partials")]
    pub partial_integrals: Vec<(f64, f64)>,
    #[serde(rename = "tail_exponent")]
    pub fitted_tail_exponent: Option<f64>,
    /// Keyed by `theta` printed with `{}`.
    pub theta_sensitivity: BTreeMap<String, Verdict>,
}

impl CriterionReport {
    /// Rows `verdict,method,tail_exponent,T,I`, one per partial integral.
    pub fn csv_rows(&self) -> Vec<[String; 5]> {
        let e = self.fitted_tail_exponent.map_or(String::new(), |e| e.to_string());
        self.partial_integrals
            .iter()
            .map(|(t, i)| {
                [self.verdict.as_str().into(), self.method.as_str().into(), e.clone(), t.to_string(), i.to_string()]
            })
            .collect()
    }
}

fn analytic_verdict(spec: &CriterionSpec) -> Option<Verdict> {
    let exps = spec.tail_exponents()?;
    // phi = 0 leaves no terms: the integral vanishes.
    let max = exps.into_iter().fold(f64::NEG_INFINITY, f64::max);
    Some(if max >= -1.0 - 1e-12 { Verdict::Divergent } else { Verdict::Convergent })
}

fn partials(spec: &CriterionSpec) -> Result<Vec<(f64, f64)>, CriteriaError> {
    PARTIAL_CUTOFFS.iter().map(|&t| Ok((t, spec.partial_integral(t)?))).collect()
}

/// Log-log slope of the integrand over the last decade below the largest
/// cut-off.
pub fn fitted_tail_exponent(spec: &CriterionSpec) -> Result<f64, CriteriaError> {
    let hi = PARTIAL_CUTOFFS[PARTIAL_CUTOFFS.len() - 1];
    let pts: Vec<(f64, f64)> = (0..=20)
        .map(|k| {
            let t = hi / 10.0 * 10f64.powf(k as f64 / 20.0);
            Ok((t, spec.integrand(t)?))
        })
        .collect::<Result<_, CriteriaError>>()?;
    if pts.iter().all(|p| p.1 == 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(loglog_slope(&pts))
}

fn numeric_verdict(spec: &CriterionSpec) -> Result<(Verdict, f64), CriteriaError> {
    let e = fitted_tail_exponent(spec)?;
    Ok((Verdict::from_tail_exponent(e), e))
}

/// Exact verdict by exponent arithmetic for power families, numeric
/// otherwise. The boundary exponent -1 counts as divergent.
pub fn classify(spec: &CriterionSpec) -> Result<CriterionReport, CriteriaError> {
    if let Some(verdict) = analytic_verdict(spec) {
        let mut theta_sensitivity = BTreeMap::new();
        for th in THETA_PROBES {
            let v = analytic_verdict(&spec.with_theta(th)?).expect("same families");
            theta_sensitivity.insert(th.to_string(), v);
        }
        return Ok(CriterionReport {
            verdict,
            method: Method::Analytic,
            partial_integrals: partials(spec)?,
            fitted_tail_exponent: None,
            theta_sensitivity,
        });
    }
    classify_numeric(spec)
}

/// The quadrature-and-regression path, available for every family.
pub fn classify_numeric(spec: &CriterionSpec) -> Result<CriterionReport, CriteriaError> {
    let (verdict, e) = numeric_verdict(spec)?;
    let mut theta_sensitivity = BTreeMap::new();
    for th in THETA_PROBES {
        theta_sensitivity.insert(th.to_string(), numeric_verdict(&spec.with_theta(th)?)?.0);
    }
    Ok(CriterionReport {
        verdict,
        method: Method::Numeric,
        partial_integrals: partials(spec)?,
        fitted_tail_exponent: Some(e),
        theta_sensitivity,
    })
}

/// `1 + (r + 1) / beta`, the largest `p` for which `phi = t^r`, `f = v^p`
/// gives a divergent integral.
pub fn fujita_exponent(beta: f64, r: f64) -> Result<f64, CriteriaError> {
    if !(beta > 0.0) {
        return Err(CriteriaError::InvalidSpec(format!("beta must be positive, got {beta}")));
    }
    if !(r >= -1.0) {
        return Err(CriteriaError::InvalidSpec(format!("weight exponent r={r} must be >= -1")));
    }
    Ok(1.0 + (r + 1.0) / beta)
}

/// Verdicts on `H^n` with the necessary-side decay `beta = n + 1` and the
/// sufficient-side decay `beta = 2n`, reported together.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeisenbergVerdicts {
    pub n: usize,
    pub necessary: CriterionReport,
    pub sufficient: CriterionReport,
}

pub fn heisenberg_verdicts(
    n: usize,
    phi: TimeWeightSpec,
    f: NonlinearitySpec,
    theta: f64,
) -> Result<HeisenbergVerdicts, CriteriaError> {
    if n == 0 {
        return Err(CriteriaError::InvalidSpec("n must be at least 1".into()));
    }
    let necessary = classify(&CriterionSpec::new(phi, f.clone(), (n + 1) as f64, theta)?)?;
    let sufficient = classify(&CriterionSpec::new(phi, f, (2 * n) as f64, theta)?)?;
    Ok(HeisenbergVerdicts { n, necessary, sufficient })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionASample {
    pub tau: f64,
    /// `sup` of `e^{tau L} w` over the grid.
    pub sup: f64,
    /// `phi(tau) f(S) / S`.
    pub integrand: f64,
    /// Trapezoid sum of the integrand from 0 to `tau`.
    pub cumulative: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionAOptions {
    pub dt0: f64,
    pub regrid_threshold: f64,
    /// Window for the fitted decay of `S`.
    pub slope_window: (f64, f64),
}

impl Default for ConditionAOptions {
    fn default() -> Self {
        Self { dt0: 0.05, regrid_threshold: 1e-6, slope_window: (4.0, 64.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionATrace {
    pub samples: Vec<ConditionASample>,
    /// `(T, I(T))` at `T = 1, 2, 4, ...` up to the horizon.
    pub partial_integrals: Vec<(f64, f64)>,
    /// Log-log slope of `S` over the slope window, if it holds samples.
    pub sup_decay_slope: Option<f64>,
    /// Log-log slope of the integrand over the last decade of the horizon.
    pub fitted_tail_exponent: f64,
    pub verdict: Verdict,
    /// `I(T)` plus the power-law tail beyond `T`, when convergent.
    pub z_estimate: Option<f64>,
    pub regrids: usize,
}

/// `S(tau) = sup (p_tau * w)` on a dilating radial grid, accumulated into
/// `int_0^T phi f(S)/S` by the trapezoid rule. Steps start at `dt0` and grow
/// by 4 at every regrid, so samples are roughly geometric in `tau`.
/// Rejects runs whose supremum sits on the edge of the box.
pub fn condition_a_integral(
    w: &InitialData,
    phi: &TimeWeightSpec,
    f: &NonlinearitySpec,
    grid: RadialGrid,
    horizon: f64,
    opts: ConditionAOptions,
) -> Result<ConditionATrace, CriteriaError> {
    w.validate()?;
    if !(horizon > 0.0) {
        return Err(CriteriaError::InvalidSpec("horizon must be positive".into()));
    }
    let field = grid.sample(w);
    if field.data.iter().any(|&x| x < 0.0) || field.sup() == 0.0 {
        return Err(SolverError::Precondition("condition (a) needs w >= 0, not identically zero".into()).into());
    }
    let integrand = |tau: f64, s: f64| -> Result<f64, CriteriaError> {
        if s <= 0.0 {
            return Ok(0.0);
        }
        Ok(phi.eval(tau) * f.eval(s)? / s)
    };
    let mut grid = grid;
    let mut sg = RadialSemigroup::new(grid);
    let mut u = field.data;
    let mut tau = 0.0;
    let mut dt = opts.dt0;
    let s0 = grid.argmax(&u).0;
    // phi may be singular at 0; the first trapezoid panel then uses tau = dt/2.
    let g0 = if phi.eval(0.0).is_finite() { integrand(0.0, s0)? } else { 0.0 };
    let mut samples = vec![ConditionASample { tau: 0.0, sup: s0, integrand: g0, cumulative: 0.0 }];
    let mut regrids = 0;
    // The last step may overshoot the horizon: a short final step would be
    // badly under-resolved on the dilated grid.
    while tau < horizon * (1.0 - 1e-12) {
        let step = dt;
        u = sg.apply(&u, step)?;
        tau += step;
        let (s, i, k) = grid.argmax(&u);
        if i + 1 == grid.nr || k == 0 || k + 1 == grid.nz {
            return Err(SolverError::Numerical(format!(
                "supremum of the heat flow sits on the truncation boundary at tau = {tau}"
            ))
            .into());
        }
        let g = integrand(tau, s)?;
        let prev = samples.last().expect("non-empty");
        let cumulative = prev.cumulative + 0.5 * step * (prev.integrand + g);
        samples.push(ConditionASample { tau, sup: s, integrand: g, cumulative });
        if grid.edge_exceeds(&u, opts.regrid_threshold) {
            let (g2, data) = grid.regrid(&u);
            grid = g2;
            u = data;
            sg = RadialSemigroup::new(grid);
            dt *= 4.0;
            regrids += 1;
        }
    }
    let interp = |t: f64| -> f64 {
        let j = samples.partition_point(|s| s.tau < t);
        if j == 0 {
            return 0.0;
        }
        if j >= samples.len() {
            return samples.last().expect("non-empty").cumulative;
        }
        let (a, b) = (samples[j - 1], samples[j]);
        a.cumulative + (t - a.tau) / (b.tau - a.tau) * (b.cumulative - a.cumulative)
    };
    let mut partial_integrals = Vec::new();
    let mut t = 1.0;
    while t <= horizon * (1.0 + 1e-12) {
        partial_integrals.push((t, interp(t)));
        t *= 2.0;
    }
    let (lo, hi) = opts.slope_window;
    let window: Vec<(f64, f64)> =
        samples.iter().filter(|s| s.tau >= lo && s.tau <= hi * (1.0 + 1e-12)).map(|s| (s.tau, s.sup)).collect();
    let sup_decay_slope = (window.len() >= 3).then(|| loglog_slope(&window));
    let tail: Vec<(f64, f64)> =
        samples.iter().filter(|s| s.tau >= horizon / 10.0 && s.tau > 0.0).map(|s| (s.tau, s.integrand)).collect();
    let fitted_tail_exponent =
        if tail.len() >= 3 && tail.iter().any(|p| p.1 > 0.0) { loglog_slope(&tail) } else { f64::NEG_INFINITY };
    let verdict = Verdict::from_tail_exponent(fitted_tail_exponent);
    let last = *samples.last().expect("non-empty");
    let z_estimate = match verdict {
        Verdict::Convergent if fitted_tail_exponent.is_finite() => {
            Some(last.cumulative + last.integrand * last.tau / (-fitted_tail_exponent - 1.0))
        }
        Verdict::Convergent => Some(last.cumulative),
        _ => None,
    };
    Ok(ConditionATrace {
        samples,
        partial_integrals,
        sup_decay_slope,
        fitted_tail_exponent,
        verdict,
        z_estimate,
        regrids,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub sup_w: f64,
    /// `(t, sup e^{tL} w)` in the order given.
    pub sups: Vec<(f64, f64)>,
    pub holds: bool,
}

/// `sup e^{tL} w <= sup w (1 + tol)` at every `t`, and non-increasing along
/// increasing `times`.
pub fn sup_norm_contraction_check(
    w: &InitialData,
    grid: RadialGrid,
    times: &[f64],
    tol: f64,
) -> Result<ContractionReport, CriteriaError> {
    w.validate()?;
    let field = grid.sample(w);
    let sup_w = field.sup();
    let mut sg = RadialSemigroup::new(grid);
    let mut sups = Vec::with_capacity(times.len());
    for &t in times {
        let out = sg.apply(&field.data, t)?;
        sups.push((t, crate::solver::sup_norm(&out)));
    }
    let bounded = sups.iter().all(|&(_, s)| s <= sup_w * (1.0 + tol));
    let mut sorted = sups.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = sorted.windows(2).all(|p| p[1].1 <= p[0].1 * (1.0 + tol));
    Ok(ContractionReport { sup_w, sups, holds: bounded && monotone })
}
