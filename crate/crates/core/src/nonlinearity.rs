//! Source nonlinearities `f(v)`, time weights `phi(t)`, and the scaling
//! minorant/majorant `f_m(v) = inf_a f(a v)/f(a)`, `f_M(v) = sup_a f(a v)/f(a)`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearityError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("argument must be non-negative, got {0}")]
    NegativeArgument(f64),
    #[error("{0} lies outside the tabulated range [{1}, {2}]")]
    OutOfTable(f64, f64, f64),
    #[error("cannot parse spec literal `{0}`: {1}")]
    Parse(String, String),
    #[error("table file {0}: {1}")]
    Io(String, String),
}

/// Tabulated `f`, interpolated piecewise-linearly in log-log coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub source: Option<PathBuf>,
    v: Vec<f64>,
    f: Vec<f64>,
    #[serde(skip)]
    log_v: Vec<f64>,
    #[serde(skip)]
    log_f: Vec<f64>,
}

impl Table {
    /// Rows with `v = 0` must carry `f = 0` and are dropped; the remaining
    /// abscissae must be positive and strictly increasing with `f > 0`.
    pub fn new(rows: Vec<(f64, f64)>) -> Result<Self, NonlinearityError> {
        let mut v = Vec::with_capacity(rows.len());
        let mut f = Vec::with_capacity(rows.len());
        for (x, y) in rows {
            if !x.is_finite() || !y.is_finite() {
                return Err(NonlinearityError::InvalidParameter("non-finite table entry".into()));
            }
            if x == 0.0 {
                if y != 0.0 {
                    return Err(NonlinearityError::InvalidParameter("table needs f(0) = 0".into()));
                }
                continue;
            }
            if x < 0.0 || y <= 0.0 {
                return Err(NonlinearityError::InvalidParameter(format!(
                    "table row ({x}, {y}): need v > 0 and f(v) > 0"
                )));
            }
            if let Some(&last) = v.last() {
                if x <= last {
                    return Err(NonlinearityError::InvalidParameter(
                        "first column must be strictly increasing".into(),
                    ));
                }
            }
            v.push(x);
            f.push(y);
        }
        if v.len() < 2 {
            return Err(NonlinearityError::InvalidParameter("table needs at least two positive rows".into()));
        }
        let log_v = v.iter().map(|x| x.ln()).collect();
        let log_f = f.iter().map(|x| x.ln()).collect();
        Ok(Self { source: None, v, f, log_v, log_f })
    }

    /// Two numeric columns separated by whitespace or commas; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self, NonlinearityError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| NonlinearityError::Io(path.display().to_string(), e.to_string()))?;
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let bad = || {
                NonlinearityError::Io(
                    path.display().to_string(),
                    format!("line {}: expected two numbers", lineno + 1),
                )
            };
            if cols.len() != 2 {
                return Err(bad());
            }
            let x: f64 = cols[0].parse().map_err(|_| bad())?;
            let y: f64 = cols[1].parse().map_err(|_| bad())?;
            rows.push((x, y));
        }
        let mut table = Self::new(rows)?;
        table.source = Some(path.to_path_buf());
        Ok(table)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.v[0], self.v[self.v.len() - 1])
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.v.iter().copied().zip(self.f.iter().copied())
    }

    fn eval(&self, x: f64) -> Result<f64, NonlinearityError> {
        if x == 0.0 {
            return Ok(0.0);
        }
        let (lo, hi) = self.range();
        // Allow one ulp of slack so that grid endpoints built from the range hit it.
        if x < lo * (1.0 - 4.0 * f64::EPSILON) || x > hi * (1.0 + 4.0 * f64::EPSILON) {
            return Err(NonlinearityError::OutOfTable(x, lo, hi));
        }
        let lx = x.ln();
        let idx = match self.log_v.binary_search_by(|p| p.total_cmp(&lx)) {
            Ok(i) => return Ok(self.f[i]),
            Err(i) => i.clamp(1, self.v.len() - 1),
        };
        let (x0, x1) = (self.log_v[idx - 1], self.log_v[idx]);
        let (y0, y1) = (self.log_f[idx - 1], self.log_f[idx]);
        let w = ((lx - x0) / (x1 - x0)).clamp(0.0, 1.0);
        Ok((y0 + w * (y1 - y0)).exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NonlinearitySpec {
    /// `v^p`, `p > 0` (the theorems need `p > 1`).
    Power { p: f64 },
    /// `v^p + v^q` with `p >= q > 1`.
    PowerSum { p: f64, q: f64 },
    Tabulated(Table),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TimeWeightSpec {
    Constant { c: f64 },
    /// `t^r`, `r >= -1`.
    Power { r: f64 },
    /// `t^r + t^s`, `r >= s >= -1`.
    PowerSum { r: f64, s: f64 },
}

/// Three-valued outcome for numerically operationalized limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriState {
    Holds,
    Fails,
    Undecided,
}

impl TriState {
    pub fn as_str(&self) -> &'static str {
        match self {
            TriState::Holds => "holds",
            TriState::Fails => "fails",
            TriState::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionEvidence {
    pub verdict: TriState,
    pub samples: Vec<(f64, f64)>,
    pub fitted_slope: Option<f64>,
    pub note: String,
}

/// Search grid for the inf/sup over `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaGridPolicy {
    pub alpha_min: f64,
    pub points: usize,
    pub refine: bool,
}

impl Default for AlphaGridPolicy {
    fn default() -> Self {
        // For power sums the extremum sits at alpha -> 0 and the ratio
        // approaches it like alpha^{p-q}; 1e-100 keeps that gap below 1e-6
        // for v up to 1e4 whenever p - q >= 0.1.
        Self {
            alpha_min: 1e-100,
            points: 256,
            refine: true,
        }
    }
}

/// Result of a numeric inf/sup, with the alpha range actually searched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremumEvidence {
    pub value: f64,
    pub alpha_at: f64,
    pub alpha_min_used: f64,
}

impl NonlinearitySpec {
    pub fn power(p: f64) -> Result<Self, NonlinearityError> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(NonlinearityError::InvalidParameter(format!("power exponent p={p} must be positive")));
        }
        Ok(Self::Power { p })
    }

    pub fn power_sum(p: f64, q: f64) -> Result<Self, NonlinearityError> {
        if !(q > 1.0) || !(p >= q) || !p.is_finite() {
            return Err(NonlinearityError::InvalidParameter(format!(
                "power_sum needs p >= q > 1, got p={p}, q={q}"
            )));
        }
        Ok(Self::PowerSum { p, q })
    }

    pub fn eval(&self, v: f64) -> Result<f64, NonlinearityError> {
        if v < 0.0 || v.is_nan() {
            return Err(NonlinearityError::NegativeArgument(v));
        }
        Ok(match self {
            Self::Power { p } => v.powf(*p),
            Self::PowerSum { p, q } => v.powf(*p) + v.powf(*q),
            Self::Tabulated(t) => t.eval(v)?,
        })
    }

    /// Exponents `e_j` with `f(v) = sum_j v^{e_j}`, for the power families.
    pub fn exponents(&self) -> Option<Vec<f64>> {
        match self {
            Self::Power { p } => Some(vec![*p]),
            Self::PowerSum { p, q } => Some(vec![*p, *q]),
            Self::Tabulated(_) => None,
        }
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self, Self::Tabulated(_))
    }

    /// Closed forms: `v^p` for a power, and for a power sum
    /// `min{(v^p + v^q)/2, v^q}` / `max{...}`.
    pub fn minorant_closed_form(&self, v: f64) -> Option<f64> {
        match self {
            Self::Power { p } => Some(v.powf(*p)),
            Self::PowerSum { p, q } => Some((0.5 * (v.powf(*p) + v.powf(*q))).min(v.powf(*q))),
            Self::Tabulated(_) => None,
        }
    }

    pub fn majorant_closed_form(&self, v: f64) -> Option<f64> {
        match self {
            Self::Power { p } => Some(v.powf(*p)),
            Self::PowerSum { p, q } => Some((0.5 * (v.powf(*p) + v.powf(*q))).max(v.powf(*q))),
            Self::Tabulated(_) => None,
        }
    }

    /// Closed form for a power (the ratio does not depend on alpha);
    /// numeric search otherwise.
    pub fn minorant(&self, v: f64, policy: AlphaGridPolicy) -> Result<f64, NonlinearityError> {
        if let Self::Power { p } = self {
            if v < 0.0 {
                return Err(NonlinearityError::NegativeArgument(v));
            }
            return Ok(v.powf(*p));
        }
        Ok(self.extremum(v, policy, false)?.value)
    }

    pub fn majorant(&self, v: f64, policy: AlphaGridPolicy) -> Result<f64, NonlinearityError> {
        if let Self::Power { p } = self {
            if v < 0.0 {
                return Err(NonlinearityError::NegativeArgument(v));
            }
            return Ok(v.powf(*p));
        }
        Ok(self.extremum(v, policy, true)?.value)
    }

    /// Inf (or sup) of `f(alpha v) / f(alpha)` over `alpha in [alpha_min, 1]`,
    /// on a log grid refined by golden-section search around the best node.
    pub fn extremum(
        &self,
        v: f64,
        policy: AlphaGridPolicy,
        maximize: bool,
    ) -> Result<ExtremumEvidence, NonlinearityError> {
        if v < 0.0 || v.is_nan() {
            return Err(NonlinearityError::NegativeArgument(v));
        }
        if !(policy.alpha_min > 0.0 && policy.alpha_min < 1.0) || policy.points < 2 {
            return Err(NonlinearityError::InvalidParameter("alpha grid policy".into()));
        }
        if v == 0.0 {
            return Ok(ExtremumEvidence { value: 0.0, alpha_at: 1.0, alpha_min_used: policy.alpha_min });
        }
        let mut alpha_min = policy.alpha_min;
        let mut alpha_max = 1.0_f64;
        match self {
            Self::Tabulated(t) => {
                let (lo, hi) = t.range();
                alpha_min = alpha_min.max(lo).max(lo / v);
                alpha_max = alpha_max.min(hi / v).min(hi);
                if alpha_min > alpha_max {
                    return Err(NonlinearityError::OutOfTable(v, lo, hi));
                }
            }
            _ => {
                // Stay where f(alpha) and f(alpha v) are normal numbers.
                while alpha_min < 1e-3
                    && (self.eval(alpha_min)? < 1e-290 || self.eval(alpha_min * v)? < 1e-290)
                {
                    alpha_min *= 10.0;
                }
            }
        }
        let sign = if maximize { -1.0 } else { 1.0 };
        let objective = |x: f64| -> Result<f64, NonlinearityError> {
            let a = x.exp().clamp(alpha_min, alpha_max);
            Ok(sign * self.eval(a * v)? / self.eval(a)?)
        };
        let (x0, x1) = (alpha_min.ln(), alpha_max.ln());
        let m = policy.points;
        let mut best_i = 0;
        let mut best = f64::INFINITY;
        let mut xs = Vec::with_capacity(m);
        for i in 0..m {
            let x = if i == m - 1 { x1 } else { x0 + (x1 - x0) * i as f64 / (m - 1) as f64 };
            xs.push(x);
            let y = objective(x)?;
            if y < best {
                best = y;
                best_i = i;
            }
        }
        let mut best_x = xs[best_i];
        if policy.refine && x1 > x0 {
            let mut a = xs[best_i.saturating_sub(1)];
            let mut b = xs[(best_i + 1).min(m - 1)];
            let g = 0.5 * (5.0_f64.sqrt() - 1.0);
            let mut c = b - g * (b - a);
            let mut d = a + g * (b - a);
            let (mut fc, mut fd) = (objective(c)?, objective(d)?);
            for _ in 0..100 {
                if (b - a).abs() < 1e-12 {
                    break;
                }
                if fc < fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - g * (b - a);
                    fc = objective(c)?;
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + g * (b - a);
                    fd = objective(d)?;
                }
            }
            for x in [c, d] {
                let y = objective(x)?;
                if y < best {
                    best = y;
                    best_x = x;
                }
            }
        }
        Ok(ExtremumEvidence {
            value: sign * best,
            alpha_at: best_x.exp(),
            alpha_min_used: alpha_min,
        })
    }

    /// `f_M(v) / v -> 0` as `v -> 0+`, read off `v = 10^{-k}`, `k = 1..8`:
    /// holds when the log-log slope exceeds 0.1, the sequence decreases and
    /// ends at or below 1e-4; fails when the slope is below 0.02.
    pub fn check_maj_condition(&self) -> Result<ConditionEvidence, NonlinearityError> {
        let policy = AlphaGridPolicy::default();
        let mut samples = Vec::with_capacity(8);
        for k in 1..=8 {
            let v = 10f64.powi(-k);
            samples.push((v, self.majorant(v, policy)? / v));
        }
        let slope = loglog_slope(&samples);
        let decreasing = samples.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12));
        let last = samples[samples.len() - 1].1;
        let verdict = if slope > 0.1 && decreasing && last <= 1e-4 * (1.0 + 1e-9) {
            TriState::Holds
        } else if slope < 0.02 {
            TriState::Fails
        } else {
            TriState::Undecided
        };
        Ok(ConditionEvidence {
            verdict,
            samples,
            fitted_slope: Some(slope),
            note: format!("f_M(v)/v at v=1e-1..1e-8, alpha_min={:e}", policy.alpha_min),
        })
    }

    /// `int_1^inf dv / f_m(v) < inf`.
    pub fn check_min_condition(&self) -> Result<ConditionEvidence, NonlinearityError> {
        match self {
            Self::Power { p } => Ok(ConditionEvidence {
                verdict: if *p > 1.0 { TriState::Holds } else { TriState::Fails },
                samples: vec![],
                fitted_slope: None,
                note: format!("f_m(v) = v^{p}; tail converges iff p > 1"),
            }),
            Self::PowerSum { q, .. } => Ok(ConditionEvidence {
                verdict: if *q > 1.0 { TriState::Holds } else { TriState::Fails },
                samples: vec![],
                fitted_slope: None,
                note: format!("f_m(v) = v^{q} for v >= 1; tail converges iff q > 1"),
            }),
            Self::Tabulated(t) => {
                let (_, hi) = t.range();
                if hi < 100.0 {
                    return Ok(ConditionEvidence {
                        verdict: TriState::Undecided,
                        samples: vec![],
                        fitted_slope: None,
                        note: "table ends below v = 100; no tail to fit".into(),
                    });
                }
                // Fit the top two decades of the table.
                let (a, b) = ((hi / 100.0).ln(), hi.ln());
                let policy = AlphaGridPolicy::default();
                let mut samples = Vec::new();
                for i in 0..9 {
                    let v = (a + (b - a) * i as f64 / 8.0).exp();
                    samples.push((v, self.minorant(v.min(hi), policy)?));
                }
                let e = loglog_slope(&samples);
                let verdict = if e > 1.02 {
                    TriState::Holds
                } else if e < 0.98 {
                    TriState::Fails
                } else {
                    TriState::Undecided
                };
                Ok(ConditionEvidence {
                    verdict,
                    samples,
                    fitted_slope: Some(e),
                    note: "tail exponent of f_m over the top two decades of the table".into(),
                })
            }
        }
    }

    fn check_grid(&self) -> Vec<f64> {
        let (lo, hi) = match self {
            Self::Tabulated(t) => t.range(),
            _ => (1e-6, 1e6),
        };
        let (a, b) = (lo.ln(), hi.ln());
        (0..401).map(|i| (a + (b - a) * i as f64 / 400.0).exp().clamp(lo, hi)).collect()
    }

    /// `v -> f(v)/v` non-decreasing on a log grid (relative tolerance 1e-10).
    pub fn check_ratio_monotone(&self) -> Result<bool, NonlinearityError> {
        let grid = self.check_grid();
        let mut prev = 0.0_f64;
        for v in grid {
            let r = self.eval(v)? / v;
            if r < prev * (1.0 - 1e-10) {
                return Ok(false);
            }
            prev = prev.max(r);
        }
        Ok(true)
    }

    /// Midpoint convexity of `f` on pairs of log-grid nodes.
    pub fn check_convex(&self) -> Result<bool, NonlinearityError> {
        let grid = self.check_grid();
        let vals: Vec<f64> = grid.iter().map(|&v| self.eval(v)).collect::<Result<_, _>>()?;
        for gap in [1usize, 2, 8, 40] {
            for i in 0..grid.len().saturating_sub(gap) {
                let mid = self.eval(0.5 * (grid[i] + grid[i + gap]))?;
                let chord = 0.5 * (vals[i] + vals[i + gap]);
                if mid > chord * (1.0 + 1e-10) {
                    return Ok(false);
                }
            }
        }
        // f(0) = 0 against the first node.
        let v0 = grid[0];
        if !self.is_tabulated() && self.eval(0.5 * v0)? > 0.5 * vals[0] * (1.0 + 1e-10) {
            return Ok(false);
        }
        Ok(true)
    }
}

impl TimeWeightSpec {
    pub fn constant(c: f64) -> Result<Self, NonlinearityError> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(NonlinearityError::InvalidParameter(format!("constant weight c={c} must be >= 0")));
        }
        Ok(Self::Constant { c })
    }

    pub fn power(r: f64) -> Result<Self, NonlinearityError> {
        if !(r >= -1.0) || !r.is_finite() {
            return Err(NonlinearityError::InvalidParameter(format!("weight exponent r={r} must be >= -1")));
        }
        Ok(Self::Power { r })
    }

    pub fn power_sum(r: f64, s: f64) -> Result<Self, NonlinearityError> {
        if !(s >= -1.0) || !(r >= s) || !r.is_finite() {
            return Err(NonlinearityError::InvalidParameter(format!(
                "power_sum weight needs r >= s >= -1, got r={r}, s={s}"
            )));
        }
        Ok(Self::PowerSum { r, s })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Constant { c } => *c,
            Self::Power { r } => t.powf(*r),
            Self::PowerSum { r, s } => t.powf(*r) + t.powf(*s),
        }
    }

    /// Exponents and coefficients `phi(t) = sum_j c_j t^{r_j}`.
    pub fn terms(&self) -> Vec<(f64, f64)> {
        match self {
            Self::Constant { c } => vec![(*c, 0.0)],
            Self::Power { r } => vec![(1.0, *r)],
            Self::PowerSum { r, s } => vec![(1.0, *r), (1.0, *s)],
        }
    }

    /// `int_a^b phi`, `0 <= a <= b`; infinite when `phi` is not integrable at 0.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.terms()
            .into_iter()
            .map(|(c, r)| {
                if c == 0.0 {
                    0.0
                } else if r == -1.0 {
                    c * (b / a).ln()
                } else {
                    c * (b.powf(r + 1.0) - a.powf(r + 1.0)) / (r + 1.0)
                }
            })
            .sum()
    }

    pub fn locally_integrable(&self) -> bool {
        self.terms().iter().all(|&(c, r)| c == 0.0 || r > -1.0)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Constant { c } if *c == 0.0)
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(samples: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

fn parse_params(literal: &str, body: &str) -> Result<Vec<(String, String)>, NonlinearityError> {
    if body.trim().is_empty() {
        return Ok(vec![]);
    }
    body.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| NonlinearityError::Parse(literal.into(), format!("expected key=value, got `{kv}`")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn take_num(
    literal: &str,
    params: &[(String, String)],
    key: &str,
    default: Option<f64>,
) -> Result<f64, NonlinearityError> {
    match params.iter().find(|(k, _)| k == key) {
        Some((_, v)) => v
            .parse::<f64>()
            .map_err(|_| NonlinearityError::Parse(literal.into(), format!("`{key}` is not a number"))),
        None => default.ok_or_else(|| NonlinearityError::Parse(literal.into(), format!("missing `{key}`"))),
    }
}

fn check_keys(literal: &str, params: &[(String, String)], allowed: &[&str]) -> Result<(), NonlinearityError> {
    for (k, _) in params {
        if !allowed.contains(&k.as_str()) {
            return Err(NonlinearityError::Parse(literal.into(), format!("unknown key `{k}`")));
        }
    }
    Ok(())
}

fn split_literal<'a>(s: &'a str, prefix: &str) -> (&'a str, &'a str) {
    let s = s.trim();
    let s = s.strip_prefix(prefix).unwrap_or(s);
    s.split_once(':').unwrap_or((s, ""))
}

impl FromStr for NonlinearitySpec {
    type Err = NonlinearityError;

    /// `power:p=2`, `power_sum:p=2,q=1.5`, `table:path=<file>`, optionally
    /// prefixed with `f=`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (family, body) = split_literal(s, "f=");
        match family {
            "power" => {
                let ps = parse_params(s, body)?;
                check_keys(s, &ps, &["p"])?;
                Self::power(take_num(s, &ps, "p", None)?)
            }
            "power_sum" => {
                let ps = parse_params(s, body)?;
                check_keys(s, &ps, &["p", "q"])?;
                Self::power_sum(take_num(s, &ps, "p", None)?, take_num(s, &ps, "q", None)?)
            }
            "table" => {
                let path = body
                    .strip_prefix("path=")
                    .ok_or_else(|| NonlinearityError::Parse(s.into(), "expected table:path=<file>".into()))?;
                Ok(Self::Tabulated(Table::from_file(Path::new(path))?))
            }
            other => Err(NonlinearityError::Parse(s.into(), format!("unknown family `{other}`"))),
        }
    }
}

impl FromStr for TimeWeightSpec {
    type Err = NonlinearityError;

    /// `constant`, `constant:c=2`, `power:r=0`, `power_sum:r=1,s=-0.5`,
    /// optionally prefixed with `phi=`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (family, body) = split_literal(s, "phi=");
        let ps = parse_params(s, body)?;
        match family {
            "constant" => {
                check_keys(s, &ps, &["c"])?;
                Self::constant(take_num(s, &ps, "c", Some(1.0))?)
            }
            "power" => {
                check_keys(s, &ps, &["r"])?;
                Self::power(take_num(s, &ps, "r", None)?)
            }
            "power_sum" => {
                check_keys(s, &ps, &["r", "s"])?;
                Self::power_sum(take_num(s, &ps, "r", None)?, take_num(s, &ps, "s", None)?)
            }
            other => Err(NonlinearityError::Parse(s.into(), format!("unknown family `{other}`"))),
        }
    }
}

impl fmt::Display for NonlinearitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Power { p } => write!(f, "power:p={p}"),
            Self::PowerSum { p, q } => write!(f, "power_sum:p={p},q={q}"),
            Self::Tabulated(t) => match &t.source {
                Some(path) => write!(f, "table:path={}", path.display()),
                None => write!(f, "table:<inline {} rows>", t.v.len()),
            },
        }
    }
}

impl fmt::Display for TimeWeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant { c } => write!(f, "constant:c={c}"),
            Self::Power { r } => write!(f, "power:r={r}"),
            Self::PowerSum { r, s } => write!(f, "power_sum:r={r},s={s}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_of(f: impl Fn(f64) -> f64, lo: f64, hi: f64, count: usize) -> NonlinearitySpec {
        let (a, b) = (lo.ln(), hi.ln());
        let rows = (0..count)
            .map(|i| {
                let v = (a + (b - a) * i as f64 / (count - 1) as f64).exp();
                (v, f(v))
            })
            .collect();
        NonlinearitySpec::Tabulated(Table::new(rows).unwrap())
    }

    #[test]
    fn eval_examples() {
        assert_eq!(NonlinearitySpec::power(2.0).unwrap().eval(3.0).unwrap(), 9.0);
        assert_eq!(NonlinearitySpec::power_sum(2.0, 1.5).unwrap().eval(1.0).unwrap(), 2.0);
        for spec in [
            NonlinearitySpec::power(2.0).unwrap(),
            NonlinearitySpec::power_sum(3.0, 1.5).unwrap(),
            table_of(|v| v * v, 1e-3, 1e3, 30),
        ] {
            assert_eq!(spec.eval(0.0).unwrap(), 0.0);
            assert!(spec.eval(-1.0).is_err());
        }
    }

    #[test]
    fn parameter_ranges() {
        assert!(NonlinearitySpec::power_sum(1.5, 2.0).is_err());
        assert!(NonlinearitySpec::power_sum(2.0, 1.0).is_err());
        assert!(NonlinearitySpec::power(0.0).is_err());
        assert!(TimeWeightSpec::power_sum(0.0, 1.0).is_err());
        assert!(TimeWeightSpec::power(-1.5).is_err());
    }

    #[test]
    fn table_interpolation_and_range() {
        let t = table_of(|v| v.powf(1.7), 1e-2, 1e2, 9);
        // Exact for a power law between knots.
        assert!((t.eval(0.37).unwrap() - 0.37_f64.powf(1.7)).abs() < 1e-13);
        assert!(matches!(t.eval(1e3), Err(NonlinearityError::OutOfTable(..))));
        assert!(Table::new(vec![(1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(Table::new(vec![(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)]).is_err());
    }

    #[test]
    fn minorant_majorant_examples() {
        let p = AlphaGridPolicy::default();
        assert_eq!(NonlinearitySpec::power(2.0).unwrap().minorant(5.0, p).unwrap(), 25.0);
        assert_eq!(NonlinearitySpec::power(3.0).unwrap().majorant(2.0, p).unwrap(), 8.0);
        let ps = NonlinearitySpec::power_sum(2.0, 1.5).unwrap();
        let fm = ps.minorant(2.0, p).unwrap();
        let expect = (0.5 * (4.0 + 2f64.powf(1.5))).min(2f64.powf(1.5));
        assert!((fm - expect).abs() < 1e-9, "{fm} vs {expect}");
        assert!((ps.majorant(4.0, p).unwrap() - 12.0).abs() < 1e-9);
        assert!((ps.minorant(1.0, p).unwrap() - 1.0).abs() < 1e-14);
        assert!((ps.majorant(1.0, p).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn maj_condition_examples() {
        assert_eq!(NonlinearitySpec::power(2.0).unwrap().check_maj_condition().unwrap().verdict, TriState::Holds);
        assert_eq!(
            NonlinearitySpec::power_sum(2.0, 1.5).unwrap().check_maj_condition().unwrap().verdict,
            TriState::Holds
        );
        let linear = table_of(|v| v, 1e-12, 1e3, 20);
        assert_eq!(linear.check_maj_condition().unwrap().verdict, TriState::Fails);
        assert_eq!(
            NonlinearitySpec::power(1.05).unwrap().check_maj_condition().unwrap().verdict,
            TriState::Undecided
        );
    }

    #[test]
    fn min_condition_examples() {
        assert_eq!(NonlinearitySpec::power(2.0).unwrap().check_min_condition().unwrap().verdict, TriState::Holds);
        assert_eq!(NonlinearitySpec::power(1.0).unwrap().check_min_condition().unwrap().verdict, TriState::Fails);
        assert_eq!(
            NonlinearitySpec::power_sum(2.0, 1.2).unwrap().check_min_condition().unwrap().verdict,
            TriState::Holds
        );
        let quad = table_of(|v| v * v, 1e-3, 1e4, 40);
        assert_eq!(quad.check_min_condition().unwrap().verdict, TriState::Holds);
        let lin = table_of(|v| v, 1e-3, 1e4, 40);
        assert_eq!(lin.check_min_condition().unwrap().verdict, TriState::Undecided);
        let sub = table_of(|v| v.sqrt(), 1e-3, 1e4, 40);
        assert_eq!(sub.check_min_condition().unwrap().verdict, TriState::Fails);
    }

    #[test]
    fn monotone_and_convex_examples() {
        let p15 = NonlinearitySpec::power(1.5).unwrap();
        assert!(p15.check_ratio_monotone().unwrap() && p15.check_convex().unwrap());
        let ps = NonlinearitySpec::power_sum(2.5, 1.2).unwrap();
        assert!(ps.check_ratio_monotone().unwrap() && ps.check_convex().unwrap());
        let sqrt = table_of(|v| v.sqrt(), 1e-3, 1e3, 25);
        assert!(!sqrt.check_ratio_monotone().unwrap());
        assert!(!sqrt.check_convex().unwrap());
    }

    #[test]
    fn literal_round_trip() {
        for lit in ["power:p=2", "power_sum:p=2,q=1.5"] {
            let spec: NonlinearitySpec = lit.parse().unwrap();
            assert_eq!(spec.to_string(), lit);
        }
        let f: NonlinearitySpec = "f=power_sum:p=2,q=1.5".parse().unwrap();
        assert_eq!(f, NonlinearitySpec::PowerSum { p: 2.0, q: 1.5 });
        let phi: TimeWeightSpec = "phi=power_sum:r=1,s=-0.5".parse().unwrap();
        assert_eq!(phi, TimeWeightSpec::PowerSum { r: 1.0, s: -0.5 });
        assert_eq!("constant".parse::<TimeWeightSpec>().unwrap(), TimeWeightSpec::Constant { c: 1.0 });
        assert_eq!("power:r=0".parse::<TimeWeightSpec>().unwrap(), TimeWeightSpec::Power { r: 0.0 });
        assert!("power:q=2".parse::<NonlinearitySpec>().is_err());
        assert!("cubic:p=2".parse::<NonlinearitySpec>().is_err());
        assert!("power:p=x".parse::<NonlinearitySpec>().is_err());
        assert!("table:path=/nonexistent/file".parse::<NonlinearitySpec>().is_err());
    }

    #[test]
    fn weight_integrals() {
        let c = TimeWeightSpec::constant(2.0).unwrap();
        assert_eq!(c.integral(1.0, 3.0), 4.0);
        let w = TimeWeightSpec::power_sum(1.0, -0.5).unwrap();
        let expect = (9.0 - 1.0) / 2.0 + 2.0 * (3f64.sqrt() - 1.0);
        assert!((w.integral(1.0, 3.0) - expect).abs() < 1e-14);
        assert!(w.locally_integrable());
        assert!(!TimeWeightSpec::power(-1.0).unwrap().locally_integrable());
    }
}
