//! Adaptive time stepping, regridding and blow-up detection on top of
//! [`step_splitting`].

use rayon::prelude::*;
use serde::Serialize;

use super::convolution::SpectralConvolution;
use super::grid::{Field3, GridSpec, InitialData, InitialProfile};
use super::radial::{EuclideanRadial, RadialGrid, RadialSemigroup};
use super::splitting::{step_splitting, BlowUp, BlowUpReason, SimulationState};
use super::{sup_norm, NoDiffusion, Semigroup, SolverError};
use crate::nonlinearity::{NonlinearitySpec, TimeWeightSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// `H^1` with data radial in `xi`; the default.
    HeisenbergRadial(RadialGrid),
    /// `H^1` on a Cartesian grid with the truncated-stencil convolution.
    HeisenbergCartesian(GridSpec),
    /// `R^d`, `d <= 3`, radial data on `r_i = i h`.
    Euclidean { dim: usize, nr: usize, hr: f64 },
    /// One spatially constant node without diffusion: the ODE `v' = phi f(v)`.
    Flat,
}

impl Domain {
    pub fn label(&self) -> &'static str {
        match self {
            Domain::HeisenbergRadial(_) => "heisenberg_radial",
            Domain::HeisenbergCartesian(_) => "heisenberg_cartesian",
            Domain::Euclidean { .. } => "euclidean",
            Domain::Flat => "flat",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub domain: Domain,
    pub f: NonlinearitySpec,
    pub phi: TimeWeightSpec,
    pub initial: InitialData,
    pub horizon: f64,
    pub dt0: f64,
    pub dt_min: f64,
    /// Largest accepted relative growth of `sup u` per step.
    pub growth_limit: f64,
    pub blowup_factor: f64,
    /// Dilate the radial grid when the outer region carries more than
    /// `regrid_threshold * sup u`; `None` disables regridding.
    pub regrid_threshold: Option<f64>,
}

impl SimulationConfig {
    pub fn new(f: NonlinearitySpec, phi: TimeWeightSpec, initial: InitialData, horizon: f64) -> Self {
        Self {
            domain: Domain::HeisenbergRadial(RadialGrid::default_coarse()),
            f,
            phi,
            initial,
            horizon,
            dt0: 0.05,
            dt_min: 0.05 * 0.5_f64.powi(30),
            growth_limit: 0.2,
            blowup_factor: 1e6,
            regrid_threshold: Some(1e-6),
        }
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        self.initial.validate()?;
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(SolverError::InvalidConfig("horizon must be positive and finite".into()));
        }
        if !(self.dt0 > 0.0) || !(self.dt_min > 0.0) || self.dt_min > self.dt0 {
            return Err(SolverError::InvalidConfig("need 0 < dt_min <= dt0".into()));
        }
        if !(self.growth_limit > 0.0) {
            return Err(SolverError::InvalidConfig("growth limit must be positive".into()));
        }
        if !(self.blowup_factor > 1.0) {
            return Err(SolverError::InvalidConfig("blow-up factor must exceed 1".into()));
        }
        if !self.phi.locally_integrable() {
            return Err(SolverError::InvalidConfig("time weight must be integrable near t = 0".into()));
        }
        if let Domain::Euclidean { dim, .. } = self.domain {
            if !(1..=3).contains(&dim) {
                return Err(SolverError::InvalidConfig(format!("euclidean solver supports d = 1, 2, 3, got {dim}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub sup_u: f64,
    pub mass: f64,
    pub dt: f64,
    pub event: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutcome {
    pub state: SimulationState,
    pub trace: Vec<TraceRow>,
    /// Final radial grid, when the domain is [`Domain::HeisenbergRadial`].
    pub final_grid: Option<RadialGrid>,
    pub regrids: usize,
    /// Mass dropped by resampling at regrids.
    pub regrid_mass_loss: f64,
}

impl SimulationOutcome {
    pub fn blow_up(&self) -> Option<BlowUp> {
        self.state.blow_up
    }

    pub fn verdict(&self) -> &'static str {
        if self.state.blow_up.is_some() {
            "blow-up"
        } else {
            "global-to-horizon"
        }
    }

    /// Log-log slope of `sup u` over recorded times in `[t_lo, t_hi]`.
    pub fn sup_slope(&self, t_lo: f64, t_hi: f64) -> f64 {
        let pts: Vec<(f64, f64)> =
            self.state.sup_history.iter().copied().filter(|&(t, _)| t >= t_lo && t <= t_hi).collect();
        crate::nonlinearity::loglog_slope(&pts)
    }
}

fn sample_cartesian(grid: &GridSpec, data: &InitialData) -> Vec<f64> {
    Field3::from_fn(*grid, |g, v, z| data.value((g * g + v * v).sqrt(), z)).data
}

fn build(domain: &Domain, data: &InitialData) -> Result<(Box<dyn Semigroup + Send>, Vec<f64>), SolverError> {
    Ok(match *domain {
        Domain::HeisenbergRadial(grid) => (Box::new(RadialSemigroup::new(grid)), grid.sample(data).data),
        Domain::HeisenbergCartesian(grid) => (Box::new(SpectralConvolution::new(grid)?), sample_cartesian(&grid, data)),
        Domain::Euclidean { dim, nr, hr } => {
            let e = EuclideanRadial::new(dim, nr, hr)?;
            let u = e.sample(data);
            (Box::new(e), u)
        }
        Domain::Flat => (Box::new(NoDiffusion { nodes: 1 }), vec![data.sup()]),
    })
}

/// Repeated Strang steps to the horizon or to blow-up. A step is rejected
/// and `dt` halved when `sup u` grows by more than `growth_limit`, or when
/// the reaction ODE turns singular while `dt > dt_min`. A regrid multiplies
/// `dt` by 4 unless the step was already halved at the current level.
pub fn run_simulation(config: &SimulationConfig) -> Result<SimulationOutcome, SolverError> {
    config.validate()?;
    let (mut semigroup, u0) = build(&config.domain, &config.initial)?;
    let mut radial_grid = match config.domain {
        Domain::HeisenbergRadial(g) => Some(g),
        _ => None,
    };
    let mass0 = semigroup.mass(&u0);
    let mut state = SimulationState::new(u0, mass0)?;
    let mut dt = config.dt0;
    let mut dt_level = config.dt0;
    let mut trace = vec![TraceRow { t: 0.0, sup_u: state.sup0, mass: mass0, dt, event: "init" }];
    let mut regrids = 0;
    let mut regrid_mass_loss = 0.0;
    let eps = 1e-12 * config.horizon;
    while state.t < config.horizon - eps {
        let step = dt.min(config.horizon - state.t);
        let next = step_splitting(&state, semigroup.as_mut(), &config.phi, &config.f, step, config.blowup_factor)?;
        let sup_now = state.sup();
        let can_halve = dt > config.dt_min;
        let reject = match next.blow_up {
            Some(BlowUp { reason: BlowUpReason::OdeSingularity, .. }) => can_halve,
            Some(BlowUp { reason: BlowUpReason::Threshold, .. }) => false,
            None => can_halve && sup_now > 0.0 && next.sup() > (1.0 + config.growth_limit) * sup_now,
        };
        if reject {
            dt *= 0.5;
            trace.push(TraceRow { t: state.t, sup_u: sup_now, mass: semigroup.mass(&state.u), dt, event: "reject" });
            continue;
        }
        state = next;
        if let Some(b) = state.blow_up {
            let (sup_u, mass) = match b.reason {
                BlowUpReason::OdeSingularity => (f64::INFINITY, f64::INFINITY),
                BlowUpReason::Threshold => (state.sup(), semigroup.mass(&state.u)),
            };
            trace.push(TraceRow { t: b.t_star, sup_u, mass, dt: step, event: "blowup" });
            break;
        }
        let (t, sup_u) = *state.sup_history.last().expect("history is never empty");
        let mass = state.mass_history.last().expect("history is never empty").1;
        trace.push(TraceRow { t, sup_u, mass, dt: step, event: "step" });
        if let (Some(grid), Some(thr)) = (radial_grid, config.regrid_threshold) {
            if grid.edge_exceeds(&state.u, thr) {
                let (new_grid, data) = grid.regrid(&state.u);
                let mass_new = new_grid.mass(&data);
                regrid_mass_loss += mass - mass_new;
                state.u = data;
                radial_grid = Some(new_grid);
                semigroup = Box::new(RadialSemigroup::new(new_grid));
                regrids += 1;
                if dt == dt_level {
                    dt *= 4.0;
                }
                dt_level *= 4.0;
                trace.push(TraceRow { t: state.t, sup_u: sup_norm(&state.u), mass: mass_new, dt, event: "regrid" });
            }
        }
    }
    if state.blow_up.is_none() {
        let mass = semigroup.mass(&state.u);
        trace.push(TraceRow { t: state.t, sup_u: state.sup(), mass, dt, event: "horizon" });
    }
    Ok(SimulationOutcome { state, trace, final_grid: radial_grid, regrids, regrid_mass_loss })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub amplitude: f64,
    pub verdict: &'static str,
    pub t_star: Option<f64>,
}

/// One [`run_simulation`] per `(p, amplitude)` cell with `f = v^p` and the
/// base profile rescaled to height `amplitude`. Cells run concurrently.
pub fn fujita_sweep(base: &SimulationConfig, ps: &[f64], amplitudes: &[f64]) -> Result<Vec<SweepRow>, SolverError> {
    if let Some(&p) = ps.iter().find(|&&p| !(p > 1.0)) {
        return Err(SolverError::InvalidConfig(format!("sweep needs p > 1, got {p}")));
    }
    let cells: Vec<(f64, f64)> = ps.iter().flat_map(|&p| amplitudes.iter().map(move |&a| (p, a))).collect();
    cells
        .par_iter()
        .map(|&(p, amplitude)| {
            let mut cfg = base.clone();
            cfg.f = NonlinearitySpec::power(p)?;
            cfg.initial.profile = match cfg.initial.profile {
                InitialProfile::Bump { radius, .. } => InitialProfile::Bump { height: amplitude, radius },
                InitialProfile::Flat { .. } | InitialProfile::Zero => InitialProfile::Flat { value: amplitude },
            };
            let out = run_simulation(&cfg)?;
            Ok(SweepRow { p, amplitude, verdict: out.verdict(), t_star: out.blow_up().map(|b| b.t_star) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_ode_blows_up_near_one() {
        let cfg = SimulationConfig::new(
            NonlinearitySpec::power(2.0).unwrap(),
            TimeWeightSpec::constant(1.0).unwrap(),
            InitialData { profile: InitialProfile::Flat { value: 1.0 }, tail: None },
            5.0,
        )
        .with_domain(Domain::Flat);
        let out = run_simulation(&cfg).unwrap();
        let b = out.blow_up().unwrap();
        assert!(b.t_star >= 0.95 && b.t_star <= 1.0, "{b:?}");
    }

    #[test]
    fn zero_data_stays_zero() {
        let cfg = SimulationConfig::new(
            NonlinearitySpec::power(2.0).unwrap(),
            TimeWeightSpec::constant(1.0).unwrap(),
            InitialData::bump(0.0, 1.0),
            1.0,
        );
        let out = run_simulation(&cfg).unwrap();
        assert!(out.state.u.iter().all(|&x| x == 0.0));
        assert_eq!(out.verdict(), "global-to-horizon");
    }

    #[test]
    fn empty_sweep_is_empty() {
        let cfg = SimulationConfig::new(
            NonlinearitySpec::power(2.0).unwrap(),
            TimeWeightSpec::constant(1.0).unwrap(),
            InitialData::bump(1.0, 1.0),
            1.0,
        );
        assert!(fujita_sweep(&cfg, &[], &[0.1]).unwrap().is_empty());
        assert!(fujita_sweep(&cfg, &[1.0], &[0.1]).is_err());
    }
}
