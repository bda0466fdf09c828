//! Mild-solution machinery: heat semigroups on grids, Strang splitting,
//! Picard iteration and blow-up simulation.

pub mod convolution;
pub mod grid;
pub mod picard;
pub mod radial;
pub mod simulate;
pub mod splitting;

use thiserror::Error;

use crate::heat_kernel::KernelError;
use crate::nonlinearity::NonlinearityError;

pub use convolution::{semigroup_apply, ConvolutionMethod, DirectConvolution, SpectralConvolution};
pub use grid::{Field3, GridSpec, InitialData, InitialProfile};
pub use picard::{picard_iterate, PicardOptions, PicardTrace};
pub use radial::{EuclideanRadial, RadialField, RadialGrid, RadialSemigroup};
pub use simulate::{fujita_sweep, run_simulation, Domain, SimulationConfig, SimulationOutcome, SweepRow, TraceRow};
pub use splitting::{reaction_step, step_splitting, BlowUp, BlowUpReason, ReactionOutcome, SimulationState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("time step must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("grid has {points} points, budget is {budget}")]
    BudgetExceeded { points: usize, budget: usize },
    #[error("field length {0} does not match grid size {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
}

/// A discretized heat semigroup `u -> e^{tL} u` on a fixed set of nodes.
pub trait Semigroup {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn apply(&mut self, u: &[f64], t: f64) -> Result<Vec<f64>, SolverError>;

    /// Quadrature of `int u` with the node weights of the grid.
    fn mass(&self, u: &[f64]) -> f64;
}

/// Identity propagator: the spatially flat, diffusion-free limit.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoDiffusion {
    pub nodes: usize,
}

impl Semigroup for NoDiffusion {
    fn len(&self) -> usize {
        self.nodes
    }

    fn apply(&mut self, u: &[f64], t: f64) -> Result<Vec<f64>, SolverError> {
        if !(t > 0.0) {
            return Err(SolverError::NonPositiveTime(t));
        }
        Ok(u.to_vec())
    }

    fn mass(&self, u: &[f64]) -> f64 {
        u.iter().sum()
    }
}

pub fn sup_norm(u: &[f64]) -> f64 {
    u.iter().fold(0.0_f64, |m, &x| m.max(x.abs()))
}
