//! Uniform Cartesian grids on `H^1` and initial profiles.

use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::group::koranyi_from_parts;

/// Uniform grid on `H^1` with nodes `g_i = (i - ng/2) h_g`, likewise for
/// `v` and `zeta`. The origin is a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub ng: usize,
    pub nv: usize,
    pub nz: usize,
    pub hg: f64,
    pub hv: f64,
    pub hz: f64,
    pub budget: usize,
}

impl GridSpec {
    pub const DEFAULT_BUDGET: usize = 64 * 64 * 64;

    pub fn new(
        (ng, nv, nz): (usize, usize, usize),
        (hg, hv, hz): (f64, f64, f64),
    ) -> Result<Self, SolverError> {
        if ng < 2 || nv < 2 || nz < 2 {
            return Err(SolverError::InvalidConfig("grid needs at least 2 nodes per axis".into()));
        }
        if !(hg > 0.0 && hv > 0.0 && hz > 0.0) {
            return Err(SolverError::InvalidConfig("grid steps must be positive".into()));
        }
        let grid = Self { ng, nv, nz, hg, hv, hz, budget: Self::DEFAULT_BUDGET };
        grid.check_budget()?;
        Ok(grid)
    }

    /// The 64^3 grid over `(g, v) in [-6, 6]^2`, `zeta in [-36, 36]`.
    pub fn default_h1() -> Self {
        Self::new((64, 64, 64), (12.0 / 64.0, 12.0 / 64.0, 72.0 / 64.0)).expect("valid default grid")
    }

    pub fn with_budget(mut self, budget: usize) -> Result<Self, SolverError> {
        self.budget = budget;
        self.check_budget()?;
        Ok(self)
    }

    fn check_budget(&self) -> Result<(), SolverError> {
        let points = self.len();
        if points > self.budget {
            return Err(SolverError::BudgetExceeded { points, budget: self.budget });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ng * self.nv * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Half-widths `(G, V, Z)`.
    pub fn extent(&self) -> (f64, f64, f64) {
        (
            0.5 * self.ng as f64 * self.hg,
            0.5 * self.nv as f64 * self.hv,
            0.5 * self.nz as f64 * self.hz,
        )
    }

    pub fn cell_volume(&self) -> f64 {
        self.hg * self.hv * self.hz
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.nv + j) * self.nz + k
    }

    /// Centered integer coordinates of node `(i, j, k)`.
    pub fn centered(&self, i: usize, j: usize, k: usize) -> (i64, i64, i64) {
        (
            i as i64 - (self.ng / 2) as i64,
            j as i64 - (self.nv / 2) as i64,
            k as i64 - (self.nz / 2) as i64,
        )
    }

    pub fn coords(&self, i: usize, j: usize, k: usize) -> (f64, f64, f64) {
        let (a, b, c) = self.centered(i, j, k);
        (a as f64 * self.hg, b as f64 * self.hv, c as f64 * self.hz)
    }

    pub fn origin(&self) -> usize {
        self.index(self.ng / 2, self.nv / 2, self.nz / 2)
    }
}

/// Nodal values on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field3 {
    pub grid: GridSpec,
    pub data: Vec<f64>,
}

impl Field3 {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, data: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for i in 0..grid.ng {
            for j in 0..grid.nv {
                for k in 0..grid.nz {
                    let (g, v, z) = grid.coords(i, j, k);
                    data.push(f(g, v, z));
                }
            }
        }
        Self { grid, data }
    }

    pub fn mass(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn sup(&self) -> f64 {
        super::sup_norm(&self.data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialProfile {
    /// `h (1 - (N(x)/R)^4)_+` with `N` the Koranyi gauge.
    Bump { height: f64, radius: f64 },
    Flat { value: f64 },
    Zero,
}

/// Initial profile plus an optional everywhere-positive integrable tail
/// `eps (1 + N^2)^{-3}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub profile: InitialProfile,
    pub tail: Option<f64>,
}

impl InitialData {
    pub fn bump(height: f64, radius: f64) -> Self {
        Self { profile: InitialProfile::Bump { height, radius }, tail: None }
    }

    /// Bump normalized to unit mass on `H^1`: `int = h R^4 pi^2 / 4`.
    pub fn unit_mass_bump(radius: f64) -> Self {
        Self::bump(unit_mass_bump_height(radius), radius)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        match self.profile {
            InitialProfile::Bump { height, radius } => {
                if !(height >= 0.0) || !(radius > 0.0) || !height.is_finite() || !radius.is_finite() {
                    return Err(SolverError::InvalidConfig("bump needs height >= 0 and radius > 0".into()));
                }
            }
            InitialProfile::Flat { value } => {
                if !(value >= 0.0) || !value.is_finite() {
                    return Err(SolverError::InvalidConfig("flat value must be >= 0".into()));
                }
            }
            InitialProfile::Zero => {}
        }
        if let Some(eps) = self.tail {
            if !(eps >= 0.0) || !eps.is_finite() {
                return Err(SolverError::InvalidConfig("tail amplitude must be >= 0".into()));
            }
        }
        Ok(())
    }

    /// Value at a point with horizontal norm `|xi|` and center coordinate `zeta`.
    pub fn value(&self, xi_norm: f64, zeta: f64) -> f64 {
        let n = koranyi_from_parts(xi_norm, zeta);
        let base = match self.profile {
            InitialProfile::Bump { height, radius } => {
                let s = n / radius;
                height * (1.0 - s * s * s * s).max(0.0)
            }
            InitialProfile::Flat { value } => value,
            InitialProfile::Zero => 0.0,
        };
        base + self.tail.map_or(0.0, |eps| eps * (1.0 + n * n).powi(-3))
    }

    /// Value on `R^d` with `N = |x|`.
    pub fn value_euclidean(&self, r: f64) -> f64 {
        self.value(r, 0.0)
    }

    pub fn sup(&self) -> f64 {
        match self.profile {
            InitialProfile::Bump { height, .. } => height,
            InitialProfile::Flat { value } => value,
            InitialProfile::Zero => 0.0,
        }
        .max(0.0)
            + self.tail.unwrap_or(0.0)
    }
}

pub fn unit_mass_bump_height(radius: f64) -> f64 {
    4.0 / (std::f64::consts::PI.powi(2) * radius.powi(4))
}
