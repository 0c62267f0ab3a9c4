//! Group interference moments.
//!
//! For a user of cell `l` at `z`, the relative strength at the measured base
//! station 0 is `d_0(z) / d_l(z)`. The users of every cell are split by
//! distance to their own base station into an interior group (the `m`
//! closest) and an edge group (the remaining `K - m`); the first and second
//! moments of the relative strength over each group are the sufficient
//! statistics of the closed-form SINRs.

mod cache;
mod montecarlo;
mod oracle;

pub use cache::{cache_key, family_cache_key, CacheKey, MuCache};
pub use montecarlo::{estimate_mu, MonteCarloConfig, MuFamily};
pub use oracle::{quadrature_mu_oracle, whole_cell_oracle, DistanceLaw};

use std::fmt;

use crate::error::{Error, Result};
use crate::propagation::Moment;

/// Partition of `K` users into `interior` closest users and `K - interior` edge users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UserSplit {
    users: usize,
    interior: usize,
}

impl UserSplit {
    pub fn new(users: usize, interior: usize) -> Result<Self> {
        if users == 0 || interior >= users {
            return Err(Error::InvalidPartition {
                k: users,
                beta_f: if users == 0 { f64::NAN } else { interior as f64 / users as f64 },
            });
        }
        Ok(Self { users, interior })
    }

    /// Split from a fractional reuse factor; `beta_f * K` must be a whole number below `K`.
    pub fn from_fraction(users: usize, beta_f: f64) -> Result<Self> {
        let err = || Error::InvalidPartition { k: users, beta_f };
        if !(0.0..1.0).contains(&beta_f) || users == 0 {
            return Err(err());
        }
        let scaled = beta_f * users as f64;
        let interior = scaled.round();
        if (scaled - interior).abs() > 1e-9 {
            return Err(err());
        }
        Self::new(users, interior as usize).map_err(|_| err())
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn interior(&self) -> usize {
        self.interior
    }

    pub fn edge(&self) -> usize {
        self.users - self.interior
    }

    pub fn beta_f(&self) -> f64 {
        self.interior as f64 / self.users as f64
    }
}

impl fmt::Display for UserSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "K={} interior={}", self.users, self.interior)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    Interior,
    Edge,
}

impl Group {
    pub fn label(self) -> &'static str {
        match self {
            Group::Interior => "interior",
            Group::Edge => "edge",
        }
    }
}

/// Per-cell moments of one user group, indexed by interfering cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMoments {
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
    pub stderr1: Vec<f64>,
    pub stderr2: Vec<f64>,
}

impl GroupMoments {
    pub(crate) fn own_cell_only(n_cells: usize) -> Self {
        let mut unit = vec![0.0; n_cells];
        unit[0] = 1.0;
        Self {
            mu1: unit.clone(),
            mu2: unit,
            stderr1: vec![0.0; n_cells],
            stderr2: vec![0.0; n_cells],
        }
    }

    pub fn mu(&self, gamma: Moment) -> &[f64] {
        match gamma {
            Moment::First => &self.mu1,
            Moment::Second => &self.mu2,
        }
    }

    pub fn stderr(&self, gamma: Moment) -> &[f64] {
        match gamma {
            Moment::First => &self.stderr1,
            Moment::Second => &self.stderr2,
        }
    }

    pub fn mu_mut(&mut self, gamma: Moment) -> &mut [f64] {
        match gamma {
            Moment::First => &mut self.mu1,
            Moment::Second => &mut self.mu2,
        }
    }

    pub fn len(&self) -> usize {
        self.mu1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu1.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    MonteCarlo { seed: u64, n_samples: u64 },
    Quadrature { resolution: usize },
}

/// Where a set of statistics came from; two tables are interchangeable iff
/// their provenance and split agree.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub grid_hash: String,
    pub kappa: f64,
    pub min_dist_fraction: f64,
    pub method: Method,
}

/// Interference moments of the interior and edge groups of every cell,
/// measured at base station 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStatistics {
    pub split: UserSplit,
    /// `None` when `beta_f = 0` (no interior group).
    pub interior: Option<GroupMoments>,
    pub edge: GroupMoments,
    pub provenance: Provenance,
}

impl GroupStatistics {
    pub fn n_cells(&self) -> usize {
        self.edge.len()
    }

    pub fn users(&self) -> usize {
        self.split.users()
    }

    pub fn beta_f(&self) -> f64 {
        self.split.beta_f()
    }

    pub fn n_samples(&self) -> u64 {
        match self.provenance.method {
            Method::MonteCarlo { n_samples, .. } => n_samples,
            Method::Quadrature { .. } => 0,
        }
    }

    pub fn group(&self, group: Group) -> Option<&GroupMoments> {
        match group {
            Group::Interior => self.interior.as_ref(),
            Group::Edge => Some(&self.edge),
        }
    }

    /// `beta_f * mu_I + (1 - beta_f) * mu_E`, the whole-cell moment.
    pub fn whole_cell(&self, gamma: Moment) -> Vec<f64> {
        let bf = self.beta_f();
        let edge = self.edge.mu(gamma);
        match &self.interior {
            None => edge.to_vec(),
            Some(i) => i
                .mu(gamma)
                .iter()
                .zip(edge)
                .map(|(a, b)| bf * a + (1.0 - bf) * b)
                .collect(),
        }
    }

    /// Upper bound on the standard error of [`Self::whole_cell`].
    pub fn whole_cell_stderr(&self, gamma: Moment) -> Vec<f64> {
        let bf = self.beta_f();
        let edge = self.edge.stderr(gamma);
        match &self.interior {
            None => edge.to_vec(),
            Some(i) => i
                .stderr(gamma)
                .iter()
                .zip(edge)
                .map(|(a, b)| bf * a + (1.0 - bf) * b)
                .collect(),
        }
    }
}
