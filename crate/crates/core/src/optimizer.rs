//! Exhaustive search over `(K, beta, beta_f)` and sweeps over the antenna count.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::RangeInclusive;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{CellGrid, ReuseColoring, ReuseFactor};
use crate::mu::{GroupStatistics, MuFamily, Provenance, UserSplit};
use crate::se::{
    baseline_spectral_efficiency, pilot_book_size, se_standard_error, spectral_efficiency, Combiner,
    EdgeLoadFactor, SystemParams,
};

/// Source of interference statistics for the search.
pub trait MuProvider: Sync {
    fn statistics(&self, split: UserSplit) -> Result<Arc<GroupStatistics>>;
}

impl MuProvider for MuFamily {
    fn statistics(&self, split: UserSplit) -> Result<Arc<GroupStatistics>> {
        self.get(split).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "{split} outside the estimated range K = {}..={}",
                self.k_min(),
                self.k_max()
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Fractional pilot reuse, every `beta_f = m / K`.
    Fpr,
    /// Integer pilot reuse only (`beta_f = 0`).
    Baseline,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Fpr => "FPR",
            Scheme::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Fixed part of every evaluation: the grid colorings and link parameters.
#[derive(Debug, Clone)]
pub struct Scenario {
    colorings: BTreeMap<ReuseFactor, ReuseColoring>,
    coherence: usize,
    inv_snr: f64,
    edge_load: EdgeLoadFactor,
}

impl Scenario {
    pub fn new(grid: &CellGrid, betas: &[u32], coherence: usize, inv_snr: f64) -> Result<Self> {
        let mut colorings = BTreeMap::new();
        for &b in betas {
            let coloring = grid.assign_reuse_coloring(b)?;
            colorings.insert(coloring.reuse(), coloring);
        }
        if colorings.is_empty() {
            return Err(Error::InvalidArgument("no reuse factor given".into()));
        }
        Ok(Self { colorings, coherence, inv_snr, edge_load: EdgeLoadFactor::Printed })
    }

    pub fn with_edge_load(mut self, edge_load: EdgeLoadFactor) -> Self {
        self.edge_load = edge_load;
        self
    }

    pub fn coherence(&self) -> usize {
        self.coherence
    }

    pub fn inv_snr(&self) -> f64 {
        self.inv_snr
    }

    pub fn coloring(&self, reuse: ReuseFactor) -> Result<&ReuseColoring> {
        self.colorings
            .get(&reuse)
            .ok_or_else(|| Error::InvalidArgument(format!("no coloring prepared for reuse {reuse}")))
    }

    pub fn params(&self, antennas: usize, users: usize, interior: usize, reuse: ReuseFactor) -> Result<SystemParams> {
        Ok(SystemParams::new(antennas, users, interior, self.coherence, reuse, self.inv_snr)?
            .with_edge_load(self.edge_load))
    }
}

#[derive(Debug, Clone)]
pub struct SearchSpace {
    pub users: RangeInclusive<usize>,
    pub reuse: Vec<ReuseFactor>,
    pub scheme: Scheme,
    pub antennas: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub users: usize,
    pub interior: usize,
    pub reuse: ReuseFactor,
}

impl Candidate {
    pub fn pilots(&self) -> usize {
        pilot_book_size(self.users, self.interior, self.reuse.get())
    }
}

impl SearchSpace {
    /// Grid points with `B <= T`, ordered by `K`, then `beta`, then `beta_f`.
    pub fn candidates(&self, coherence: usize) -> Vec<Candidate> {
        let mut reuse = self.reuse.clone();
        reuse.sort_unstable();
        reuse.dedup();
        let mut out = Vec::new();
        for users in self.users.clone().filter(|&k| k > 0) {
            for &r in &reuse {
                let splits = match self.scheme {
                    Scheme::Fpr => users,
                    Scheme::Baseline => 1,
                };
                out.extend(
                    (0..splits)
                        .map(|interior| Candidate { users, interior, reuse: r })
                        .filter(|c| c.pilots() <= coherence),
                );
            }
        }
        out
    }
}

/// One evaluated grid point; the unit of the sweep CSVs.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub antennas: usize,
    pub combiner: Combiner,
    pub scheme: Scheme,
    pub users: usize,
    pub reuse: ReuseFactor,
    pub interior: usize,
    pub pilots: usize,
    pub se: f64,
    pub se_asymptotic: Option<f64>,
    pub is_optimal: bool,
    pub provenance: Provenance,
}

impl SweepRecord {
    pub fn beta_f(&self) -> f64 {
        self.interior as f64 / self.users as f64
    }

    fn beats(&self, other: &SweepRecord) -> bool {
        self.se > other.se
            || (self.se == other.se
                && (self.pilots, self.users, self.reuse) < (other.pilots, other.users, other.reuse))
    }
}

/// Evaluates one point; `Ok(None)` when P-ZFC has no spare antennas.
pub fn evaluate_point(
    scenario: &Scenario,
    provider: &dyn MuProvider,
    scheme: Scheme,
    antennas: usize,
    combiner: Combiner,
    candidate: Candidate,
) -> Result<Option<SweepRecord>> {
    let params = scenario.params(antennas, candidate.users, candidate.interior, candidate.reuse)?;
    let split = UserSplit::new(candidate.users, candidate.interior)?;
    let stats = provider.statistics(split)?;
    let coloring = scenario.coloring(candidate.reuse)?;
    let evaluated = match scheme {
        Scheme::Fpr => spectral_efficiency(&params, &stats, coloring, combiner),
        Scheme::Baseline => baseline_spectral_efficiency(&params, &stats, coloring, combiner),
    };
    let result = match evaluated {
        Ok(r) => r,
        Err(Error::InsufficientAntennas { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    Ok(Some(SweepRecord {
        antennas,
        combiner,
        scheme,
        users: candidate.users,
        reuse: candidate.reuse,
        interior: candidate.interior,
        pilots: params.pilots(),
        se: result.se,
        se_asymptotic: result.se_asymptotic,
        is_optimal: false,
        provenance: stats.provenance.clone(),
    }))
}

/// Every feasible point at `antennas`, in candidate order, with the optimum flagged.
pub fn evaluate_space(
    space: &SearchSpace,
    antennas: usize,
    combiner: Combiner,
    scenario: &Scenario,
    provider: &dyn MuProvider,
) -> Result<Vec<SweepRecord>> {
    let evaluated: Vec<Option<SweepRecord>> = space
        .candidates(scenario.coherence)
        .into_par_iter()
        .map(|c| evaluate_point(scenario, provider, space.scheme, antennas, combiner, c))
        .collect::<Result<_>>()?;
    let mut records: Vec<SweepRecord> = evaluated.into_iter().flatten().collect();
    let mut best: Option<usize> = None;
    for (i, r) in records.iter().enumerate() {
        if best.is_none_or(|b| r.beats(&records[b])) {
            best = Some(i);
        }
    }
    let best = best.ok_or(Error::NoFeasiblePoint)?;
    records[best].is_optimal = true;
    Ok(records)
}

/// SE-maximizing point; ties go to fewer pilots, then fewer users, then smaller `beta`.
pub fn optimize(
    space: &SearchSpace,
    antennas: usize,
    combiner: Combiner,
    scenario: &Scenario,
    provider: &dyn MuProvider,
) -> Result<SweepRecord> {
    let records = evaluate_space(space, antennas, combiner, scenario, provider)?;
    Ok(records.into_iter().find(|r| r.is_optimal).expect("flagged by evaluate_space"))
}

/// Optimal record for every antenna count of the space.
pub fn sweep(
    space: &SearchSpace,
    combiner: Combiner,
    scenario: &Scenario,
    provider: &dyn MuProvider,
) -> Result<Vec<SweepRecord>> {
    space
        .antennas
        .iter()
        .map(|&n| optimize(space, n, combiner, scenario, provider))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainRow {
    pub antennas: usize,
    pub combiner: Combiner,
    pub se_fpr: f64,
    pub se_baseline: f64,
    pub gain_percent: f64,
}

/// Relative improvement of each FPR optimum over the baseline optimum at the same `(N, combiner)`.
pub fn compute_gains(fpr: &[SweepRecord], baseline: &[SweepRecord]) -> Result<Vec<GainRow>> {
    let optimal = |rs: &[SweepRecord]| -> BTreeMap<(Combiner, usize), f64> {
        rs.iter().filter(|r| r.is_optimal).map(|r| ((r.combiner, r.antennas), r.se)).collect()
    };
    let (f, b) = (optimal(fpr), optimal(baseline));
    if f.len() != b.len() || f.keys().ne(b.keys()) {
        return Err(Error::InvalidArgument("sweeps cover different (N, combiner) points".into()));
    }
    let mut rows: Vec<GainRow> = f
        .iter()
        .map(|(&(combiner, antennas), &se_fpr)| {
            let se_baseline = b[&(combiner, antennas)];
            GainRow {
                antennas,
                combiner,
                se_fpr,
                se_baseline,
                gain_percent: 100.0 * (se_fpr - se_baseline) / se_baseline,
            }
        })
        .collect();
    rows.sort_by_key(|r| (r.antennas, r.combiner));
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub interior: usize,
    pub beta_f: f64,
    pub pilots: usize,
    pub se: f64,
    pub se_stderr: f64,
}

/// SE over every feasible `beta_f = m / K` at fixed `(N, K, beta)`.
pub fn beta_f_profile(
    antennas: usize,
    users: usize,
    reuse: ReuseFactor,
    combiner: Combiner,
    scenario: &Scenario,
    provider: &dyn MuProvider,
) -> Result<Vec<ProfilePoint>> {
    let coloring = scenario.coloring(reuse)?;
    let mut out = Vec::with_capacity(users);
    for interior in 0..users {
        let params = match scenario.params(antennas, users, interior, reuse) {
            Ok(p) => p,
            Err(Error::PilotsExceedCoherence { .. }) => continue,
            Err(e) => return Err(e),
        };
        let stats = provider.statistics(UserSplit::new(users, interior)?)?;
        let se = match spectral_efficiency(&params, &stats, coloring, combiner) {
            Ok(r) => r.se,
            Err(Error::InsufficientAntennas { .. }) => continue,
            Err(e) => return Err(e),
        };
        out.push(ProfilePoint {
            interior,
            beta_f: params.beta_f(),
            pilots: params.pilots(),
            se,
            se_stderr: se_standard_error(&params, &stats, coloring, combiner)?,
        });
    }
    Ok(out)
}

/// True when `values` rise to a single peak and then fall, allowing each
/// step to move against the trend by at most its tolerance.
pub fn is_unimodal_within(values: &[f64], tolerance: &[f64]) -> bool {
    let Some(peak) = values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i) else {
        return true;
    };
    let slack = |i: usize| tolerance[i].max(tolerance[i + 1]);
    (0..peak).all(|i| values[i + 1] >= values[i] - slack(i))
        && (peak..values.len().saturating_sub(1)).all(|i| values[i + 1] <= values[i] + slack(i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidates_respect_coherence() {
        let space = SearchSpace {
            users: 1..=6,
            reuse: vec![ReuseFactor::new(3).unwrap(), ReuseFactor::new(1).unwrap()],
            scheme: Scheme::Fpr,
            antennas: vec![100],
        };
        let c = space.candidates(12);
        assert!(c.iter().all(|c| c.pilots() <= 12));
        // K=5 beta=3 needs 15 - 2m <= 12, i.e. m >= 2
        assert!(!c.iter().any(|c| c.users == 5 && c.reuse.get() == 3 && c.interior < 2));
        assert!(c.iter().any(|c| c.users == 5 && c.reuse.get() == 3 && c.interior == 2));
        assert_eq!(c[0], Candidate { users: 1, interior: 0, reuse: ReuseFactor::new(1).unwrap() });
        let base = SearchSpace { scheme: Scheme::Baseline, ..space };
        assert!(base.candidates(1000).iter().all(|c| c.interior == 0));
        assert_eq!(base.candidates(1000).len(), 12);
    }

    #[test]
    fn unimodality() {
        let zero = [0.0; 6];
        assert!(is_unimodal_within(&[1.0, 2.0, 3.0, 2.5, 1.0, 0.5], &zero));
        assert!(is_unimodal_within(&[3.0, 2.0, 1.0], &zero[..3]));
        assert!(!is_unimodal_within(&[1.0, 3.0, 2.0, 2.5, 1.0, 0.5], &zero));
        assert!(is_unimodal_within(&[1.0, 3.0, 2.0, 2.2, 1.0, 0.5], &[0.3; 6]));
        assert!(!is_unimodal_within(&[1.0, 3.0, 2.0, 2.5, 1.0, 0.5], &[0.3; 6]));
        assert!(is_unimodal_within(&[], &[]));
    }
}
