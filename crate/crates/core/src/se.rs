//! Closed-form uplink SINRs and spectral efficiency under fractional pilot reuse.
//!
//! Every quantity is evaluated for the measured cell `j = 0`. Interior users
//! share one pilot subset across all cells, so their interference sums run
//! over the whole grid; edge users share pilots only with the cells of the
//! same reuse color.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{ReuseColoring, ReuseFactor};
use crate::mu::{GroupMoments, GroupStatistics, UserSplit};
use crate::propagation::Moment;

const VICTIM: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Combiner {
    Mrc,
    PZfc,
}

impl Combiner {
    pub const ALL: [Combiner; 2] = [Combiner::Mrc, Combiner::PZfc];

    pub fn label(self) -> &'static str {
        match self {
            Combiner::Mrc => "MRC",
            Combiner::PZfc => "P-ZFC",
        }
    }
}

impl fmt::Display for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Combiner {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "mrc" => Ok(Combiner::Mrc),
            "pzfc" | "zfc" => Ok(Combiner::PZfc),
            _ => Err(Error::InvalidArgument(format!("unknown combiner {s:?}"))),
        }
    }
}

/// Load factor multiplying the edge-group pilot-contamination term of the MRC SINR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeLoadFactor {
    /// All `K` users of the cell.
    #[default]
    Printed,
    /// Only the `(1 - beta_f) K` edge users, as in the P-ZFC expression.
    Symmetric,
}

impl FromStr for EdgeLoadFactor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(Self::Printed),
            "symmetric" => Ok(Self::Symmetric),
            _ => Err(Error::InvalidArgument(format!("unknown edge load factor {s:?}"))),
        }
    }
}

/// Scenario parameters of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    antennas: usize,
    users: usize,
    interior: usize,
    coherence: usize,
    reuse: ReuseFactor,
    inv_snr: f64,
    edge_load: EdgeLoadFactor,
}

impl SystemParams {
    /// `interior` is `beta_f * K`, the number of users on the shared subset.
    pub fn new(
        antennas: usize,
        users: usize,
        interior: usize,
        coherence: usize,
        reuse: ReuseFactor,
        inv_snr: f64,
    ) -> Result<Self> {
        if antennas == 0 || coherence == 0 {
            return Err(Error::InvalidArgument("N and T must be at least 1".into()));
        }
        if !(inv_snr.is_finite() && inv_snr > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma^2/rho must be positive, got {inv_snr}")));
        }
        if interior > 0 && interior >= users {
            return Err(Error::InvalidPartition {
                k: users,
                beta_f: interior as f64 / users.max(1) as f64,
            });
        }
        let params = Self {
            antennas,
            users,
            interior,
            coherence,
            reuse,
            inv_snr,
            edge_load: EdgeLoadFactor::Printed,
        };
        if params.pilots() > coherence {
            return Err(Error::PilotsExceedCoherence { pilots: params.pilots(), coherence });
        }
        Ok(params)
    }

    pub fn with_fraction(
        antennas: usize,
        users: usize,
        beta_f: f64,
        coherence: usize,
        reuse: ReuseFactor,
        inv_snr: f64,
    ) -> Result<Self> {
        let split = UserSplit::from_fraction(users, beta_f)?;
        Self::new(antennas, users, split.interior(), coherence, reuse, inv_snr)
    }

    pub fn with_edge_load(mut self, edge_load: EdgeLoadFactor) -> Self {
        self.edge_load = edge_load;
        self
    }

    pub fn with_antennas(mut self, antennas: usize) -> Result<Self> {
        if antennas == 0 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        self.antennas = antennas;
        Ok(self)
    }

    pub fn antennas(&self) -> usize {
        self.antennas
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

    pub fn coherence(&self) -> usize {
        self.coherence
    }

    pub fn reuse(&self) -> ReuseFactor {
        self.reuse
    }

    pub fn inv_snr(&self) -> f64 {
        self.inv_snr
    }

    pub fn edge_load(&self) -> EdgeLoadFactor {
        self.edge_load
    }

    pub fn beta_f(&self) -> f64 {
        if self.users == 0 {
            0.0
        } else {
            self.interior as f64 / self.users as f64
        }
    }

    pub fn split(&self) -> Option<UserSplit> {
        UserSplit::new(self.users, self.interior).ok()
    }

    /// Pilot book size `B = K (beta_f + (1 - beta_f) beta)`.
    pub fn pilots(&self) -> usize {
        pilot_book_size(self.users, self.interior, self.reuse.get())
    }

    /// Fraction of the coherence block left for data, `1 - B/T`.
    pub fn prelog(&self) -> f64 {
        1.0 - self.pilots() as f64 / self.coherence as f64
    }
}

/// `K beta - m (beta - 1)` with `m = beta_f K`.
pub fn pilot_book_size(users: usize, interior: usize, beta: u32) -> usize {
    let beta = beta as usize;
    users * beta - interior * (beta - 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationResult {
    pub combiner: Combiner,
    pub sinr_interior: Option<f64>,
    pub sinr_edge: Option<f64>,
    /// Bits/s/Hz per cell.
    pub se: f64,
    /// `None` when the large-antenna limit is unbounded.
    pub se_asymptotic: Option<f64>,
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

// Denominator pieces shared by both combiners.
struct Sums {
    cross: f64,
    total_first: f64,
}

fn sums(mu: &GroupMoments, cells: &[usize], effective: f64) -> Sums {
    let (mu1, mu2) = (mu.mu(Moment::First), mu.mu(Moment::Second));
    let cross = cells
        .iter()
        .filter(|&&l| l != VICTIM)
        .map(|&l| mu2[l] + (mu2[l] - mu1[l] * mu1[l]) / effective)
        .sum();
    Sums { cross, total_first: cells.iter().map(|&l| mu1[l]).sum() }
}

fn mrc(pilots: f64, antennas: f64, load: f64, inv_snr: f64, mu: &GroupMoments, cells: &[usize]) -> f64 {
    let s = sums(mu, cells, antennas);
    let noise = (s.total_first * load / antennas + inv_snr / antennas) * (pilots * s.total_first + inv_snr);
    pilots / (pilots * s.cross + noise)
}

fn pzfc(pilots: f64, antennas: f64, load: f64, inv_snr: f64, mu: &GroupMoments, cells: &[usize]) -> f64 {
    let free = antennas - pilots;
    let s = sums(mu, cells, free);
    let mu1 = mu.mu(Moment::First);
    let floor = s.total_first + inv_snr / pilots;
    let residual: f64 = cells.iter().map(|&l| mu1[l] * (1.0 - mu1[l] / floor)).sum();
    let noise = load / free * residual * (pilots * s.total_first + inv_snr);
    pilots / (pilots * s.cross + noise)
}

fn check_stats(params: &SystemParams, stats: &GroupStatistics) -> Result<()> {
    if stats.split.users() != params.users || stats.split.interior() != params.interior {
        return Err(Error::StatisticsMismatch(format!(
            "statistics for {} but parameters have K={} interior={}",
            stats.split, params.users, params.interior
        )));
    }
    if stats.interior.is_some() != (params.interior > 0) {
        return Err(Error::StatisticsMismatch("interior group presence differs".into()));
    }
    Ok(())
}

fn check_coloring(params: &SystemParams, stats: &GroupStatistics, coloring: &ReuseColoring) -> Result<()> {
    if coloring.reuse() != params.reuse {
        return Err(Error::StatisticsMismatch(format!(
            "coloring has reuse {} but parameters have {}",
            coloring.reuse(),
            params.reuse
        )));
    }
    if coloring.len() != stats.n_cells() {
        return Err(Error::StatisticsMismatch(format!(
            "coloring covers {} cells, statistics {}",
            coloring.len(),
            stats.n_cells()
        )));
    }
    Ok(())
}

fn interior_moments<'a>(params: &SystemParams, stats: &'a GroupStatistics) -> Result<&'a GroupMoments> {
    check_stats(params, stats)?;
    stats
        .interior
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("no interior group when beta_f = 0".into()))
}

fn all_cells(stats: &GroupStatistics) -> Vec<usize> {
    (0..stats.n_cells()).collect()
}

fn require_antennas(params: &SystemParams) -> Result<()> {
    if params.antennas <= params.pilots() {
        return Err(Error::InsufficientAntennas { antennas: params.antennas, pilots: params.pilots() });
    }
    Ok(())
}

pub fn sinr_mrc_interior(params: &SystemParams, stats: &GroupStatistics) -> Result<f64> {
    let mu = interior_moments(params, stats)?;
    Ok(mrc(
        params.pilots() as f64,
        params.antennas as f64,
        params.users as f64,
        params.inv_snr,
        mu,
        &all_cells(stats),
    ))
}

pub fn sinr_mrc_edge(params: &SystemParams, stats: &GroupStatistics, coloring: &ReuseColoring) -> Result<f64> {
    check_stats(params, stats)?;
    check_coloring(params, stats, coloring)?;
    let load = match params.edge_load {
        EdgeLoadFactor::Printed => params.users,
        EdgeLoadFactor::Symmetric => params.edge(),
    };
    Ok(mrc(
        params.pilots() as f64,
        params.antennas as f64,
        load as f64,
        params.inv_snr,
        &stats.edge,
        &coloring.sharing_set(VICTIM),
    ))
}

pub fn sinr_pzfc_interior(params: &SystemParams, stats: &GroupStatistics) -> Result<f64> {
    let mu = interior_moments(params, stats)?;
    require_antennas(params)?;
    Ok(pzfc(
        params.pilots() as f64,
        params.antennas as f64,
        params.interior as f64,
        params.inv_snr,
        mu,
        &all_cells(stats),
    ))
}

pub fn sinr_pzfc_edge(params: &SystemParams, stats: &GroupStatistics, coloring: &ReuseColoring) -> Result<f64> {
    check_stats(params, stats)?;
    check_coloring(params, stats, coloring)?;
    require_antennas(params)?;
    Ok(pzfc(
        params.pilots() as f64,
        params.antennas as f64,
        params.edge() as f64,
        params.inv_snr,
        &stats.edge,
        &coloring.sharing_set(VICTIM),
    ))
}

/// Spectral efficiency `K (1 - B/T) (beta_f log2(1 + SINR_I) + (1 - beta_f) log2(1 + SINR_E))`.
pub fn spectral_efficiency(
    params: &SystemParams,
    stats: &GroupStatistics,
    coloring: &ReuseColoring,
    combiner: Combiner,
) -> Result<EvaluationResult> {
    if params.users == 0 {
        return Ok(empty_result(combiner));
    }
    check_stats(params, stats)?;
    check_coloring(params, stats, coloring)?;
    let (sinr_interior, sinr_edge) = match combiner {
        Combiner::Mrc => (
            (params.interior > 0).then(|| sinr_mrc_interior(params, stats)).transpose()?,
            sinr_mrc_edge(params, stats, coloring)?,
        ),
        Combiner::PZfc => (
            (params.interior > 0).then(|| sinr_pzfc_interior(params, stats)).transpose()?,
            sinr_pzfc_edge(params, stats, coloring)?,
        ),
    };
    let rates = params.interior as f64 * sinr_interior.map_or(0.0, log2_1p)
        + params.edge() as f64 * log2_1p(sinr_edge);
    Ok(EvaluationResult {
        combiner,
        sinr_interior,
        sinr_edge: Some(sinr_edge),
        se: params.prelog() * rates,
        se_asymptotic: asymptotic_or_none(params, stats, coloring)?,
    })
}

/// Spectral efficiency without fractional reuse: `K (1 - beta K / T) log2(1 + SINR)`.
pub fn baseline_spectral_efficiency(
    params: &SystemParams,
    stats: &GroupStatistics,
    coloring: &ReuseColoring,
    combiner: Combiner,
) -> Result<EvaluationResult> {
    if params.interior != 0 {
        return Err(Error::InvalidArgument("the baseline scheme has no interior group".into()));
    }
    if params.users == 0 {
        return Ok(empty_result(combiner));
    }
    check_stats(params, stats)?;
    check_coloring(params, stats, coloring)?;
    let sinr = match combiner {
        Combiner::Mrc => sinr_mrc_edge(params, stats, coloring)?,
        Combiner::PZfc => sinr_pzfc_edge(params, stats, coloring)?,
    };
    let k = params.users as f64;
    let pilots = k * f64::from(params.reuse.get());
    Ok(EvaluationResult {
        combiner,
        sinr_interior: None,
        sinr_edge: Some(sinr),
        se: k * (1.0 - pilots / params.coherence as f64) * log2_1p(sinr),
        se_asymptotic: asymptotic_or_none(params, stats, coloring)?,
    })
}

fn empty_result(combiner: Combiner) -> EvaluationResult {
    EvaluationResult { combiner, sinr_interior: None, sinr_edge: None, se: 0.0, se_asymptotic: Some(0.0) }
}

fn asymptotic_or_none(
    params: &SystemParams,
    stats: &GroupStatistics,
    coloring: &ReuseColoring,
) -> Result<Option<f64>> {
    match asymptotic_se(params, stats, coloring) {
        Ok(v) => Ok(Some(v)),
        Err(Error::DegenerateUnbounded) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Large-antenna limit of [`spectral_efficiency`]; independent of the combiner.
pub fn asymptotic_se(params: &SystemParams, stats: &GroupStatistics, coloring: &ReuseColoring) -> Result<f64> {
    if params.users == 0 {
        return Ok(0.0);
    }
    check_stats(params, stats)?;
    check_coloring(params, stats, coloring)?;
    let limit = |mu: &GroupMoments, cells: &[usize]| -> Result<f64> {
        let mu2 = mu.mu(Moment::Second);
        let others: Vec<usize> = cells.iter().copied().filter(|&l| l != VICTIM).collect();
        if others.is_empty() {
            return Err(Error::DegenerateUnbounded);
        }
        Ok(log2_1p(1.0 / others.iter().map(|&l| mu2[l]).sum::<f64>()))
    };
    let interior = match &stats.interior {
        Some(mu) => params.interior as f64 * limit(mu, &all_cells(stats))?,
        None => 0.0,
    };
    let edge = params.edge() as f64 * limit(&stats.edge, &coloring.sharing_set(VICTIM))?;
    Ok(params.prelog() * (interior + edge))
}

/// First-order propagation of the Monte-Carlo standard errors of the moments
/// into the spectral efficiency, treating entries as independent.
pub fn se_standard_error(
    params: &SystemParams,
    stats: &GroupStatistics,
    coloring: &ReuseColoring,
    combiner: Combiner,
) -> Result<f64> {
    let mut work = stats.clone();
    let mut variance = 0.0;
    let groups = [stats.interior.is_some(), true];
    for (gi, present) in groups.into_iter().enumerate() {
        if !present {
            continue;
        }
        for gamma in Moment::ALL {
            for l in 1..stats.n_cells() {
                let source = if gi == 0 { stats.interior.as_ref().unwrap() } else { &stats.edge };
                let (value, se) = (source.mu(gamma)[l], source.stderr(gamma)[l]);
                if se == 0.0 {
                    continue;
                }
                let h = 1e-6 * value.abs().max(1e-12);
                let mut at = |v: f64| -> Result<f64> {
                    let target = if gi == 0 { work.interior.as_mut().unwrap() } else { &mut work.edge };
                    target.mu_mut(gamma)[l] = v;
                    Ok(spectral_efficiency(params, &work, coloring, combiner)?.se)
                };
                let slope = (at(value + h)? - at(value - h)?) / (2.0 * h);
                at(value)?;
                variance += (slope * se).powi(2);
            }
        }
    }
    Ok(variance.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CellGrid;
    use crate::mu::{Method, Provenance};

    fn single_cell_stats(users: usize, interior: usize) -> GroupStatistics {
        GroupStatistics {
            split: UserSplit::new(users, interior).unwrap(),
            interior: (interior > 0).then(|| GroupMoments::own_cell_only(1)),
            edge: GroupMoments::own_cell_only(1),
            provenance: Provenance {
                grid_hash: String::new(),
                kappa: 3.5,
                min_dist_fraction: 0.14,
                method: Method::Quadrature { resolution: 0 },
            },
        }
    }

    fn single_cell_coloring(beta: u32) -> ReuseColoring {
        // only the measured cell is used
        let grid = CellGrid::new(1.0, 1).unwrap();
        let full = grid.assign_reuse_coloring(beta).unwrap();
        assert_eq!(full.sharing_set(0), vec![0], "needs reuse 7 to isolate cell 0");
        full
    }

    fn reuse(b: u32) -> ReuseFactor {
        ReuseFactor::new(b).unwrap()
    }

    #[test]
    fn pilot_book_sizes() {
        assert_eq!(pilot_book_size(5, 2, 3), 11);
        assert_eq!(pilot_book_size(10, 0, 3), 30);
        assert_eq!(pilot_book_size(10, 4, 1), 10);
        let p = SystemParams::with_fraction(100, 5, 0.4, 1000, reuse(3), 0.1).unwrap();
        assert_eq!(p.pilots(), 11);
        assert!((p.prelog() - (1.0 - 11.0 / 1000.0)).abs() < 1e-15);
    }

    #[test]
    fn params_validation() {
        assert!(matches!(
            SystemParams::new(100, 10, 0, 20, reuse(3), 0.1),
            Err(Error::PilotsExceedCoherence { pilots: 30, coherence: 20 })
        ));
        assert!(matches!(
            SystemParams::new(100, 10, 10, 1000, reuse(3), 0.1),
            Err(Error::InvalidPartition { .. })
        ));
        assert!(SystemParams::new(0, 10, 0, 1000, reuse(1), 0.1).is_err());
        assert!(SystemParams::new(10, 10, 0, 1000, reuse(1), 0.0).is_err());
        assert!(SystemParams::new(10, 10, 0, 1000, reuse(1), f64::NAN).is_err());
    }

    #[test]
    fn single_cell_mrc_closed_form() {
        // 7-cell grid with reuse 7 would still include interior sums over all cells,
        // so the interior check uses a genuine one-cell table
        let stats = single_cell_stats(10, 0);
        let p = SystemParams::new(100, 10, 0, 1000, reuse(1), 0.1).unwrap();
        let mu = &stats.edge;
        let sinr = mrc(p.pilots() as f64, 100.0, 10.0, 0.1, mu, &[0]);
        let expected = 100.0 * 10.0 / ((10.0 + 0.1) * (10.0 + 0.1));
        assert!((sinr - expected).abs() < 1e-12 * expected);
        assert!((sinr - 9.8030).abs() < 1e-4);
    }

    #[test]
    fn single_cell_baseline_se() {
        let stats = single_cell_stats(10, 0);
        let p = SystemParams::new(100, 10, 0, 1000, reuse(1), 0.1).unwrap();
        let sinr = mrc(10.0, 100.0, 10.0, 0.1, &stats.edge, &[0]);
        let se = 10.0 * (1.0 - 0.01) * (1.0 + sinr).log2();
        assert!((se - 33.990).abs() < 1e-3, "{se}");
        assert_eq!(p.pilots(), 10);
    }

    #[test]
    fn single_cell_interior_matches_edge_form() {
        let stats = single_cell_stats(10, 2);
        let p = SystemParams::new(100, 10, 2, 1000, reuse(1), 0.1).unwrap();
        let i = sinr_mrc_interior(&p, &stats).unwrap();
        let e = mrc(10.0, 100.0, 10.0, 0.1, &stats.edge, &[0]);
        assert_eq!(i, e);
    }

    #[test]
    fn isolated_cell_asymptote_is_unbounded() {
        let grid = CellGrid::new(1.0, 1).unwrap();
        let coloring = single_cell_coloring(7);
        let mut stats = single_cell_stats(4, 0);
        stats.edge = GroupMoments::own_cell_only(grid.len());
        for l in 1..grid.len() {
            stats.edge.mu1[l] = 0.1;
            stats.edge.mu2[l] = 0.02;
        }
        let p = SystemParams::new(100, 4, 0, 1000, reuse(7), 0.1).unwrap();
        assert!(matches!(asymptotic_se(&p, &stats, &coloring), Err(Error::DegenerateUnbounded)));
        let r = spectral_efficiency(&p, &stats, &coloring, Combiner::Mrc).unwrap();
        assert!(r.se_asymptotic.is_none());
        assert!(r.se > 0.0);
    }

    #[test]
    fn zero_users_zero_se() {
        let grid = CellGrid::new(1.0, 1).unwrap();
        let coloring = grid.assign_reuse_coloring(1).unwrap();
        let p = SystemParams::new(100, 0, 0, 1000, reuse(1), 0.1).unwrap();
        let stats = single_cell_stats(1, 0);
        let r = baseline_spectral_efficiency(&p, &stats, &coloring, Combiner::Mrc).unwrap();
        assert_eq!(r.se, 0.0);
        assert_eq!(spectral_efficiency(&p, &stats, &coloring, Combiner::PZfc).unwrap().se, 0.0);
    }

    #[test]
    fn pzfc_needs_spare_antennas() {
        let grid = CellGrid::new(1.0, 1).unwrap();
        let coloring = grid.assign_reuse_coloring(1).unwrap();
        let mut stats = single_cell_stats(10, 0);
        stats.edge = GroupMoments::own_cell_only(grid.len());
        let p = SystemParams::new(10, 10, 0, 1000, reuse(1), 0.1).unwrap();
        assert!(matches!(
            spectral_efficiency(&p, &stats, &coloring, Combiner::PZfc),
            Err(Error::InsufficientAntennas { antennas: 10, pilots: 10 })
        ));
        assert!(spectral_efficiency(&p, &stats, &coloring, Combiner::Mrc).is_ok());
    }

    #[test]
    fn mismatched_statistics_rejected() {
        let grid = CellGrid::new(1.0, 1).unwrap();
        let coloring = grid.assign_reuse_coloring(1).unwrap();
        let mut stats = single_cell_stats(10, 0);
        stats.edge = GroupMoments::own_cell_only(grid.len());
        let p = SystemParams::new(100, 12, 0, 1000, reuse(1), 0.1).unwrap();
        assert!(matches!(
            spectral_efficiency(&p, &stats, &coloring, Combiner::Mrc),
            Err(Error::StatisticsMismatch(_))
        ));
        let p3 = SystemParams::new(100, 10, 0, 1000, reuse(3), 0.1).unwrap();
        assert!(matches!(
            spectral_efficiency(&p3, &stats, &coloring, Combiner::Mrc),
            Err(Error::StatisticsMismatch(_))
        ));
    }

    #[test]
    fn combiner_parsing() {
        assert_eq!("mrc".parse::<Combiner>().unwrap(), Combiner::Mrc);
        assert_eq!("P-ZFC".parse::<Combiner>().unwrap(), Combiner::PZfc);
        assert!("mmse".parse::<Combiner>().is_err());
        assert_eq!("symmetric".parse::<EdgeLoadFactor>().unwrap(), EdgeLoadFactor::Symmetric);
    }
}
