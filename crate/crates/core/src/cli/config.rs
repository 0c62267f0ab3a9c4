//! Scenario configuration: built-in defaults, overridden by a TOML file,
//! overridden by command-line flags.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::ReuseFactor;
use crate::se::{Combiner, EdgeLoadFactor};

/// Upper bound on the user search range unless the config sets `K_max`.
pub const DEFAULT_K_CAP: usize = 256;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub tiers: u32,
    pub kappa: f64,
    #[serde(rename = "T")]
    pub coherence: usize,
    pub snr_db: f64,
    pub min_dist_fraction: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub beta_set: Vec<u32>,
    #[serde(rename = "K_max")]
    pub k_max: Option<usize>,
    #[serde(rename = "N_list")]
    pub antennas: Option<Vec<usize>>,
    pub combiners: Vec<String>,
    pub edge_mrc_load_factor: String,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            tiers: 3,
            kappa: 3.5,
            coherence: 1000,
            snr_db: 10.0,
            min_dist_fraction: 0.14,
            n_samples: 1_000_000,
            seed: 0,
            beta_set: vec![1, 3],
            k_max: None,
            antennas: None,
            combiners: vec!["MRC".into(), "P-ZFC".into()],
            edge_mrc_load_factor: "printed".into(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta_set.is_empty() {
            return Err(Error::Config("beta_set is empty".into()));
        }
        for &b in &self.beta_set {
            ReuseFactor::new(b)?;
        }
        self.combiners()?;
        self.edge_load()?;
        if self.coherence == 0 {
            return Err(Error::Config("T must be positive".into()));
        }
        if self.k_max == Some(0) {
            return Err(Error::Config("K_max must be positive".into()));
        }
        if let Some(list) = &self.antennas {
            if list.is_empty() || list.contains(&0) {
                return Err(Error::Config("N_list must hold positive antenna counts".into()));
            }
        }
        Ok(())
    }

    pub fn combiners(&self) -> Result<Vec<Combiner>> {
        self.combiners.iter().map(|c| c.parse()).collect()
    }

    pub fn edge_load(&self) -> Result<EdgeLoadFactor> {
        self.edge_mrc_load_factor.parse()
    }

    pub fn reuse_factors(&self) -> Result<Vec<ReuseFactor>> {
        let mut v = self.beta_set.iter().map(|&b| ReuseFactor::new(b)).collect::<Result<Vec<_>>>()?;
        v.sort_unstable();
        v.dedup();
        Ok(v)
    }

    /// `sigma^2 / rho` from the configured SNR in dB.
    pub fn inv_snr(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }

    /// Largest `K` searched: `floor(T / beta_min)` capped at [`DEFAULT_K_CAP`] unless set explicitly.
    pub fn k_max(&self) -> usize {
        let beta_min = self.beta_set.iter().copied().min().unwrap_or(1) as usize;
        self.k_max.unwrap_or_else(|| (self.coherence / beta_min).min(DEFAULT_K_CAP))
    }

    /// Antenna counts of the sweep; defaults to 31 log-spaced values over `[10, 10^4]`.
    pub fn antenna_list(&self) -> Vec<usize> {
        self.antennas.clone().unwrap_or_else(|| log_spaced(10.0, 1e4, 31))
    }
}

/// `points` values spaced evenly in log scale, rounded to integers.
pub fn log_spaced(lo: f64, hi: f64, points: usize) -> Vec<usize> {
    let (a, b) = (lo.log10(), hi.log10());
    let mut v: Vec<usize> = (0..points)
        .map(|i| {
            let t = if points == 1 { 0.0 } else { i as f64 / (points - 1) as f64 };
            10f64.powf(a + t * (b - a)).round() as usize
        })
        .collect();
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_reference_setup() {
        let c = ScenarioConfig::default();
        assert_eq!((c.tiers, c.coherence, c.n_samples), (3, 1000, 1_000_000));
        assert_eq!((c.kappa, c.snr_db, c.min_dist_fraction), (3.5, 10.0, 0.14));
        assert!((c.inv_snr() - 0.1).abs() < 1e-15);
        assert_eq!(c.k_max(), 256);
        let n = c.antenna_list();
        assert_eq!((n[0], *n.last().unwrap(), n.len()), (10, 10_000, 31));
        assert!(n.contains(&100) && n.contains(&1000));
        assert_eq!(c.combiners().unwrap(), vec![Combiner::Mrc, Combiner::PZfc]);
    }

    #[test]
    fn file_overrides_defaults() {
        let c = ScenarioConfig::from_toml_str("T = 500\nbeta_set = [3]\nseed = 7\nN_list = [50, 60]\n").unwrap();
        assert_eq!(c.coherence, 500);
        assert_eq!(c.seed, 7);
        assert_eq!(c.k_max(), 166);
        assert_eq!(c.antenna_list(), vec![50, 60]);
        assert_eq!(c.kappa, 3.5);
    }

    #[test]
    fn bad_files_rejected() {
        assert!(matches!(ScenarioConfig::from_toml_str("beta_set = [2]"), Err(Error::UnsupportedReuseFactor(2))));
        assert!(matches!(ScenarioConfig::from_toml_str("bogus = 1"), Err(Error::Config(_))));
        assert!(ScenarioConfig::from_toml_str("combiners = [\"MMSE\"]").is_err());
        assert!(ScenarioConfig::from_toml_str("edge_mrc_load_factor = \"half\"").is_err());
        assert!(ScenarioConfig::from_toml_str("N_list = []").is_err());
    }
}
