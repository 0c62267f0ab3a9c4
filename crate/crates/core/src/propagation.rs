//! Pure-pathloss channel variance and uplink power-control bookkeeping.

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Moment order of a relative interference strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Moment {
    First,
    Second,
}

impl Moment {
    pub const ALL: [Moment; 2] = [Moment::First, Moment::Second];

    pub fn order(self) -> u32 {
        match self {
            Moment::First => 1,
            Moment::Second => 2,
        }
    }
}

/// Channel variance `d(z) = ||z - b||^-kappa`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationModel {
    kappa: f64,
}

impl PropagationModel {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa >= 2.0) {
            return Err(Error::InvalidArgument(format!(
                "pathloss exponent must be at least 2, got {kappa}"
            )));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn variance(&self, z: Point, bs: Point) -> Result<f64> {
        let d = z.distance(bs);
        if d == 0.0 {
            return Err(Error::Singularity);
        }
        Ok(d.powf(-self.kappa))
    }

    /// `(d_victim(z) / d_serving(z))^gamma`: strength at the victim base station
    /// of a user whose power is inverted against its serving base station.
    pub fn relative_strength(
        &self,
        z: Point,
        serving: Point,
        victim: Point,
        gamma: Moment,
    ) -> Result<f64> {
        let to_serving = (z - serving).norm_sq();
        let to_victim = (z - victim).norm_sq();
        if to_serving == 0.0 || to_victim == 0.0 {
            return Err(Error::Singularity);
        }
        let ratio = self.strength_from_sq(to_serving, to_victim);
        Ok(match gamma {
            Moment::First => ratio,
            Moment::Second => ratio * ratio,
        })
    }

    /// First-order strength from squared distances; the Monte-Carlo hot path.
    #[inline]
    pub(crate) fn strength_from_sq(&self, to_serving_sq: f64, to_victim_sq: f64) -> f64 {
        (to_serving_sq / to_victim_sq).powf(0.5 * self.kappa)
    }
}

/// Statistic-aware power control `p = rho / d_l(z)`. Only `sigma^2 / rho` is stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerControlPolicy {
    inv_snr: f64,
}

impl PowerControlPolicy {
    pub fn from_linear(rho_over_sigma2: f64) -> Result<Self> {
        if !(rho_over_sigma2.is_finite() && rho_over_sigma2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rho/sigma^2 must be positive, got {rho_over_sigma2}"
            )));
        }
        Ok(Self { inv_snr: 1.0 / rho_over_sigma2 })
    }

    pub fn from_db(snr_db: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::InvalidArgument(format!("SNR must be finite, got {snr_db} dB")));
        }
        Ok(Self { inv_snr: 10f64.powf(-snr_db / 10.0) })
    }

    /// `sigma^2 / rho`.
    pub fn inv_snr(&self) -> f64 {
        self.inv_snr
    }

    /// Transmit power relative to `rho` for a user with own-cell variance `own_variance`.
    pub fn transmit_power(&self, own_variance: f64) -> f64 {
        1.0 / own_variance
    }
}
