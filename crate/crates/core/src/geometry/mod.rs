//! Network configuration and spatial sampling of base-station layouts.
//!
//! Base stations of every operator form independent homogeneous Poisson point
//! processes on a disc centred on the typical user, who sits at the origin.
//! Intensities are configured per km² while all distances are in meters.

mod network;
mod ppp;

pub use network::{sample_network, sample_network_covered, MAX_COVERAGE_RETRIES};
pub use ppp::{nearest_distance, sample_ppp, sample_ppp_with, PointSet};

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::dbm_to_watts;

/// Identifies one operator. Sellers own licensed sub-bands; buyers lease them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mno {
    Seller(usize),
    Buyer(usize),
}

/// How buyer base stations choose their transmit power on a leased sub-band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BuyerPowerScheme {
    /// `p = ζ_s / H` with `H` the largest interference gain towards the
    /// seller's users, so every seller user sees at most `ζ_s`.
    #[default]
    InterferenceControlled,
    /// Independent uniform draws on `[0, max_w]`.
    UniformRandom { max_w: f64 },
    /// Every buyer base station transmits at `power_w`.
    Fixed { power_w: f64 },
}

/// Cell association rule for the typical user of an operator.
///
/// With equal transmit powers (seller networks) both rules pick the nearest
/// base station. Buyer base stations carry individual powers; associating to
/// the strongest mean received power `p·x^(-α)` is the rule under which the
/// closed-form buyer rate in [`crate::rate_analysis`] is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Association {
    #[default]
    StrongestMean,
    Nearest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub num_sellers: usize,
    pub num_buyers: usize,
    /// `L_s` for each seller; sub-bands are numbered globally seller by seller.
    pub subbands_per_seller: Vec<usize>,
    /// Radius of the service area, used for subscriber counts.
    pub radius_m: f64,
    /// Radius of the disc on which base stations are sampled.
    pub window_radius_m: f64,
    /// Base-station intensity per km², sellers first then buyers.
    pub bs_intensity: Vec<f64>,
    /// User intensity per km², sellers first then buyers.
    pub user_intensity: Vec<f64>,
    pub pathloss_alpha: f64,
    pub noise_power_w: f64,
    /// `ζ_s` per seller, watts.
    pub interference_threshold_w: Vec<f64>,
    pub max_seller_power_w: f64,
    /// `N_s^B`: sub-bands one buyer may borrow from seller `s`.
    pub borrow_cap: Vec<usize>,
    /// `N_s^L`: buyers that may lease one sub-band of seller `s`.
    pub lease_cap: Vec<usize>,
    pub buyer_power: BuyerPowerScheme,
    pub association: Association,
}

impl NetworkConfig {
    /// Default radio parameters: 500 m area, 8 BS/km², 16 UE/km², α = 4,
    /// σ² = -150 dBm, ζ = -110 dBm, P^max = 10 dBm. Caps default to the
    /// non-binding values `N^B = L_s`, `N^L = B`.
    ///
    /// Base stations are sampled on a 2 km disc: the analytic rates assume
    /// an unbounded plane and a 500 m window drops enough interference to
    /// bias simulated rates by 10-30%.
    pub fn standard(num_sellers: usize, num_buyers: usize, subbands_per_seller: usize) -> Self {
        let mnos = num_sellers + num_buyers;
        NetworkConfig {
            num_sellers,
            num_buyers,
            subbands_per_seller: vec![subbands_per_seller; num_sellers],
            radius_m: 500.0,
            window_radius_m: 2000.0,
            bs_intensity: vec![8.0; mnos],
            user_intensity: vec![16.0; mnos],
            pathloss_alpha: 4.0,
            noise_power_w: dbm_to_watts(-150.0),
            interference_threshold_w: vec![dbm_to_watts(-110.0); num_sellers],
            max_seller_power_w: dbm_to_watts(10.0),
            borrow_cap: vec![subbands_per_seller; num_sellers],
            lease_cap: vec![num_buyers.max(1); num_sellers],
            buyer_power: BuyerPowerScheme::default(),
            association: Association::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.num_sellers;
        let mnos = self.mno_count();
        if s == 0 {
            return Err(Error::config("num_sellers", "must be positive"));
        }
        let lens: [(&str, usize, usize); 6] = [
            ("subbands_per_seller", self.subbands_per_seller.len(), s),
            ("interference_threshold", self.interference_threshold_w.len(), s),
            ("borrow_cap", self.borrow_cap.len(), s),
            ("lease_cap", self.lease_cap.len(), s),
            ("bs_intensity", self.bs_intensity.len(), mnos),
            ("user_intensity", self.user_intensity.len(), mnos),
        ];
        for (key, got, want) in lens {
            if got != want {
                return Err(Error::config(key, format!("expected {want} entries, found {got}")));
            }
        }
        if self.subbands_per_seller.iter().any(|&l| l == 0) {
            return Err(Error::config("subbands_per_seller", "every seller needs at least one sub-band"));
        }
        if !(self.radius_m > 0.0 && self.radius_m.is_finite()) {
            return Err(Error::config("radius_m", "must be positive"));
        }
        if !(self.window_radius_m > 0.0 && self.window_radius_m.is_finite()) {
            return Err(Error::config("window_radius_m", "must be positive"));
        }
        if self.bs_intensity.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::config("bs_intensity", "intensities must be positive"));
        }
        if self.user_intensity.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::config("user_intensity", "intensities must be positive"));
        }
        if !(self.pathloss_alpha > 2.0 && self.pathloss_alpha.is_finite()) {
            return Err(Error::config("pathloss_alpha", "pathloss_alpha must exceed 2"));
        }
        if !(self.noise_power_w >= 0.0 && self.noise_power_w.is_finite()) {
            return Err(Error::config("noise_power", "must be nonnegative"));
        }
        if self.interference_threshold_w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::config("interference_threshold", "must be positive"));
        }
        if !(self.max_seller_power_w > 0.0 && self.max_seller_power_w.is_finite()) {
            return Err(Error::config("max_seller_power", "must be positive"));
        }
        if self.borrow_cap.iter().any(|&c| c == 0) {
            return Err(Error::config("borrow_cap", "caps must be positive"));
        }
        if self.lease_cap.iter().any(|&c| c == 0) {
            return Err(Error::config("lease_cap", "caps must be positive"));
        }
        match self.buyer_power {
            BuyerPowerScheme::InterferenceControlled => {}
            BuyerPowerScheme::UniformRandom { max_w } if max_w > 0.0 && max_w.is_finite() => {}
            BuyerPowerScheme::Fixed { power_w } if power_w > 0.0 && power_w.is_finite() => {}
            _ => return Err(Error::config("buyer_power", "power must be positive")),
        }
        Ok(())
    }

    pub fn mno_count(&self) -> usize {
        self.num_sellers + self.num_buyers
    }

    /// Total number of licensed sub-bands `L`.
    pub fn total_subbands(&self) -> usize {
        self.subbands_per_seller.iter().sum()
    }

    /// Global sub-band indices owned by seller `s`.
    pub fn seller_bands(&self, s: usize) -> Range<usize> {
        let start: usize = self.subbands_per_seller[..s].iter().sum();
        start..start + self.subbands_per_seller[s]
    }

    /// Owner of every global sub-band.
    pub fn band_owners(&self) -> Vec<usize> {
        self.subbands_per_seller
            .iter()
            .enumerate()
            .flat_map(|(s, &l)| std::iter::repeat_n(s, l))
            .collect()
    }

    /// Position of an operator in the per-MNO intensity vectors.
    pub fn mno_index(&self, mno: Mno) -> usize {
        match mno {
            Mno::Seller(s) => s,
            Mno::Buyer(b) => self.num_sellers + b,
        }
    }

    /// Inverse of [`Self::mno_index`].
    pub fn mno_at(&self, k: usize) -> Mno {
        if k < self.num_sellers {
            Mno::Seller(k)
        } else {
            Mno::Buyer(k - self.num_sellers)
        }
    }

    pub fn mnos(&self) -> impl Iterator<Item = Mno> + '_ {
        (0..self.num_sellers)
            .map(Mno::Seller)
            .chain((0..self.num_buyers).map(Mno::Buyer))
    }

    pub fn seller_bs_intensity(&self, s: usize) -> f64 {
        self.bs_intensity[s]
    }

    pub fn buyer_bs_intensity(&self, b: usize) -> f64 {
        self.bs_intensity[self.num_sellers + b]
    }

    pub fn seller_user_intensity(&self, s: usize) -> f64 {
        self.user_intensity[s]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_is_valid_and_converted() {
        let cfg = NetworkConfig::standard(2, 1, 1);
        cfg.validate().unwrap();
        assert_eq!(cfg.total_subbands(), 2);
        assert!((cfg.interference_threshold_w[0] - 1e-14).abs() < 1e-26);
        assert!((cfg.max_seller_power_w - 0.01).abs() < 1e-15);
        assert_eq!(cfg.band_owners(), vec![0, 1]);
    }

    #[test]
    fn band_layout() {
        let mut cfg = NetworkConfig::standard(3, 2, 1);
        cfg.subbands_per_seller = vec![2, 1, 3];
        assert_eq!(cfg.seller_bands(0), 0..2);
        assert_eq!(cfg.seller_bands(2), 3..6);
        assert_eq!(cfg.band_owners(), vec![0, 0, 1, 2, 2, 2]);
        assert_eq!(cfg.mno_index(Mno::Buyer(1)), 4);
    }

    #[test]
    fn rejects_alpha_two() {
        let mut cfg = NetworkConfig::standard(1, 1, 1);
        cfg.pathloss_alpha = 2.0;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("pathloss_alpha must exceed 2"), "{err}");
    }

    #[test]
    fn rejects_zero_user_intensity() {
        let mut cfg = NetworkConfig::standard(1, 1, 1);
        cfg.user_intensity[0] = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::Config { key, .. }) if key == "user_intensity"));
    }
}
