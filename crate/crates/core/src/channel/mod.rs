//! Per-realization radio model: fading, the interference-threshold power
//! rule for buyer base stations, SINR at the typical users and the
//! instantaneous rates together with their exact derivatives.

mod distribution;
mod sample;
mod sinr;

pub use distribution::{
    h_cdf, h_pdf, h_quantile, p_cdf, p_pdf, sample_buyer_power, sample_interference_gain,
};
pub use sample::NetworkSample;
pub use sinr::{
    evaluate_sample, instantaneous_rate, rate_gradients, sinr_buyer, sinr_seller, RateGradient,
    SampleEvaluation,
};

use crate::error::{Error, Result};
use crate::geometry::NetworkConfig;

/// Relaxed sub-band lease decisions, `L` rows (global sub-band) by `B` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SharingMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SharingMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SharingMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        assert!((0.0..=1.0).contains(&value), "sharing value {value} outside [0,1]");
        SharingMatrix { rows, cols, data: vec![value; rows * cols] }
    }

    /// Row-major values; every entry must lie in `[0, 1]`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "sharing matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("sharing value {v} outside [0,1]")));
        }
        Ok(SharingMatrix { rows, cols, data })
    }

    pub fn for_config(config: &NetworkConfig, value: f64) -> Self {
        Self::filled(config.total_subbands(), config.num_buyers, value)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, l: usize, b: usize) -> f64 {
        self.data[l * self.cols + b]
    }

    #[inline]
    pub fn set(&mut self, l: usize, b: usize, value: f64) {
        debug_assert!((0.0..=1.0).contains(&value), "sharing value {value} outside [0,1]");
        self.data[l * self.cols + b] = value;
    }

    pub fn row(&self, l: usize) -> &[f64] {
        &self.data[l * self.cols..(l + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// True when every entry is exactly 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Largest distance of an entry to the nearest of {0, 1}.
    pub fn max_fractional_deviation(&self) -> f64 {
        self.data.iter().map(|&v| v.min(1.0 - v)).fold(0.0, f64::max)
    }

    /// Residuals of the borrow caps (`Σ_{l∈L_s} a[l][b] - N_s^B` per seller
    /// and buyer) followed by the lease caps (`Σ_b a[l][b] - N_s^L` per
    /// sub-band). Nonpositive means satisfied.
    pub fn cap_residuals(&self, config: &NetworkConfig) -> Vec<f64> {
        let mut out = Vec::with_capacity(config.num_sellers * self.cols + self.rows);
        for s in 0..config.num_sellers {
            for b in 0..self.cols {
                let used: f64 = config.seller_bands(s).map(|l| self.get(l, b)).sum();
                out.push(used - config.borrow_cap[s] as f64);
            }
        }
        let owners = config.band_owners();
        for l in 0..self.rows {
            let used: f64 = self.row(l).iter().sum();
            out.push(used - config.lease_cap[owners[l]] as f64);
        }
        out
    }
}

/// Seller transmit power per global sub-band, watts.
#[derive(Debug, Clone, PartialEq)]
pub struct SellerPowerVector(pub Vec<f64>);

impl SellerPowerVector {
    pub fn uniform(config: &NetworkConfig, watts: f64) -> Self {
        SellerPowerVector(vec![watts; config.total_subbands()])
    }

    pub fn validate(&self, config: &NetworkConfig) -> Result<()> {
        if self.0.len() != config.total_subbands() {
            return Err(Error::invalid(format!(
                "power vector has {} entries for {} sub-bands",
                self.0.len(),
                config.total_subbands()
            )));
        }
        match self.0.iter().find(|&&p| !(0.0..=config.max_seller_power_w).contains(&p)) {
            Some(p) => Err(Error::invalid(format!(
                "seller power {p} W outside [0, {}]",
                config.max_seller_power_w
            ))),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for SellerPowerVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}
