//! Operator revenues, costs and profits, and the scalarized buyer objective.
//!
//! Profits are in an abstract currency. Buyer `b` earns `δ D N_b r̄_b` from
//! its subscribers and pays `φ_{s,b}` per leased sub-band; seller `s` earns
//! `δ D N_s r̄_s` plus lease payments and pays `φ_s` per licensed sub-band.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{SellerPowerVector, SharingMatrix};
use crate::cssca::{self, CsscaSettings, Sense};
use crate::error::{Error, Result};
use crate::geometry::NetworkConfig;
use crate::rate_analysis::{mc_rate_samples, McEstimate};
use crate::rng::{stream, sub_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconParams {
    /// `δ`: monthly price per bps/Hz of per-user expected rate.
    pub price_per_rate: f64,
    /// `D`: investment horizon in months.
    pub horizon_months: f64,
    /// `φ_{s,b}`, indexed `[s][b]`.
    pub lease_price: Vec<Vec<f64>>,
    /// `φ_s` per licensed sub-band.
    pub license_price: Vec<f64>,
    pub seller_weights: Vec<f64>,
    pub buyer_weights: Vec<f64>,
    /// Lower bound on the weighted seller profit.
    pub epsilon: f64,
    /// `ϑ`: weight of the binarization penalty.
    pub penalty: f64,
    /// `r^th` in bps/Hz, required of every operator's typical user.
    pub rate_floor: f64,
}

impl EconParams {
    /// Default economics: δ = 2, D = 120, lease prices 1800 (first seller)
    /// and 1200 (every other seller), license price 2000, uniform weights,
    /// r^th = 1, ε = 0 and ϑ = 10⁵.
    pub fn standard(num_sellers: usize, num_buyers: usize) -> Self {
        let lease_price = (0..num_sellers)
            .map(|s| vec![if s == 0 { 1800.0 } else { 1200.0 }; num_buyers])
            .collect();
        let uniform = |n: usize| vec![if n == 0 { 0.0 } else { 1.0 / n as f64 }; n];
        EconParams {
            price_per_rate: 2.0,
            horizon_months: 120.0,
            lease_price,
            license_price: vec![2000.0; num_sellers],
            seller_weights: uniform(num_sellers),
            buyer_weights: uniform(num_buyers),
            epsilon: 0.0,
            penalty: 1e5,
            rate_floor: 1.0,
        }
    }

    pub fn validate(&self, config: &NetworkConfig) -> Result<()> {
        let (s, b) = (config.num_sellers, config.num_buyers);
        if self.lease_price.len() != s || self.lease_price.iter().any(|row| row.len() != b) {
            return Err(Error::config("lease_price", format!("expected a {s}x{b} table")));
        }
        if self.license_price.len() != s {
            return Err(Error::config("license_price", format!("expected {s} entries")));
        }
        check_weights("seller_weights", &self.seller_weights, s)?;
        check_weights("buyer_weights", &self.buyer_weights, b)?;
        let nonneg = [
            ("price_per_rate", self.price_per_rate),
            ("horizon_months", self.horizon_months),
            ("penalty", self.penalty),
            ("rate_floor", self.rate_floor),
        ];
        for (key, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(key, "must be nonnegative"));
            }
        }
        let prices = self.lease_price.iter().flatten().chain(&self.license_price);
        if prices.clone().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::config("lease_price", "prices must be nonnegative"));
        }
        if !self.epsilon.is_finite() {
            return Err(Error::config("epsilon", "must be finite"));
        }
        Ok(())
    }

    /// `δ D N_k`: revenue per bps/Hz of expected rate for operator `k`
    /// (sellers first).
    pub fn revenue_per_rate(&self, config: &NetworkConfig, k: usize) -> f64 {
        self.price_per_rate * self.horizon_months * expected_users(config.user_intensity[k], config.radius_m)
    }
}

fn check_weights(key: &str, w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::config(key, format!("expected {n} entries")));
    }
    if w.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::config(key, "weights must be nonnegative"));
    }
    if n > 0 && (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::config(key, "weights must sum to 1"));
    }
    Ok(())
}

/// Expected subscribers `π r² μ` with `r` in meters and `μ` per km².
pub fn expected_users(mu_per_km2: f64, radius_m: f64) -> f64 {
    let r_km = radius_m / 1000.0;
    PI * r_km * r_km * mu_per_km2
}

/// Lease payments of buyer `b`: `Σ_s Σ_{l∈L_s} φ_{s,b} a[l][b]`.
pub fn lease_cost(a: &SharingMatrix, b: usize, econ: &EconParams, config: &NetworkConfig) -> f64 {
    (0..config.num_sellers)
        .flat_map(|s| config.seller_bands(s).map(move |l| (s, l)))
        .map(|(s, l)| econ.lease_price[s][b] * a.get(l, b))
        .sum()
}

/// Lease revenue of seller `s`: `Σ_{l∈L_s} Σ_b φ_{s,b} a[l][b]`.
pub fn lease_revenue(a: &SharingMatrix, s: usize, econ: &EconParams, config: &NetworkConfig) -> f64 {
    config
        .seller_bands(s)
        .map(|l| (0..config.num_buyers).map(|b| econ.lease_price[s][b] * a.get(l, b)).sum::<f64>())
        .sum()
}

pub fn buyer_profit(rate: f64, a: &SharingMatrix, b: usize, econ: &EconParams, config: &NetworkConfig) -> f64 {
    let k = config.num_sellers + b;
    econ.revenue_per_rate(config, k) * rate - lease_cost(a, b, econ, config)
}

pub fn seller_profit(rate: f64, a: &SharingMatrix, s: usize, econ: &EconParams, config: &NetworkConfig) -> f64 {
    let licensed = config.subbands_per_seller[s] as f64;
    econ.revenue_per_rate(config, s) * rate + lease_revenue(a, s, econ, config)
        - econ.license_price[s] * licensed
}

/// `Σ (a − a²)` over all entries; zero exactly when `A` is binary.
pub fn penalty_term(a: &SharingMatrix) -> f64 {
    a.as_slice().iter().map(|&v| v - v * v).sum()
}

/// Profits of every operator, sellers first, from expected rates ordered
/// the same way.
pub fn profits(rates: &[f64], a: &SharingMatrix, econ: &EconParams, config: &NetworkConfig) -> Vec<f64> {
    let s_count = config.num_sellers;
    (0..config.mno_count())
        .map(|k| {
            if k < s_count {
                seller_profit(rates[k], a, k, econ, config)
            } else {
                buyer_profit(rates[k], a, k - s_count, econ, config)
            }
        })
        .collect()
}

pub fn weighted_buyer_profit(rates: &[f64], a: &SharingMatrix, econ: &EconParams, config: &NetworkConfig) -> f64 {
    let s_count = config.num_sellers;
    (0..config.num_buyers)
        .map(|b| econ.buyer_weights[b] * buyer_profit(rates[s_count + b], a, b, econ, config))
        .sum()
}

pub fn weighted_seller_profit(rates: &[f64], a: &SharingMatrix, econ: &EconParams, config: &NetworkConfig) -> f64 {
    (0..config.num_sellers)
        .map(|s| econ.seller_weights[s] * seller_profit(rates[s], a, s, econ, config))
        .sum()
}

/// Weighted buyer profit minus `ϑ Σ (a − a²)`.
pub fn scalarized_objective(rates: &[f64], a: &SharingMatrix, econ: &EconParams, config: &NetworkConfig) -> f64 {
    weighted_buyer_profit(rates, a, econ, config) - econ.penalty * penalty_term(a)
}

/// Stochastic constraint values in `≤ 0` form, in this order: seller profit
/// floor `ε − Σ v_s u_s`; rate floors `r^th − r̄_k` for every operator
/// (sellers first); buyer participation `−u_b`.
pub fn constraint_values(rates: &[f64], a: &SharingMatrix, econ: &EconParams, config: &NetworkConfig) -> Vec<f64> {
    let s_count = config.num_sellers;
    let mut out = Vec::with_capacity(1 + config.mno_count() + config.num_buyers);
    out.push(econ.epsilon - weighted_seller_profit(rates, a, econ, config));
    out.extend(rates.iter().map(|r| econ.rate_floor - r));
    out.extend((0..config.num_buyers).map(|b| -buyer_profit(rates[s_count + b], a, b, econ, config)));
    out
}

/// `ε = φ U^max` for a trade-off `φ ∈ [0, 1]`.
pub fn epsilon_from_phi(phi: f64, umax: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::invalid(format!("phi must lie in [0, 1], got {phi}")));
    }
    Ok(phi * umax)
}

/// Monte Carlo estimates of a policy's outcomes on common seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyEstimate {
    /// Expected rates, sellers first.
    pub rates: Vec<McEstimate>,
    /// Profits, sellers first.
    pub profits: Vec<McEstimate>,
    /// Stochastic constraints in the order of [`constraint_values`]; the
    /// seller floor and participation terms in money, rate floors in bps/Hz.
    pub constraints: Vec<McEstimate>,
    pub weighted_buyer_profit: McEstimate,
    pub weighted_seller_profit: McEstimate,
    /// Sum of all operators' profits.
    pub total_profit: McEstimate,
}

impl PolicyEstimate {
    /// True when no constraint mean exceeds zero by more than `z` standard
    /// errors.
    pub fn feasible_within(&self, z: f64) -> bool {
        self.constraints.iter().all(|c| c.mean <= z * c.stderr)
    }
}

/// Evaluates the policy `(a, p)` on `n_samples` realizations drawn from
/// `seed`; every profit and constraint is averaged per realization so that
/// the standard errors account for correlations between operators.
pub fn estimate_policy(
    a: &SharingMatrix,
    p: &SellerPowerVector,
    config: &NetworkConfig,
    econ: &EconParams,
    n_samples: usize,
    seed: u64,
) -> Result<PolicyEstimate> {
    econ.validate(config)?;
    let samples = mc_rate_samples(a, p, config, n_samples, seed)?;
    let column = |f: &dyn Fn(&[f64]) -> f64| -> McEstimate {
        let v: Vec<f64> = samples.iter().map(|r| f(r)).collect();
        McEstimate::from_samples(&v)
    };
    let mnos = config.mno_count();
    let rates = (0..mnos).map(|k| column(&|r| r[k])).collect();
    let per_mno = (0..mnos).map(|k| column(&|r| profits(r, a, econ, config)[k])).collect();
    let nc = 1 + mnos + config.num_buyers;
    let constraints = (0..nc).map(|i| column(&|r| constraint_values(r, a, econ, config)[i])).collect();
    Ok(PolicyEstimate {
        rates,
        profits: per_mno,
        constraints,
        weighted_buyer_profit: column(&|r| weighted_buyer_profit(r, a, econ, config)),
        weighted_seller_profit: column(&|r| weighted_seller_profit(r, a, econ, config)),
        total_profit: column(&|r| profits(r, a, econ, config).iter().sum()),
    })
}

/// Largest attainable weighted seller profit found by the optimizer run on
/// the seller objective, evaluated on fresh realizations after rounding the
/// sharing matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UmaxEstimate {
    pub value: f64,
    pub stderr: f64,
    pub sharing: SharingMatrix,
    pub power: SellerPowerVector,
}

pub fn compute_umax(
    config: &NetworkConfig,
    econ: &EconParams,
    settings: &CsscaSettings,
    validation_samples: usize,
    seed: u64,
) -> Result<UmaxEstimate> {
    let settings = CsscaSettings { sense: Sense::SellerProfit, ..settings.clone() };
    let run = cssca::run(config, econ, &settings, seed)?;
    let (sharing, power, report) =
        cssca::binarize(&run.sharing, &run.power, config, econ, validation_samples, sub_seed(seed, stream::VALIDATION, 0))?;
    // The seller floor is not part of this problem.
    let violated: Vec<&str> = report.constraints[1..].iter().filter(|c| c.violated).map(|c| c.name.as_str()).collect();
    if !violated.is_empty() {
        return Err(Error::Infeasible(format!("seller-profit maximization ends infeasible: {}", violated.join(", "))));
    }
    let u = report.estimate.weighted_seller_profit;
    Ok(UmaxEstimate { value: u.mean, stderr: u.stderr, sharing, power })
}
