//! Expected per-user rates from the stochastic-geometry model, evaluated by
//! nested adaptive quadrature, plus the Monte Carlo estimator used to check
//! them.
//!
//! For a typical user on one sub-band the rate is `∫₀^∞ P(SINR > 2^t − 1) dt`
//! and, with `T = 2^t − 1`,
//!
//! ```text
//! P(SINR > T) = ∫₀^∞ π λ' exp(−T σ² z^(α/2)
//!                  − π z [λ' (1 + T^(2/α) ρ(α,T)) + Λ T^(2/α) ρ(α,∞)]) dz
//! ```
//!
//! where `λ'` is the serving network's intensity weighted by `E[p^(2/α)]`
//! and `Λ` the same weighted intensity summed over every other network active
//! on the sub-band, each scaled by its sharing variable.

use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::channel::{evaluate_sample, SellerPowerVector, SharingMatrix};
use crate::error::{Error, Result};
use crate::geometry::{sample_network_covered, BuyerPowerScheme, Mno, NetworkConfig};
use crate::quadrature::{integrate, QuadSettings};
use crate::rng::{stream, sub_seed};
use crate::units::per_km2_to_per_m2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateQuadratureSettings {
    pub rel_tol: f64,
    /// Initial truncation of the outer integral, bps/Hz. Doubled until the
    /// estimated tail falls below `rel_tol` of the value.
    pub t_max: f64,
    /// Truncation of the inner integral in units of its exponential scale.
    pub z_max: f64,
}

impl Default for RateQuadratureSettings {
    fn default() -> Self {
        RateQuadratureSettings { rel_tol: 1e-6, t_max: 40.0, z_max: 50.0 }
    }
}

impl RateQuadratureSettings {
    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.t_max > 0.0 && self.z_max > 0.0) {
            return Err(Error::invalid("quadrature settings must be positive"));
        }
        Ok(())
    }
}

/// Largest `t` for which `2^t − 1` stays finite with margin.
const T_CEILING: f64 = 1000.0;

/// `ρ(α, ∞) = Γ(1 + 2/α) Γ(1 − 2/α)`.
pub fn rho_infinity(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha == 4.0 {
        return Ok(FRAC_PI_2);
    }
    Ok(gamma(1.0 + 2.0 / alpha) * gamma(1.0 - 2.0 / alpha))
}

/// `ρ(α, T) = ∫_{T^(−2/α)}^∞ dν / (1 + ν^(α/2))`; `T` may be infinite.
pub fn rho(alpha: f64, threshold: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(threshold > 0.0) {
        return Err(Error::invalid(format!("threshold must be positive, got {threshold}")));
    }
    let lower = threshold.powf(-2.0 / alpha);
    if alpha == 4.0 {
        return Ok(FRAC_PI_2 - lower.atan());
    }
    rho_quadrature(alpha, lower)
}

fn rho_quadrature(alpha: f64, lower: f64) -> Result<f64> {
    let beta = alpha / 2.0;
    let settings = QuadSettings { abs_tol: 0.0, rel_tol: 1e-12, max_intervals: 500 };
    // Beyond ν = 1 substitute u = ν^(1−β), which maps the algebraic tail
    // onto a smooth integrand on (0, 1].
    let tail_power = beta / (beta - 1.0);
    let tail = |u_hi: f64| -> Result<f64> {
        let r = integrate(|u| 1.0 / (1.0 + u.powf(tail_power)), 0.0, u_hi, settings)?;
        Ok(r.value / (beta - 1.0))
    };
    if lower >= 1.0 {
        tail(lower.powf(1.0 - beta))
    } else {
        let head = integrate(|v| 1.0 / (1.0 + v.powf(beta)), lower, 1.0, settings)?.value;
        Ok(head + tail(1.0)?)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 2.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("pathloss exponent must exceed 2, got {alpha}")));
    }
    Ok(())
}

/// `E[p^(2/α)]` for interference-controlled buyer powers:
/// `ζ^(2/α) / (π μ Γ(1 + 2/α))`, with `μ` per km² converted to per m².
pub fn k_moment(zeta_w: f64, mu_per_km2: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(mu_per_km2 > 0.0) {
        return Err(Error::invalid(format!("user intensity must be positive, got {mu_per_km2}")));
    }
    if !(zeta_w > 0.0) {
        return Err(Error::invalid(format!("interference threshold must be positive, got {zeta_w}")));
    }
    let e = 2.0 / alpha;
    Ok(zeta_w.powf(e) / (PI * per_km2_to_per_m2(mu_per_km2) * gamma(1.0 + e)))
}

/// `E[p^(2/α)]` of buyer powers on sub-bands of seller `s` under the
/// configured power scheme.
pub fn buyer_power_moment(config: &NetworkConfig, s: usize) -> Result<f64> {
    let e = 2.0 / config.pathloss_alpha;
    match config.buyer_power {
        BuyerPowerScheme::InterferenceControlled => k_moment(
            config.interference_threshold_w[s],
            config.seller_user_intensity(s),
            config.pathloss_alpha,
        ),
        BuyerPowerScheme::UniformRandom { max_w } => Ok(max_w.powf(e) / (1.0 + e)),
        BuyerPowerScheme::Fixed { power_w } => Ok(power_w.powf(e)),
    }
}

/// Rate of a typical user whose network has weighted intensity `serving`
/// while networks of total weighted intensity `cross` reuse the sub-band.
fn band_rate(serving: f64, cross: f64, noise: f64, alpha: f64, settings: &RateQuadratureSettings) -> Result<f64> {
    if serving <= 0.0 {
        return Ok(0.0);
    }
    let rho_inf = rho_infinity(alpha)?;
    let e = 2.0 / alpha;
    let inner_settings = QuadSettings { abs_tol: 0.0, rel_tol: 0.05 * settings.rel_tol, max_intervals: 400 };

    let coverage = |t: f64| -> Result<f64> {
        let thr = (t * LN_2).exp_m1();
        if thr <= 0.0 {
            return Ok(1.0);
        }
        let te = thr.powf(e);
        let c3 = PI * (serving * (1.0 + te * rho(alpha, thr)?) + cross * te * rho_inf);
        let lead = PI * serving / c3;
        let c2 = thr * noise;
        if c2 == 0.0 {
            return Ok(lead);
        }
        // z = w / c3 makes the interference term e^(−w); the noise term
        // reaches e^(−1) at w = c3 c2^(−2/α).
        let noise_scale = c3 * c2.powf(-e);
        let upper = settings.z_max.min(40.0 * noise_scale);
        let half = alpha / 2.0;
        let r = integrate(|w| (-w - c2 * (w / c3).powf(half)).exp(), 0.0, upper, inner_settings)?;
        Ok(lead * r.value)
    };

    let outer_settings = QuadSettings { abs_tol: 0.0, rel_tol: 0.5 * settings.rel_tol, max_intervals: 400 };
    let failure = RefCell::new(None);
    let integrand = |t: f64| match coverage(t) {
        Ok(v) => v,
        Err(err) => {
            failure.borrow_mut().get_or_insert(err);
            f64::NAN
        }
    };

    let mut lo = 0.0;
    let mut hi = settings.t_max.min(T_CEILING);
    let mut total = 0.0;
    loop {
        let piece = integrate(integrand, lo, hi, outer_settings);
        if let Some(err) = failure.borrow_mut().take() {
            return Err(err);
        }
        total += piece?.value;
        // Coverage decays at least like 2^(−2t/α) in t.
        let tail = integrand(hi) / (e * LN_2);
        if tail <= 0.5 * settings.rel_tol * total {
            return Ok(total);
        }
        if hi >= T_CEILING {
            return Err(Error::NumericalFailure(format!(
                "rate integral tail {tail:e} still above tolerance at t = {hi} (value {total:e})"
            )));
        }
        lo = hi;
        hi = (2.0 * hi).min(T_CEILING);
    }
}

fn check_decision(a: &SharingMatrix, p: &SellerPowerVector, config: &NetworkConfig) -> Result<()> {
    config.validate()?;
    let l = config.total_subbands();
    if a.rows() != l || a.cols() != config.num_buyers {
        return Err(Error::invalid("sharing matrix shape does not match the configuration"));
    }
    p.validate(config)
}

/// Expected rate (bps/Hz) of the typical user of buyer `b`.
pub fn expected_rate_buyer(
    a: &SharingMatrix,
    p: &SellerPowerVector,
    config: &NetworkConfig,
    b: usize,
    settings: &RateQuadratureSettings,
) -> Result<f64> {
    check_decision(a, p, config)?;
    settings.validate()?;
    if b >= config.num_buyers {
        return Err(Error::invalid(format!("unknown buyer {b}")));
    }
    let e = 2.0 / config.pathloss_alpha;
    let owners = config.band_owners();
    let mut rate = 0.0;
    for (l, &s) in owners.iter().enumerate() {
        let share = a.get(l, b);
        if share == 0.0 {
            continue;
        }
        let k = buyer_power_moment(config, s)?;
        let lambda = |bb: usize| per_km2_to_per_m2(config.buyer_bs_intensity(bb));
        let serving = lambda(b) * k;
        let mut cross = per_km2_to_per_m2(config.seller_bs_intensity(s)) * p[l].powf(e);
        for other in (0..config.num_buyers).filter(|&o| o != b) {
            cross += a.get(l, other) * lambda(other) * k;
        }
        rate += share * band_rate(serving, cross, config.noise_power_w, config.pathloss_alpha, settings)?;
    }
    Ok(rate)
}

/// Expected rate (bps/Hz) of the typical user of seller `s`.
pub fn expected_rate_seller(
    a: &SharingMatrix,
    p: &SellerPowerVector,
    config: &NetworkConfig,
    s: usize,
    settings: &RateQuadratureSettings,
) -> Result<f64> {
    check_decision(a, p, config)?;
    settings.validate()?;
    if s >= config.num_sellers {
        return Err(Error::invalid(format!("unknown seller {s}")));
    }
    let e = 2.0 / config.pathloss_alpha;
    let k = buyer_power_moment(config, s)?;
    let mut rate = 0.0;
    for l in config.seller_bands(s) {
        let serving = per_km2_to_per_m2(config.seller_bs_intensity(s)) * p[l].powf(e);
        let cross: f64 = (0..config.num_buyers)
            .map(|b| a.get(l, b) * per_km2_to_per_m2(config.buyer_bs_intensity(b)) * k)
            .sum();
        rate += band_rate(serving, cross, config.noise_power_w, config.pathloss_alpha, settings)?;
    }
    Ok(rate)
}

pub fn expected_rate(
    a: &SharingMatrix,
    p: &SellerPowerVector,
    config: &NetworkConfig,
    mno: Mno,
    settings: &RateQuadratureSettings,
) -> Result<f64> {
    match mno {
        Mno::Seller(s) => expected_rate_seller(a, p, config, s, settings),
        Mno::Buyer(b) => expected_rate_buyer(a, p, config, b, settings),
    }
}

/// Sample mean and standard error of a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Zero when only one sample was drawn.
    pub stderr: f64,
    pub n: usize,
}

impl McEstimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return McEstimate { mean: f64::NAN, stderr: f64::NAN, n };
        }
        let mean = pairwise_sum(values) / n as f64;
        if n == 1 {
            return McEstimate { mean, stderr: 0.0, n };
        }
        let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = pairwise_sum(&sq) / (n - 1) as f64;
        McEstimate { mean, stderr: (var / n as f64).sqrt(), n }
    }
}

/// Summation whose rounding depends only on the order of `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let (l, r) = values.split_at(values.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

/// Monte Carlo estimates of every operator's expected rate, sellers first.
///
/// Realization `i` uses seed `sub_seed(master_seed, MONTE_CARLO, i)`, so the
/// result does not depend on the number of worker threads.
pub fn mc_expected_rates(
    a: &SharingMatrix,
    p: &SellerPowerVector,
    config: &NetworkConfig,
    n_samples: usize,
    master_seed: u64,
) -> Result<Vec<McEstimate>> {
    let per_sample = mc_rate_samples(a, p, config, n_samples, master_seed)?;
    let mnos = config.mno_count();
    Ok((0..mnos)
        .map(|k| {
            let column: Vec<f64> = per_sample.iter().map(|r| r[k]).collect();
            McEstimate::from_samples(&column)
        })
        .collect())
}

/// Per-realization rates of every operator, sellers first, on the same
/// seeds as [`mc_expected_rates`].
pub fn mc_rate_samples(
    a: &SharingMatrix,
    p: &SellerPowerVector,
    config: &NetworkConfig,
    n_samples: usize,
    master_seed: u64,
) -> Result<Vec<Vec<f64>>> {
    check_decision(a, p, config)?;
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be at least 1"));
    }
    (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let xi = sample_network_covered(config, sub_seed(master_seed, stream::MONTE_CARLO, i))?;
            let eval = evaluate_sample(&xi, a, p, false)?;
            Ok(eval.seller_rates.into_iter().chain(eval.buyer_rates).collect())
        })
        .collect()
}

pub fn mc_expected_rate(
    a: &SharingMatrix,
    p: &SellerPowerVector,
    config: &NetworkConfig,
    mno: Mno,
    n_samples: usize,
    master_seed: u64,
) -> Result<McEstimate> {
    let all = mc_expected_rates(a, p, config, n_samples, master_seed)?;
    Ok(all[config.mno_index(mno)])
}
