//! Distribution of the largest interference gain `H` between a buyer base
//! station and the users of a seller network, and of the resulting buyer
//! transmit power `p = ζ / H`.
//!
//! With seller users forming a PPP of intensity `μ` and unit-mean
//! exponential fading, `P(H ≤ z) = exp(-π μ Γ(1+2/α) z^(-2/α))`.
//! Intensities are given per km²; gains are per m^α.

use rand::Rng;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::units::per_km2_to_per_m2;

/// `π μ Γ(1 + 2/α)` with `μ` converted to per m².
fn scale(mu_per_km2: f64, alpha: f64) -> f64 {
    std::f64::consts::PI * per_km2_to_per_m2(mu_per_km2) * gamma(1.0 + 2.0 / alpha)
}

fn check(z: f64, mu: f64) -> Result<()> {
    if !(z > 0.0) {
        return Err(Error::invalid(format!("argument must be positive, got {z}")));
    }
    if !(mu > 0.0) {
        return Err(Error::invalid(format!("user intensity must be positive, got {mu}")));
    }
    Ok(())
}

pub fn h_cdf(z: f64, mu_per_km2: f64, alpha: f64) -> Result<f64> {
    check(z, mu_per_km2)?;
    Ok((-scale(mu_per_km2, alpha) * z.powf(-2.0 / alpha)).exp())
}

pub fn h_pdf(z: f64, mu_per_km2: f64, alpha: f64) -> Result<f64> {
    check(z, mu_per_km2)?;
    let c = scale(mu_per_km2, alpha);
    let e = 2.0 / alpha;
    Ok(c * e * z.powf(-1.0 - e) * (-c * z.powf(-e)).exp())
}

/// Inverse of [`h_cdf`]: `(π μ Γ(1+2/α) / ln(1/u))^(α/2)`.
pub fn h_quantile(u: f64, mu_per_km2: f64, alpha: f64) -> f64 {
    (scale(mu_per_km2, alpha) / (-u.ln())).powf(alpha / 2.0)
}

pub fn sample_interference_gain<R: Rng + ?Sized>(mu_per_km2: f64, alpha: f64, rng: &mut R) -> f64 {
    // u in (0, 1): both endpoints map to degenerate gains.
    let u = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    h_quantile(u, mu_per_km2, alpha)
}

/// Draws a buyer base-station power `ζ_s / H`.
pub fn sample_buyer_power<R: Rng + ?Sized>(
    zeta_w: f64,
    mu_per_km2: f64,
    alpha: f64,
    rng: &mut R,
) -> f64 {
    zeta_w / sample_interference_gain(mu_per_km2, alpha, rng)
}

pub fn p_cdf(z: f64, zeta_w: f64, mu_per_km2: f64, alpha: f64) -> Result<f64> {
    check(z, mu_per_km2)?;
    let e = 2.0 / alpha;
    Ok(1.0 - (-scale(mu_per_km2, alpha) * (z / zeta_w).powf(e)).exp())
}

pub fn p_pdf(z: f64, zeta_w: f64, mu_per_km2: f64, alpha: f64) -> Result<f64> {
    check(z, mu_per_km2)?;
    let c = scale(mu_per_km2, alpha);
    let e = 2.0 / alpha;
    Ok(c * e * z.powf(e - 1.0) / zeta_w.powf(e) * (-c * (z / zeta_w).powf(e)).exp())
}
