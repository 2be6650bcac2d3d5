use std::f64::consts::LN_2;

use super::sample::LinkGains;
use super::{NetworkSample, SellerPowerVector, SharingMatrix};
use crate::error::{Error, Result};
use crate::geometry::Mno;

/// Derivatives of one operator's instantaneous rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateGradient {
    pub rows: usize,
    pub cols: usize,
    /// `∂r/∂a[l][b]`, row-major `L × B`.
    pub sharing: Vec<f64>,
    /// `∂r/∂p_l` per sub-band, per watt.
    pub power: Vec<f64>,
}

impl RateGradient {
    fn zeros(rows: usize, cols: usize) -> Self {
        RateGradient { rows, cols, sharing: vec![0.0; rows * cols], power: vec![0.0; rows] }
    }

    pub fn sharing_at(&self, l: usize, b: usize) -> f64 {
        self.sharing[l * self.cols + b]
    }
}

/// Rates and gradients of every operator for one realization.
#[derive(Debug, Clone)]
pub struct SampleEvaluation {
    pub seller_rates: Vec<f64>,
    pub buyer_rates: Vec<f64>,
    /// Empty unless gradients were requested.
    pub seller_gradients: Vec<RateGradient>,
    pub buyer_gradients: Vec<RateGradient>,
}

impl SampleEvaluation {
    pub fn rate(&self, mno: Mno) -> f64 {
        match mno {
            Mno::Seller(s) => self.seller_rates[s],
            Mno::Buyer(b) => self.buyer_rates[b],
        }
    }

    pub fn gradient(&self, mno: Mno) -> &RateGradient {
        match mno {
            Mno::Seller(s) => &self.seller_gradients[s],
            Mno::Buyer(b) => &self.buyer_gradients[b],
        }
    }
}

fn check_dims(xi: &NetworkSample, a: &SharingMatrix, p: &SellerPowerVector) -> Result<()> {
    let g = &xi.gains;
    if a.rows() != g.bands || a.cols() != g.num_buyers || p.len() != g.bands {
        return Err(Error::invalid(format!(
            "decision shape ({}x{}, {}) does not match sample ({}x{})",
            a.rows(),
            a.cols(),
            p.len(),
            g.bands,
            g.num_buyers
        )));
    }
    Ok(())
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Interference-plus-noise at the seller's typical user on sub-band `l`.
fn seller_denominator(g: &LinkGains, l: usize, a_row: &[f64], p: f64) -> f64 {
    let buyers: f64 = a_row
        .iter()
        .enumerate()
        .map(|(b, &a)| a * g.buyer_total[b * g.bands + l])
        .sum();
    p * g.seller_other[l] + buyers + g.noise
}

/// Interference-plus-noise at buyer `b`'s typical user on sub-band `l`.
fn buyer_denominator(g: &LinkGains, l: usize, b: usize, a_row: &[f64], p: f64) -> f64 {
    let own = a_row[b] * (g.buyer_total[b * g.bands + l] - g.buyer_signal[b * g.bands + l]);
    let seller = p * (g.seller_signal[l] + g.seller_other[l]);
    let others: f64 = a_row
        .iter()
        .enumerate()
        .filter(|&(bp, _)| bp != b)
        .map(|(bp, &a)| a * g.buyer_total[bp * g.bands + l])
        .sum();
    own + seller + others + g.noise
}

pub fn sinr_seller(
    xi: &NetworkSample,
    a: &SharingMatrix,
    p: &SellerPowerVector,
    s: usize,
    l: usize,
) -> Result<f64> {
    check_dims(xi, a, p)?;
    let g = &xi.gains;
    if l >= g.bands || g.owners[l] != s {
        return Err(Error::invalid(format!("sub-band {l} is not owned by seller {s}")));
    }
    let den = seller_denominator(g, l, a.row(l), p[l]);
    Ok(ratio(p[l] * g.seller_signal[l], den))
}

pub fn sinr_buyer(
    xi: &NetworkSample,
    a: &SharingMatrix,
    p: &SellerPowerVector,
    b: usize,
    l: usize,
) -> Result<f64> {
    check_dims(xi, a, p)?;
    let g = &xi.gains;
    if l >= g.bands || b >= g.num_buyers {
        return Err(Error::invalid(format!("invalid buyer {b} or sub-band {l}")));
    }
    let den = buyer_denominator(g, l, b, a.row(l), p[l]);
    Ok(ratio(g.buyer_signal[b * g.bands + l], den))
}

/// Instantaneous rate (bps/Hz) of the typical user of `mno`:
/// `Σ_{l∈L_s} log₂(1+γ_{s,l})` for sellers and
/// `Σ_l a[l][b] log₂(1+γ_{b,l})` for buyers.
pub fn instantaneous_rate(
    xi: &NetworkSample,
    a: &SharingMatrix,
    p: &SellerPowerVector,
    mno: Mno,
) -> Result<f64> {
    check_mno(xi, mno)?;
    Ok(evaluate_sample(xi, a, p, false)?.rate(mno))
}

pub fn rate_gradients(
    xi: &NetworkSample,
    a: &SharingMatrix,
    p: &SellerPowerVector,
    mno: Mno,
) -> Result<RateGradient> {
    check_mno(xi, mno)?;
    let eval = evaluate_sample(xi, a, p, true)?;
    Ok(eval.gradient(mno).clone())
}

fn check_mno(xi: &NetworkSample, mno: Mno) -> Result<()> {
    let ok = match mno {
        Mno::Seller(s) => s < xi.num_sellers(),
        Mno::Buyer(b) => b < xi.num_buyers(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!("unknown operator {mno:?}")))
    }
}

/// Evaluates every operator's rate, and optionally its gradient, on one
/// realization.
pub fn evaluate_sample(
    xi: &NetworkSample,
    a: &SharingMatrix,
    p: &SellerPowerVector,
    with_gradients: bool,
) -> Result<SampleEvaluation> {
    check_dims(xi, a, p)?;
    let g = &xi.gains;
    let (nl, nb, ns) = (g.bands, g.num_buyers, g.num_sellers);
    let mut seller_rates = vec![0.0; ns];
    let mut buyer_rates = vec![0.0; nb];
    let (mut seller_gradients, mut buyer_gradients) = if with_gradients {
        (vec![RateGradient::zeros(nl, nb); ns], vec![RateGradient::zeros(nl, nb); nb])
    } else {
        (Vec::new(), Vec::new())
    };

    for l in 0..nl {
        let s = g.owners[l];
        let a_row = a.row(l);
        let pl = p[l];

        // Seller: γ = p S / D with D = p G + Σ_b a_b J_b + σ².
        let sig = g.seller_signal[l];
        let den = seller_denominator(g, l, a_row, pl);
        let gamma = ratio(pl * sig, den);
        seller_rates[s] += gamma.ln_1p() / LN_2;
        if with_gradients {
            let grad = &mut seller_gradients[s];
            // d log₂(1 + pS/D) = [S (D - pG)] / [D (D + pS)] dp / ln 2
            let joint = den * (den + pl * sig);
            grad.power[l] += sig * (den - pl * g.seller_other[l]) / joint / LN_2;
            for b in 0..nb {
                grad.sharing[l * nb + b] += -pl * sig * g.buyer_total[b * nl + l] / joint / LN_2;
            }
        }

        // Buyers: γ = Q / E, rate a_b log₂(1 + γ).
        let w = g.seller_signal[l] + g.seller_other[l];
        for b in 0..nb {
            let q = g.buyer_signal[b * nl + l];
            let e = buyer_denominator(g, l, b, a_row, pl);
            let gamma = ratio(q, e);
            let log_term = gamma.ln_1p() / LN_2;
            buyer_rates[b] += a_row[b] * log_term;
            if with_gradients {
                // ∂ log₂(1 + Q/E) / ∂E = -Q / [E (E + Q) ln 2]
                let d_log_d_e = -q / (e * (e + q)) / LN_2;
                let scale = a_row[b] * d_log_d_e;
                let grad = &mut buyer_gradients[b];
                grad.power[l] += scale * w;
                for bp in 0..nb {
                    let coeff = if bp == b {
                        g.buyer_total[b * nl + l] - q
                    } else {
                        g.buyer_total[bp * nl + l]
                    };
                    grad.sharing[l * nb + bp] += scale * coeff;
                }
                grad.sharing[l * nb + b] += log_term;
            }
        }
    }

    Ok(SampleEvaluation { seller_rates, buyer_rates, seller_gradients, buyer_gradients })
}
