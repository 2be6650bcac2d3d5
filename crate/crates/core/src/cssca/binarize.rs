use crate::channel::{SellerPowerVector, SharingMatrix};
use crate::economics::{estimate_policy, EconParams, PolicyEstimate};
use crate::error::{Error, Result};
use crate::geometry::NetworkConfig;

/// Monte Carlo estimate of one stochastic constraint (`≤ 0` is satisfied).
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintEstimate {
    pub name: String,
    pub mean: f64,
    pub stderr: f64,
    /// Mean above zero by more than three standard errors.
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarizeReport {
    /// Entries set to zero to restore the caps after rounding, as `(l, b)`.
    pub zeroed: Vec<(usize, usize)>,
    /// Cap residuals of the binary matrix; all nonpositive.
    pub cap_residuals: Vec<f64>,
    pub constraints: Vec<ConstraintEstimate>,
    pub estimate: PolicyEstimate,
}

impl BinarizeReport {
    pub fn any_violation(&self) -> bool {
        self.constraints.iter().any(|c| c.violated)
    }
}

fn constraint_names(config: &NetworkConfig) -> Vec<String> {
    let mut names = vec!["seller_profit_floor".to_string()];
    names.extend((0..config.num_sellers).map(|s| format!("rate_floor_seller_{s}")));
    names.extend((0..config.num_buyers).map(|b| format!("rate_floor_buyer_{b}")));
    names.extend((0..config.num_buyers).map(|b| format!("participation_buyer_{b}")));
    names
}

/// Index groups of the borrow and lease caps with their limits.
fn cap_groups(config: &NetworkConfig) -> Vec<(Vec<(usize, usize)>, f64)> {
    let nb = config.num_buyers;
    let mut groups = Vec::new();
    for s in 0..config.num_sellers {
        for b in 0..nb {
            groups.push((config.seller_bands(s).map(|l| (l, b)).collect(), config.borrow_cap[s] as f64));
        }
        for l in config.seller_bands(s) {
            groups.push(((0..nb).map(|b| (l, b)).collect(), config.lease_cap[s] as f64));
        }
    }
    groups
}

/// Rounds every sharing entry to 0 or 1. Where a cap is exceeded after
/// rounding, the rounded-up entries with the smallest original values are
/// zeroed until it holds.
pub fn round_sharing(a: &SharingMatrix, config: &NetworkConfig) -> Result<(SharingMatrix, Vec<(usize, usize)>)> {
    if a.rows() != config.total_subbands() || a.cols() != config.num_buyers {
        return Err(Error::invalid("sharing matrix shape does not match the configuration"));
    }
    if a.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::invalid("sharing entries must lie in [0, 1]"));
    }
    let mut out = a.clone();
    for l in 0..a.rows() {
        for b in 0..a.cols() {
            out.set(l, b, if a.get(l, b) >= 0.5 { 1.0 } else { 0.0 });
        }
    }
    let mut zeroed = Vec::new();
    for (group, cap) in cap_groups(config) {
        let mut on: Vec<(usize, usize)> = group.into_iter().filter(|&(l, b)| out.get(l, b) == 1.0).collect();
        on.sort_by(|x, y| a.get(x.0, x.1).total_cmp(&a.get(y.0, y.1)));
        let excess = on.len().saturating_sub(cap as usize);
        for &(l, b) in on.iter().take(excess) {
            out.set(l, b, 0.0);
            zeroed.push((l, b));
        }
    }
    Ok((out, zeroed))
}

/// Rounds the sharing matrix and checks the stochastic constraints of the
/// binary policy on `validation_samples` realizations drawn from `seed`.
pub fn binarize(
    a: &SharingMatrix,
    p: &SellerPowerVector,
    config: &NetworkConfig,
    econ: &EconParams,
    validation_samples: usize,
    seed: u64,
) -> Result<(SharingMatrix, SellerPowerVector, BinarizeReport)> {
    let (binary, zeroed) = round_sharing(a, config)?;
    let estimate = estimate_policy(&binary, p, config, econ, validation_samples, seed)?;
    let constraints = constraint_names(config)
        .into_iter()
        .zip(&estimate.constraints)
        .map(|(name, c)| ConstraintEstimate {
            name,
            mean: c.mean,
            stderr: c.stderr,
            violated: c.mean > 3.0 * c.stderr,
        })
        .collect();
    let report = BinarizeReport { zeroed, cap_residuals: binary.cap_residuals(config), constraints, estimate };
    Ok((binary, p.clone(), report))
}
