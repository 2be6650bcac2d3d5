//! Per-sample objective and constraint functions on the normalized decision
//! vector.

use std::f64::consts::LN_10;

use serde::{Deserialize, Serialize};

use super::CsscaSettings;
use crate::channel::{evaluate_sample, NetworkSample, SellerPowerVector, SharingMatrix};
use crate::economics::{penalty_term, EconParams};
use crate::error::{Error, Result};
use crate::geometry::NetworkConfig;

/// Mapping between a power coordinate `y ∈ [0, 1]` and watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PowerMap {
    /// `p = P^max y`.
    Linear,
    /// `p = P^max 10^(decades (y − 1))`; `y = 0` is the smallest power.
    Logarithmic { decades: f64 },
}

impl Default for PowerMap {
    fn default() -> Self {
        PowerMap::Logarithmic { decades: 8.0 }
    }
}

impl PowerMap {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PowerMap::Linear => Ok(()),
            PowerMap::Logarithmic { decades } if decades > 0.0 && decades.is_finite() => Ok(()),
            PowerMap::Logarithmic { .. } => Err(Error::config("power_map.decades", "must be positive")),
        }
    }

    pub fn to_watts(&self, y: f64, max_w: f64) -> f64 {
        match *self {
            PowerMap::Linear => max_w * y,
            PowerMap::Logarithmic { decades } => max_w * 10f64.powf(decades * (y - 1.0)),
        }
    }

    pub fn from_watts(&self, p: f64, max_w: f64) -> f64 {
        match *self {
            PowerMap::Linear => p / max_w,
            PowerMap::Logarithmic { decades } => {
                if p <= 0.0 {
                    0.0
                } else {
                    (1.0 + (p / max_w).log10() / decades).clamp(0.0, 1.0)
                }
            }
        }
    }

    /// `dp/dy` at `y`.
    pub fn derivative(&self, y: f64, max_w: f64) -> f64 {
        match *self {
            PowerMap::Linear => max_w,
            PowerMap::Logarithmic { decades } => self.to_watts(y, max_w) * LN_10 * decades,
        }
    }
}

/// Which profit the loop maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    /// Weighted buyer profit subject to the seller-profit floor, rate floors
    /// and buyer participation.
    #[default]
    BuyerProfit,
    /// Weighted seller profit subject to rate floors and buyer
    /// participation; used to find the largest attainable seller profit.
    SellerProfit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Constraint {
    SellerFloor,
    RateFloor(usize),
    Participation(usize),
}

pub(crate) struct Problem<'a> {
    pub config: &'a NetworkConfig,
    pub econ: &'a EconParams,
    pub settings: &'a CsscaSettings,
    /// Money unit: `δ D` times the mean subscriber count.
    pub money: f64,
    revenue: Vec<f64>,
    constraints: Vec<Constraint>,
}

impl<'a> Problem<'a> {
    pub fn new(config: &'a NetworkConfig, econ: &'a EconParams, settings: &'a CsscaSettings) -> Result<Self> {
        config.validate()?;
        econ.validate(config)?;
        settings.validate()?;
        let revenue: Vec<f64> = (0..config.mno_count()).map(|k| econ.revenue_per_rate(config, k)).collect();
        let mean = revenue.iter().sum::<f64>() / revenue.len() as f64;
        let money = if mean > 0.0 { mean } else { 1.0 };
        let mut constraints = Vec::new();
        if settings.sense == Sense::BuyerProfit {
            constraints.push(Constraint::SellerFloor);
        }
        constraints.extend((0..config.mno_count()).map(Constraint::RateFloor));
        constraints.extend((0..config.num_buyers).map(Constraint::Participation));
        Ok(Problem { config, econ, settings, money, revenue, constraints })
    }

    pub fn sharing_len(&self) -> usize {
        self.config.total_subbands() * self.config.num_buyers
    }

    pub fn dim(&self) -> usize {
        self.sharing_len() + self.config.total_subbands()
    }

    pub fn function_count(&self) -> usize {
        1 + self.constraints.len()
    }

    pub fn encode(&self, a: &SharingMatrix, p: &SellerPowerVector) -> Vec<f64> {
        let max_w = self.config.max_seller_power_w;
        let mut x = a.as_slice().to_vec();
        x.extend(p.0.iter().map(|&w| self.settings.power_map.from_watts(w, max_w)));
        x
    }

    pub fn decode(&self, x: &[f64]) -> (SharingMatrix, SellerPowerVector) {
        let nl = self.config.total_subbands();
        let nb = self.config.num_buyers;
        let n = self.sharing_len();
        let max_w = self.config.max_seller_power_w;
        let a = SharingMatrix::from_vec(nl, nb, x[..n].to_vec()).expect("shape fixed by construction");
        let p = x[n..].iter().map(|&y| self.settings.power_map.to_watts(y, max_w)).collect();
        (a, SellerPowerVector(p))
    }

    /// Gradient of `u_k` with respect to the decision vector from the rate
    /// gradient of operator `k`.
    fn profit_gradient(&self, k: usize, rate_grad: &crate::channel::RateGradient, x: &[f64], out: &mut [f64]) {
        let config = self.config;
        let nb = config.num_buyers;
        let n = self.sharing_len();
        let owners = config.band_owners();
        let r = self.revenue[k];
        for l in 0..config.total_subbands() {
            for b in 0..nb {
                let mut g = r * rate_grad.sharing_at(l, b);
                let price = self.econ.lease_price[owners[l]][b];
                if k < config.num_sellers {
                    if owners[l] == k {
                        g += price;
                    }
                } else if b == k - config.num_sellers {
                    g -= price;
                }
                out[l * nb + b] = g;
            }
            let dp = self.settings.power_map.derivative(x[n + l], config.max_seller_power_w);
            out[n + l] = r * rate_grad.power[l] * dp;
        }
    }

    /// Values and gradients of the objective (index 0, to be minimized) and
    /// every stochastic constraint (`≤ 0`) on one realization.
    pub fn sample_functions(&self, xi: &NetworkSample, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let config = self.config;
        let econ = self.econ;
        let (a, p) = self.decode(x);
        let ev = evaluate_sample(xi, &a, &p, true)?;
        let ns = config.num_sellers;
        let dim = self.dim();
        let n = self.sharing_len();
        let rates: Vec<f64> = config.mnos().map(|m| ev.rate(m)).collect();
        let profits = crate::economics::profits(&rates, &a, econ, config);
        let mut profit_grads = vec![vec![0.0; dim]; config.mno_count()];
        for (k, mno) in config.mnos().enumerate() {
            self.profit_gradient(k, ev.gradient(mno), x, &mut profit_grads[k]);
        }
        let weight = |k: usize| if k < ns { econ.seller_weights[k] } else { econ.buyer_weights[k - ns] };
        let weighted = |range: std::ops::Range<usize>| {
            let mut v = 0.0;
            let mut g = vec![0.0; dim];
            for k in range {
                v += weight(k) * profits[k];
                for (gi, pg) in g.iter_mut().zip(&profit_grads[k]) {
                    *gi += weight(k) * pg;
                }
            }
            (v, g)
        };
        let m = self.money;

        let mut values = Vec::with_capacity(self.function_count());
        let mut grads = Vec::with_capacity(self.function_count());

        let (obj, mut obj_grad) = match self.settings.sense {
            Sense::BuyerProfit => weighted(ns..config.mno_count()),
            Sense::SellerProfit => weighted(0..ns),
        };
        let pen = econ.penalty / m;
        values.push(-obj / m + pen * penalty_term(&a));
        for (i, g) in obj_grad.iter_mut().enumerate() {
            *g = -*g / m;
            if i < n {
                *g += pen * (1.0 - 2.0 * x[i]);
            }
        }
        grads.push(obj_grad);

        for c in &self.constraints {
            match *c {
                Constraint::SellerFloor => {
                    let (v, g) = weighted(0..ns);
                    values.push((econ.epsilon - v) / m);
                    grads.push(g.iter().map(|gi| -gi / m).collect());
                }
                Constraint::RateFloor(k) => {
                    values.push(econ.rate_floor - rates[k]);
                    let rg = ev.gradient(config.mno_at(k));
                    let mut g = vec![0.0; dim];
                    g[..n].iter_mut().zip(&rg.sharing).for_each(|(gi, r)| *gi = -r);
                    for l in 0..config.total_subbands() {
                        let dp = self.settings.power_map.derivative(x[n + l], config.max_seller_power_w);
                        g[n + l] = -rg.power[l] * dp;
                    }
                    grads.push(g);
                }
                Constraint::Participation(b) => {
                    values.push(-profits[ns + b] / m);
                    grads.push(profit_grads[ns + b].iter().map(|gi| -gi / m).collect());
                }
            }
        }
        Ok((values, grads))
    }

    /// Penalized objective at `x` averaged over `samples`, money units with
    /// the maximization sign.
    pub fn mean_objective(&self, samples: &[NetworkSample], x: &[f64]) -> Result<f64> {
        let (a, p) = self.decode(x);
        let ns = self.config.num_sellers;
        let mut total = 0.0;
        for xi in samples {
            let ev = evaluate_sample(xi, &a, &p, false)?;
            let rates: Vec<f64> = ev.seller_rates.into_iter().chain(ev.buyer_rates).collect();
            let profits = crate::economics::profits(&rates, &a, self.econ, self.config);
            total += match self.settings.sense {
                Sense::BuyerProfit => (0..self.config.num_buyers).map(|b| self.econ.buyer_weights[b] * profits[ns + b]).sum::<f64>(),
                Sense::SellerProfit => (0..ns).map(|s| self.econ.seller_weights[s] * profits[s]).sum::<f64>(),
            };
        }
        Ok(total / samples.len() as f64 - self.econ.penalty * penalty_term(&a))
    }

    /// Objective model value in money units with the maximization sign.
    pub fn objective_in_money(&self, f0: f64) -> f64 {
        -self.money * f0
    }

    /// Constraint value `i ≥ 1` in its natural unit: money for profit
    /// constraints, bps/Hz for rate floors.
    pub fn constraint_in_units(&self, i: usize, v: f64) -> f64 {
        match self.constraints[i - 1] {
            Constraint::RateFloor(_) => v,
            _ => v * self.money,
        }
    }

    /// Largest positive constraint value in natural units, or zero.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        (1..values.len()).map(|i| self.constraint_in_units(i, values[i])).fold(0.0, f64::max)
    }
}
