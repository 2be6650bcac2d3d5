use std::fmt;
use std::str::FromStr;

use crate::cssca::CsscaSettings;
use crate::economics::EconParams;
use crate::error::{Error, Result};
use crate::geometry::{BuyerPowerScheme, NetworkConfig};
use crate::units::{dbm_to_watts, watts_to_dbm};

/// A numeric knob that a sweep or a series can set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    RateFloor,
    InterferenceThresholdDbm,
    MaxSellerPowerDbm,
    /// Fraction of the largest attainable seller profit used as the floor.
    Phi,
    Penalty,
    PricePerRate,
    SellerBsIntensity,
    BuyerBsIntensity,
    NumSellers,
    NumBuyers,
    SubbandsPerSeller,
    /// Iteration index of a convergence trace; only a sweep axis.
    Iteration,
}

impl Param {
    pub const ALL: [Param; 12] = [
        Param::RateFloor,
        Param::InterferenceThresholdDbm,
        Param::MaxSellerPowerDbm,
        Param::Phi,
        Param::Penalty,
        Param::PricePerRate,
        Param::SellerBsIntensity,
        Param::BuyerBsIntensity,
        Param::NumSellers,
        Param::NumBuyers,
        Param::SubbandsPerSeller,
        Param::Iteration,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Param::RateFloor => "rate_floor",
            Param::InterferenceThresholdDbm => "interference_threshold_dbm",
            Param::MaxSellerPowerDbm => "max_seller_power_dbm",
            Param::Phi => "phi",
            Param::Penalty => "penalty",
            Param::PricePerRate => "price_per_rate",
            Param::SellerBsIntensity => "seller_bs_intensity",
            Param::BuyerBsIntensity => "buyer_bs_intensity",
            Param::NumSellers => "num_sellers",
            Param::NumBuyers => "num_buyers",
            Param::SubbandsPerSeller => "subbands_per_seller",
            Param::Iteration => "iteration",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Param {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::config("experiment.sweep", format!("unknown parameter `{s}`")))
    }
}

/// Everything one optimizer or rate evaluation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub network: NetworkConfig,
    pub econ: EconParams,
    pub settings: CsscaSettings,
    /// When set, the seller-profit floor is `φ` times the largest
    /// attainable seller profit instead of `econ.epsilon`.
    pub phi: Option<f64>,
}

impl Scenario {
    /// Default radio and economic parameters on the given topology.
    pub fn standard(num_sellers: usize, num_buyers: usize, subbands_per_seller: usize) -> Self {
        Scenario {
            network: NetworkConfig::standard(num_sellers, num_buyers, subbands_per_seller),
            econ: EconParams::standard(num_sellers, num_buyers),
            settings: CsscaSettings::default(),
            phi: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.econ.validate(&self.network)?;
        self.settings.validate()?;
        if let Some(phi) = self.phi {
            if !(0.0..=1.0).contains(&phi) {
                return Err(Error::config("phi", "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// The same parameters on another topology. Per-operator values are
    /// taken from the first seller (and first buyer) and broadcast; caps
    /// that were at their non-binding defaults stay non-binding.
    pub fn resized(&self, num_sellers: usize, num_buyers: usize, subbands_per_seller: usize) -> Scenario {
        let old = &self.network;
        let mut net = NetworkConfig::standard(num_sellers, num_buyers, subbands_per_seller);
        net.radius_m = old.radius_m;
        net.window_radius_m = old.window_radius_m;
        net.pathloss_alpha = old.pathloss_alpha;
        net.noise_power_w = old.noise_power_w;
        net.max_seller_power_w = old.max_seller_power_w;
        net.buyer_power = old.buyer_power;
        net.association = old.association;
        let seller_bs = old.bs_intensity[0];
        let seller_ue = old.user_intensity[0];
        let (buyer_bs, buyer_ue) = if old.num_buyers > 0 {
            (old.bs_intensity[old.num_sellers], old.user_intensity[old.num_sellers])
        } else {
            (seller_bs, seller_ue)
        };
        net.bs_intensity = (0..num_sellers).map(|_| seller_bs).chain((0..num_buyers).map(|_| buyer_bs)).collect();
        net.user_intensity = (0..num_sellers).map(|_| seller_ue).chain((0..num_buyers).map(|_| buyer_ue)).collect();
        net.interference_threshold_w = vec![old.interference_threshold_w[0]; num_sellers];
        if old.borrow_cap[0] != old.subbands_per_seller[0] {
            net.borrow_cap = vec![old.borrow_cap[0].min(subbands_per_seller); num_sellers];
        }
        if old.lease_cap[0] != old.num_buyers.max(1) {
            net.lease_cap = vec![old.lease_cap[0]; num_sellers];
        }

        let e = &self.econ;
        let mut econ = EconParams::standard(num_sellers, num_buyers);
        econ.price_per_rate = e.price_per_rate;
        econ.horizon_months = e.horizon_months;
        econ.epsilon = e.epsilon;
        econ.penalty = e.penalty;
        econ.rate_floor = e.rate_floor;
        if old.num_buyers > 0 {
            let last = old.num_sellers - 1;
            econ.lease_price = (0..num_sellers).map(|s| vec![e.lease_price[s.min(last)][0]; num_buyers]).collect();
        }
        econ.license_price = vec![e.license_price[0]; num_sellers];
        Scenario { network: net, econ, settings: self.settings.clone(), phi: self.phi }
    }

    /// Current value of `param`; `None` for the iteration axis.
    pub fn get(&self, param: Param) -> Option<f64> {
        let n = &self.network;
        Some(match param {
            Param::RateFloor => self.econ.rate_floor,
            Param::InterferenceThresholdDbm => watts_to_dbm(n.interference_threshold_w[0]),
            Param::MaxSellerPowerDbm => watts_to_dbm(n.max_seller_power_w),
            Param::Phi => self.phi?,
            Param::Penalty => self.econ.penalty,
            Param::PricePerRate => self.econ.price_per_rate,
            Param::SellerBsIntensity => n.bs_intensity[0],
            Param::BuyerBsIntensity => *n.bs_intensity.get(n.num_sellers)?,
            Param::NumSellers => n.num_sellers as f64,
            Param::NumBuyers => n.num_buyers as f64,
            Param::SubbandsPerSeller => n.subbands_per_seller[0] as f64,
            Param::Iteration => return None,
        })
    }

    pub fn apply(&mut self, param: Param, value: f64) -> Result<()> {
        let key = param.as_str();
        if !value.is_finite() {
            return Err(Error::config(key, "must be finite"));
        }
        let count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::config(key, format!("expected a nonnegative integer, got {v}")))
            }
        };
        let n = &mut self.network;
        match param {
            Param::RateFloor => self.econ.rate_floor = value,
            Param::InterferenceThresholdDbm => n.interference_threshold_w.iter_mut().for_each(|z| *z = dbm_to_watts(value)),
            Param::MaxSellerPowerDbm => n.max_seller_power_w = dbm_to_watts(value),
            Param::Phi => self.phi = Some(value),
            Param::Penalty => self.econ.penalty = value,
            Param::PricePerRate => self.econ.price_per_rate = value,
            Param::SellerBsIntensity => {
                let s = n.num_sellers;
                n.bs_intensity[..s].iter_mut().for_each(|v| *v = value);
            }
            Param::BuyerBsIntensity => {
                let s = n.num_sellers;
                n.bs_intensity[s..].iter_mut().for_each(|v| *v = value);
            }
            Param::NumSellers => {
                let (b, l) = (n.num_buyers, n.subbands_per_seller[0]);
                *self = self.resized(count(value)?, b, l);
            }
            Param::NumBuyers => {
                let (s, l) = (n.num_sellers, n.subbands_per_seller[0]);
                *self = self.resized(s, count(value)?, l);
            }
            Param::SubbandsPerSeller => {
                let (s, b) = (n.num_sellers, n.num_buyers);
                *self = self.resized(s, b, count(value)?);
            }
            Param::Iteration => return Err(Error::config(key, "the iteration axis cannot be set")),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Override {
    Set(Param, f64),
    BuyerPower(BuyerPowerScheme),
}

/// One curve of a figure: overrides applied on top of the preset's base.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    /// Empty for a single-curve preset.
    pub label: String,
    pub overrides: Vec<Override>,
}

impl Series {
    pub fn plain() -> Self {
        Series { label: String::new(), overrides: Vec::new() }
    }

    pub fn set(param: Param, value: f64) -> Self {
        Series { label: format!("{param}={value}"), overrides: vec![Override::Set(param, value)] }
    }

    pub fn buyer_power(label: &str, scheme: BuyerPowerScheme) -> Self {
        Series { label: label.to_string(), overrides: vec![Override::BuyerPower(scheme)] }
    }

    pub fn apply(&self, base: &Scenario) -> Result<Scenario> {
        let mut s = base.clone();
        for o in &self.overrides {
            match *o {
                Override::Set(p, v) => s.apply(p, v)?,
                Override::BuyerPower(scheme) => s.network.buyer_power = scheme,
            }
        }
        Ok(s)
    }
}

/// How each grid point is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    /// Expected rates of the all-shared, full-power policy: quadrature plus
    /// a Monte Carlo check over the replications.
    Rates,
    /// Optimizer traces per series; the grid lists recorded iterations.
    Convergence,
    /// Full optimizer run, rounding and validation per replication.
    Optimize,
}

impl FromStr for Pipeline {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rates" => Ok(Pipeline::Rates),
            "convergence" => Ok(Pipeline::Convergence),
            "optimize" => Ok(Pipeline::Optimize),
            _ => Err(Error::config("experiment.pipeline", format!("expected rates, convergence or optimize, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
    Custom,
}

impl PresetName {
    pub const ALL: [PresetName; 9] = [
        PresetName::Fig3,
        PresetName::Fig4,
        PresetName::Fig5,
        PresetName::Fig6,
        PresetName::Fig7,
        PresetName::Fig8,
        PresetName::Fig9,
        PresetName::Fig10,
        PresetName::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Fig3 => "fig3",
            PresetName::Fig4 => "fig4",
            PresetName::Fig5 => "fig5",
            PresetName::Fig6 => "fig6",
            PresetName::Fig7 => "fig7",
            PresetName::Fig8 => "fig8",
            PresetName::Fig9 => "fig9",
            PresetName::Fig10 => "fig10",
            PresetName::Custom => "custom",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::config("experiment.name", format!("unknown preset `{s}` (fig3..fig10 or custom)")))
    }
}

pub const DEFAULT_REPLICATIONS: usize = 500;
pub const FAST_REPLICATIONS: usize = 100;
pub const DEFAULT_VALIDATION_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: PresetName,
    pub pipeline: Pipeline,
    pub sweep: Param,
    pub grid: Vec<f64>,
    pub series: Vec<Series>,
    /// Adds no-sharing and complete-sharing rows at every grid point,
    /// evaluated on the first series' scenario.
    pub baselines: bool,
    pub replications: usize,
    pub seed: u64,
    /// Realizations used to validate each optimized policy.
    pub validation_samples: usize,
    pub base: Scenario,
}

fn zeta_grid() -> Vec<f64> {
    vec![-120.0, -115.0, -110.0, -105.0, -100.0]
}

fn checkpoints(iterations: usize) -> Vec<f64> {
    let stride = (iterations / 50).max(1);
    let mut g: Vec<f64> = (0..iterations).step_by(stride).map(|t| t as f64).collect();
    if g.last() != Some(&((iterations - 1) as f64)) {
        g.push((iterations - 1) as f64);
    }
    g
}

impl ExperimentPreset {
    /// The figure preset built on the radio, economic and optimizer
    /// parameters of `base`; figure presets fix their own topology. For
    /// `Custom` the caller sets the sweep and grid.
    pub fn new(name: PresetName, base: &Scenario) -> Self {
        let topo = |s, b, l| base.resized(s, b, l);
        let controlled = BuyerPowerScheme::InterferenceControlled;
        let ten_dbm = dbm_to_watts(10.0);
        let (pipeline, sweep, grid, series, scenario, baselines) = match name {
            PresetName::Fig3 => {
                let series = [0.0, 0.5, 1.0].map(|r| Series::set(Param::RateFloor, r)).to_vec();
                let g = checkpoints(base.settings.iterations.max(1));
                (Pipeline::Convergence, Param::Iteration, g, series, topo(2, 1, 1), false)
            }
            PresetName::Fig4 => {
                let series = vec![
                    Series::plain(),
                    Series::set(Param::BuyerBsIntensity, 16.0),
                    Series::set(Param::SellerBsIntensity, 16.0),
                ];
                (Pipeline::Rates, Param::InterferenceThresholdDbm, zeta_grid(), series, topo(1, 1, 1), false)
            }
            PresetName::Fig5 => {
                let series = [2.0, 3.0, 4.0].map(|d| Series::set(Param::PricePerRate, d)).to_vec();
                (Pipeline::Optimize, Param::Phi, vec![0.0, 0.2, 0.4, 0.6, 0.8], series, topo(2, 2, 1), false)
            }
            PresetName::Fig6 => {
                (Pipeline::Optimize, Param::Penalty, vec![1e1, 1e3, 1e5, 1e7], vec![Series::plain()], topo(2, 2, 1), false)
            }
            PresetName::Fig7 => {
                let series = [-115.0, -110.0, -105.0].map(|z| Series::set(Param::InterferenceThresholdDbm, z)).to_vec();
                let grid = vec![-50.0, -40.0, -30.0, -20.0, -10.0, 0.0, 10.0];
                (Pipeline::Optimize, Param::MaxSellerPowerDbm, grid, series, topo(2, 2, 1), false)
            }
            PresetName::Fig8 => {
                let series = [1.0, 2.0, 3.0].map(|b| Series::set(Param::NumBuyers, b)).to_vec();
                (Pipeline::Optimize, Param::RateFloor, vec![0.0, 0.5, 1.0, 1.5, 2.0], series, topo(2, 1, 1), false)
            }
            PresetName::Fig9 => {
                let series = vec![
                    Series::buyer_power("controlled", controlled),
                    Series::buyer_power("uniform", BuyerPowerScheme::UniformRandom { max_w: ten_dbm }),
                    Series::buyer_power("fixed", BuyerPowerScheme::Fixed { power_w: ten_dbm }),
                ];
                (Pipeline::Optimize, Param::RateFloor, vec![0.0, 0.5, 1.0, 1.5], series, topo(2, 2, 1), true)
            }
            PresetName::Fig10 => {
                let series = vec![
                    Series::buyer_power("controlled", controlled),
                    Series::buyer_power("fixed", BuyerPowerScheme::Fixed { power_w: ten_dbm }),
                ];
                (Pipeline::Rates, Param::InterferenceThresholdDbm, zeta_grid(), series, topo(1, 1, 1), false)
            }
            PresetName::Custom => (Pipeline::Optimize, Param::RateFloor, vec![base.econ.rate_floor], vec![Series::plain()], base.clone(), false),
        };
        ExperimentPreset {
            name,
            pipeline,
            sweep,
            grid,
            series,
            baselines,
            replications: DEFAULT_REPLICATIONS,
            seed: 0,
            validation_samples: DEFAULT_VALIDATION_SAMPLES,
            base: scenario,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::config("experiment.grid", "must not be empty"));
        }
        if self.replications == 0 {
            return Err(Error::config("experiment.replications", "must be at least 1"));
        }
        if self.series.is_empty() {
            return Err(Error::config("experiment.series", "must not be empty"));
        }
        if self.pipeline == Pipeline::Optimize && self.validation_samples < 2 {
            return Err(Error::config("experiment.validation_samples", "must be at least 2"));
        }
        if (self.sweep == Param::Iteration) != (self.pipeline == Pipeline::Convergence) {
            return Err(Error::config("experiment.sweep", "the iteration axis goes with the convergence pipeline"));
        }
        if self.pipeline == Pipeline::Convergence {
            let t = self.base.settings.iterations as f64;
            if self.grid.iter().any(|&g| !(g >= 0.0 && g < t && g.fract() == 0.0)) {
                return Err(Error::config("experiment.grid", "iteration checkpoints must be integers below the iteration count"));
            }
        }
        self.base.validate()?;
        for s in &self.series {
            let mut scn = s.apply(&self.base)?;
            if self.sweep != Param::Iteration {
                for &g in &self.grid {
                    scn.apply(self.sweep, g)?;
                    scn.validate().map_err(|e| match e {
                        Error::Config { key, message } => Error::config(key, format!("{message} (at {}={g})", self.sweep)),
                        other => other,
                    })?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        let base = Scenario::standard(2, 1, 1);
        for name in PresetName::ALL {
            let p = ExperimentPreset::new(name, &base);
            p.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(p.name, name);
            assert!(!p.grid.is_empty() && p.replications >= 1);
        }
    }

    #[test]
    fn names_round_trip() {
        for name in PresetName::ALL {
            assert_eq!(name.as_str().parse::<PresetName>().unwrap(), name);
        }
        for p in Param::ALL {
            assert_eq!(p.as_str().parse::<Param>().unwrap(), p);
        }
        assert!("fig11".parse::<PresetName>().is_err());
    }

    #[test]
    fn resize_broadcasts_first_operator() {
        let mut base = Scenario::standard(2, 1, 1);
        base.network.bs_intensity = vec![4.0, 5.0, 6.0];
        base.econ.rate_floor = 0.3;
        let r = base.resized(3, 2, 2);
        r.validate().unwrap();
        assert_eq!(r.network.bs_intensity, vec![4.0, 4.0, 4.0, 6.0, 6.0]);
        assert_eq!(r.network.lease_cap, vec![2, 2, 2]);
        assert_eq!(r.network.borrow_cap, vec![2, 2, 2]);
        assert_eq!(r.econ.lease_price, vec![vec![1800.0; 2], vec![1200.0; 2], vec![1200.0; 2]]);
        assert_eq!(r.econ.rate_floor, 0.3);
    }

    #[test]
    fn binding_caps_survive_resize() {
        let mut base = Scenario::standard(2, 2, 2);
        base.network.lease_cap = vec![1, 1];
        base.network.borrow_cap = vec![1, 1];
        let r = base.resized(2, 3, 2);
        assert_eq!(r.network.lease_cap, vec![1, 1]);
        assert_eq!(r.network.borrow_cap, vec![1, 1]);
    }

    #[test]
    fn apply_and_get_agree() {
        let mut s = Scenario::standard(2, 2, 1);
        for (p, v) in [
            (Param::RateFloor, 0.7),
            (Param::InterferenceThresholdDbm, -100.0),
            (Param::MaxSellerPowerDbm, 0.0),
            (Param::Phi, 0.4),
            (Param::Penalty, 10.0),
            (Param::PricePerRate, 3.0),
            (Param::SellerBsIntensity, 16.0),
            (Param::BuyerBsIntensity, 12.0),
            (Param::NumBuyers, 3.0),
            (Param::SubbandsPerSeller, 2.0),
            (Param::NumSellers, 1.0),
        ] {
            s.apply(p, v).unwrap();
            let got = s.get(p).unwrap();
            assert!((got - v).abs() < 1e-9 * v.abs().max(1.0), "{p}: {got} vs {v}");
        }
        s.validate().unwrap();
        assert!(s.apply(Param::NumBuyers, 1.5).is_err());
        assert!(s.apply(Param::Iteration, 1.0).is_err());
    }

    #[test]
    fn bad_presets_are_rejected() {
        let base = Scenario::standard(2, 1, 1);
        let mut p = ExperimentPreset::new(PresetName::Fig6, &base);
        p.grid.clear();
        assert!(p.validate().is_err());
        let mut p = ExperimentPreset::new(PresetName::Fig6, &base);
        p.replications = 0;
        assert!(p.validate().is_err());
        let mut p = ExperimentPreset::new(PresetName::Fig5, &base);
        p.grid.push(1.5);
        assert!(matches!(p.validate(), Err(Error::Config { .. })));
    }
}
