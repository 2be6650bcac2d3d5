//! TOML configuration. Every key is optional; missing keys take the
//! default radio and economic parameters on a two-seller, one-buyer,
//! one-sub-band layout. Powers are given in dBm and intensities per km².

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::preset::{ExperimentPreset, Param, Pipeline, PresetName, Scenario, DEFAULT_REPLICATIONS, DEFAULT_VALIDATION_SAMPLES};
use crate::cssca::{CsscaSettings, PowerMap, StepSchedule};
use crate::error::{Error, Result};
use crate::geometry::{Association, BuyerPowerScheme};
use crate::units::{dbm_to_watts, watts_to_dbm};

/// A scalar applied to every operator, or one value per operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn expand(&self, n: usize, key: &str) -> Result<Vec<T>> {
        match self {
            OneOrMany::One(v) => Ok(vec![v.clone(); n]),
            OneOrMany::Many(v) if v.len() == n => Ok(v.clone()),
            OneOrMany::Many(v) => Err(Error::config(key, format!("expected {n} entries, found {}", v.len()))),
        }
    }
}

fn compact<T: Clone + PartialEq>(v: &[T]) -> OneOrMany<T> {
    if !v.is_empty() && v.iter().all(|x| *x == v[0]) {
        OneOrMany::One(v[0].clone())
    } else {
        OneOrMany::Many(v.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum LeasePrice {
    One(f64),
    PerSeller(Vec<f64>),
    Table(Vec<Vec<f64>>),
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct NetworkSection {
    num_sellers: Option<usize>,
    num_buyers: Option<usize>,
    subbands_per_seller: Option<OneOrMany<usize>>,
    radius_m: Option<f64>,
    window_radius_m: Option<f64>,
    seller_bs_intensity: Option<OneOrMany<f64>>,
    buyer_bs_intensity: Option<OneOrMany<f64>>,
    seller_user_intensity: Option<OneOrMany<f64>>,
    buyer_user_intensity: Option<OneOrMany<f64>>,
    pathloss_alpha: Option<f64>,
    noise_power_dbm: Option<f64>,
    interference_threshold_dbm: Option<OneOrMany<f64>>,
    max_seller_power_dbm: Option<f64>,
    borrow_cap: Option<OneOrMany<usize>>,
    lease_cap: Option<OneOrMany<usize>>,
    /// `controlled`, `uniform` or `fixed`.
    buyer_power: Option<String>,
    /// Upper end of the uniform scheme or the fixed power.
    buyer_power_dbm: Option<f64>,
    /// `strongest_mean` or `nearest`.
    association: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct EconomicsSection {
    price_per_rate: Option<f64>,
    horizon_months: Option<f64>,
    lease_price: Option<LeasePrice>,
    license_price: Option<OneOrMany<f64>>,
    seller_weights: Option<Vec<f64>>,
    buyer_weights: Option<Vec<f64>>,
    epsilon: Option<f64>,
    phi: Option<f64>,
    penalty: Option<f64>,
    rate_floor: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CsscaSection {
    iterations: Option<usize>,
    batch_size: Option<usize>,
    trace_samples: Option<usize>,
    rho_exponent: Option<f64>,
    beta_exponent: Option<f64>,
    rho_scale: Option<f64>,
    beta_scale: Option<f64>,
    tau_objective: Option<f64>,
    tau_constraint: Option<f64>,
    subsolver_tol: Option<f64>,
    subsolver_max_iter: Option<usize>,
    /// `logarithmic` or `linear`.
    power_map: Option<String>,
    power_decades: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ExperimentSection {
    name: Option<String>,
    sweep: Option<String>,
    grid: Option<Vec<f64>>,
    pipeline: Option<String>,
    replications: Option<usize>,
    seed: Option<u64>,
    validation_samples: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FileConfig {
    network: NetworkSection,
    economics: EconomicsSection,
    cssca: CsscaSection,
    experiment: ExperimentSection,
}

/// Experiment choices that are applied when the preset is built, so that
/// command-line overrides can still change them.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOptions {
    pub name: PresetName,
    /// Replaces the preset's swept parameter.
    pub sweep: Option<Param>,
    /// Replaces the preset's grid.
    pub grid: Option<Vec<f64>>,
    pub pipeline: Option<Pipeline>,
    pub replications: usize,
    pub seed: u64,
    pub validation_samples: usize,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            name: PresetName::Custom,
            sweep: None,
            grid: None,
            pipeline: None,
            replications: DEFAULT_REPLICATIONS,
            seed: 0,
            validation_samples: DEFAULT_VALIDATION_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub scenario: Scenario,
    pub options: ExperimentOptions,
}

impl LoadedConfig {
    pub fn schedule(&self) -> StepSchedule {
        self.scenario.settings.schedule
    }

    pub fn preset(&self) -> Result<ExperimentPreset> {
        let o = &self.options;
        let mut p = ExperimentPreset::new(o.name, &self.scenario);
        if let Some(sweep) = o.sweep {
            p.sweep = sweep;
        }
        if let Some(grid) = &o.grid {
            p.grid = grid.clone();
        }
        if let Some(pipeline) = o.pipeline {
            p.pipeline = pipeline;
        }
        p.replications = o.replications;
        p.seed = o.seed;
        p.validation_samples = o.validation_samples;
        p.validate()?;
        Ok(p)
    }

    /// The effective configuration in the input format, every key listed.
    pub fn echo(&self) -> String {
        let s = &self.scenario;
        let n = &s.network;
        let e = &s.econ;
        let c = &s.settings;
        let ns = n.num_sellers;
        let (buyer_power, buyer_power_dbm) = match n.buyer_power {
            BuyerPowerScheme::InterferenceControlled => ("controlled", None),
            BuyerPowerScheme::UniformRandom { max_w } => ("uniform", Some(watts_to_dbm(max_w))),
            BuyerPowerScheme::Fixed { power_w } => ("fixed", Some(watts_to_dbm(power_w))),
        };
        let (power_map, power_decades) = match c.power_map {
            PowerMap::Linear => ("linear", None),
            PowerMap::Logarithmic { decades } => ("logarithmic", Some(decades)),
        };
        let file = FileConfig {
            network: NetworkSection {
                num_sellers: Some(ns),
                num_buyers: Some(n.num_buyers),
                subbands_per_seller: Some(compact(&n.subbands_per_seller)),
                radius_m: Some(n.radius_m),
                window_radius_m: Some(n.window_radius_m),
                seller_bs_intensity: Some(compact(&n.bs_intensity[..ns])),
                buyer_bs_intensity: (n.num_buyers > 0).then(|| compact(&n.bs_intensity[ns..])),
                seller_user_intensity: Some(compact(&n.user_intensity[..ns])),
                buyer_user_intensity: (n.num_buyers > 0).then(|| compact(&n.user_intensity[ns..])),
                pathloss_alpha: Some(n.pathloss_alpha),
                noise_power_dbm: Some(watts_to_dbm(n.noise_power_w)),
                interference_threshold_dbm: Some(compact(
                    &n.interference_threshold_w.iter().map(|&w| watts_to_dbm(w)).collect::<Vec<_>>(),
                )),
                max_seller_power_dbm: Some(watts_to_dbm(n.max_seller_power_w)),
                borrow_cap: Some(compact(&n.borrow_cap)),
                lease_cap: Some(compact(&n.lease_cap)),
                buyer_power: Some(buyer_power.into()),
                buyer_power_dbm,
                association: Some(match n.association {
                    Association::StrongestMean => "strongest_mean".into(),
                    Association::Nearest => "nearest".into(),
                }),
            },
            economics: EconomicsSection {
                price_per_rate: Some(e.price_per_rate),
                horizon_months: Some(e.horizon_months),
                lease_price: (n.num_buyers > 0).then(|| LeasePrice::Table(e.lease_price.clone())),
                license_price: Some(compact(&e.license_price)),
                seller_weights: Some(e.seller_weights.clone()),
                buyer_weights: Some(e.buyer_weights.clone()),
                epsilon: s.phi.is_none().then_some(e.epsilon),
                phi: s.phi,
                penalty: Some(e.penalty),
                rate_floor: Some(e.rate_floor),
            },
            cssca: CsscaSection {
                iterations: Some(c.iterations),
                batch_size: Some(c.batch_size),
                trace_samples: Some(c.trace_samples),
                rho_exponent: Some(c.schedule.rho_exponent),
                beta_exponent: Some(c.schedule.beta_exponent),
                rho_scale: Some(c.schedule.rho_scale),
                beta_scale: Some(c.schedule.beta_scale),
                tau_objective: Some(c.tau_objective),
                tau_constraint: Some(c.tau_constraint),
                subsolver_tol: Some(c.subsolver_tol),
                subsolver_max_iter: Some(c.subsolver_max_iter),
                power_map: Some(power_map.into()),
                power_decades,
            },
            experiment: ExperimentSection {
                name: Some(self.options.name.as_str().into()),
                sweep: self.options.sweep.map(|p| p.as_str().into()),
                grid: self.options.grid.clone(),
                pipeline: self.options.pipeline.map(|p| {
                    match p {
                        Pipeline::Rates => "rates",
                        Pipeline::Convergence => "convergence",
                        Pipeline::Optimize => "optimize",
                    }
                    .into()
                }),
                replications: Some(self.options.replications),
                seed: Some(self.options.seed),
                validation_samples: Some(self.options.validation_samples),
            },
        };
        toml::to_string(&file).unwrap_or_else(|e| format!("# could not render configuration: {e}\n"))
    }
}

/// Reads, applies defaults to, converts and validates a configuration file.
pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
    parse_config(&text)
}

/// Name of the key on the line where a parse error starts.
fn key_at(text: &str, offset: usize) -> Option<String> {
    let start = text[..offset.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
    let line = text[start..].lines().next()?;
    let key = line.split('=').next()?.trim();
    (!key.is_empty() && line.contains('=')).then(|| key.to_string())
}

pub fn parse_config(text: &str) -> Result<LoadedConfig> {
    let file: FileConfig = toml::from_str(text).map_err(|e| {
        let key = e.span().and_then(|s| key_at(text, s.start)).unwrap_or_else(|| "config".into());
        Error::config(key, e.message().trim().to_string())
    })?;
    build(file)
}

fn finite(key: &str, v: Option<f64>) -> Result<Option<f64>> {
    match v {
        Some(x) if !x.is_finite() => Err(Error::config(key, "must be finite")),
        other => Ok(other),
    }
}

fn build(file: FileConfig) -> Result<LoadedConfig> {
    let net = file.network;
    let ns = net.num_sellers.unwrap_or(2);
    let nb = net.num_buyers.unwrap_or(1);
    if ns == 0 {
        return Err(Error::config("num_sellers", "must be positive"));
    }
    let subbands = match &net.subbands_per_seller {
        Some(v) => v.expand(ns, "subbands_per_seller")?,
        None => vec![1; ns],
    };
    let mut scn = Scenario::standard(ns, nb, subbands[0]);
    let n = &mut scn.network;
    n.subbands_per_seller = subbands.clone();
    n.borrow_cap = subbands;
    if let Some(v) = finite("radius_m", net.radius_m)? {
        n.radius_m = v;
    }
    if let Some(v) = finite("window_radius_m", net.window_radius_m)? {
        n.window_radius_m = v;
    }
    if let Some(v) = &net.seller_bs_intensity {
        n.bs_intensity.splice(..ns, v.expand(ns, "seller_bs_intensity")?);
    }
    if let Some(v) = &net.buyer_bs_intensity {
        n.bs_intensity.splice(ns.., v.expand(nb, "buyer_bs_intensity")?);
    }
    if let Some(v) = &net.seller_user_intensity {
        n.user_intensity.splice(..ns, v.expand(ns, "seller_user_intensity")?);
    }
    if let Some(v) = &net.buyer_user_intensity {
        n.user_intensity.splice(ns.., v.expand(nb, "buyer_user_intensity")?);
    }
    if let Some(v) = finite("pathloss_alpha", net.pathloss_alpha)? {
        n.pathloss_alpha = v;
    }
    if let Some(v) = finite("noise_power_dbm", net.noise_power_dbm)? {
        n.noise_power_w = dbm_to_watts(v);
    }
    if let Some(v) = &net.interference_threshold_dbm {
        n.interference_threshold_w = v.expand(ns, "interference_threshold_dbm")?.into_iter().map(dbm_to_watts).collect();
    }
    if let Some(v) = finite("max_seller_power_dbm", net.max_seller_power_dbm)? {
        n.max_seller_power_w = dbm_to_watts(v);
    }
    if let Some(v) = &net.borrow_cap {
        n.borrow_cap = v.expand(ns, "borrow_cap")?;
    }
    if let Some(v) = &net.lease_cap {
        n.lease_cap = v.expand(ns, "lease_cap")?;
    }
    let buyer_w = dbm_to_watts(finite("buyer_power_dbm", net.buyer_power_dbm)?.unwrap_or(10.0));
    n.buyer_power = match net.buyer_power.as_deref() {
        None | Some("controlled") => {
            if net.buyer_power_dbm.is_some() {
                return Err(Error::config("buyer_power_dbm", "only used by the uniform and fixed schemes"));
            }
            BuyerPowerScheme::InterferenceControlled
        }
        Some("uniform") => BuyerPowerScheme::UniformRandom { max_w: buyer_w },
        Some("fixed") => BuyerPowerScheme::Fixed { power_w: buyer_w },
        Some(other) => return Err(Error::config("buyer_power", format!("expected controlled, uniform or fixed, got `{other}`"))),
    };
    n.association = match net.association.as_deref() {
        None | Some("strongest_mean") => Association::StrongestMean,
        Some("nearest") => Association::Nearest,
        Some(other) => return Err(Error::config("association", format!("expected strongest_mean or nearest, got `{other}`"))),
    };

    let ec = file.economics;
    let e = &mut scn.econ;
    if let Some(v) = finite("price_per_rate", ec.price_per_rate)? {
        e.price_per_rate = v;
    }
    if let Some(v) = finite("horizon_months", ec.horizon_months)? {
        e.horizon_months = v;
    }
    match &ec.lease_price {
        None => {}
        Some(LeasePrice::One(v)) => e.lease_price = vec![vec![*v; nb]; ns],
        Some(LeasePrice::PerSeller(v)) => {
            e.lease_price = OneOrMany::Many(v.clone()).expand(ns, "lease_price")?.into_iter().map(|p| vec![p; nb]).collect()
        }
        Some(LeasePrice::Table(t)) => e.lease_price = t.clone(),
    }
    if let Some(v) = &ec.license_price {
        e.license_price = v.expand(ns, "license_price")?;
    }
    if let Some(v) = &ec.seller_weights {
        e.seller_weights = v.clone();
    }
    if let Some(v) = &ec.buyer_weights {
        e.buyer_weights = v.clone();
    }
    if ec.epsilon.is_some() && ec.phi.is_some() {
        return Err(Error::config("phi", "give either epsilon or phi, not both"));
    }
    if let Some(v) = finite("epsilon", ec.epsilon)? {
        e.epsilon = v;
    }
    scn.phi = finite("phi", ec.phi)?;
    if let Some(v) = finite("penalty", ec.penalty)? {
        e.penalty = v;
    }
    if let Some(v) = finite("rate_floor", ec.rate_floor)? {
        e.rate_floor = v;
    }

    let cs = file.cssca;
    let c = &mut scn.settings;
    let d = CsscaSettings::default();
    c.iterations = cs.iterations.unwrap_or(d.iterations);
    c.batch_size = cs.batch_size.unwrap_or(d.batch_size);
    c.trace_samples = cs.trace_samples.unwrap_or(d.trace_samples);
    c.subsolver_max_iter = cs.subsolver_max_iter.unwrap_or(d.subsolver_max_iter);
    let sched = &mut c.schedule;
    for (key, slot, v) in [
        ("rho_exponent", &mut sched.rho_exponent, cs.rho_exponent),
        ("beta_exponent", &mut sched.beta_exponent, cs.beta_exponent),
        ("rho_scale", &mut sched.rho_scale, cs.rho_scale),
        ("beta_scale", &mut sched.beta_scale, cs.beta_scale),
        ("tau_objective", &mut c.tau_objective, cs.tau_objective),
        ("tau_constraint", &mut c.tau_constraint, cs.tau_constraint),
        ("subsolver_tol", &mut c.subsolver_tol, cs.subsolver_tol),
    ] {
        if let Some(v) = finite(key, v)? {
            *slot = v;
        }
    }
    let decades = finite("power_decades", cs.power_decades)?;
    c.power_map = match cs.power_map.as_deref() {
        None | Some("logarithmic") => PowerMap::Logarithmic { decades: decades.unwrap_or(8.0) },
        Some("linear") if decades.is_none() => PowerMap::Linear,
        Some("linear") => return Err(Error::config("power_decades", "only used by the logarithmic power map")),
        Some(other) => return Err(Error::config("power_map", format!("expected logarithmic or linear, got `{other}`"))),
    };

    let ex = file.experiment;
    let d = ExperimentOptions::default();
    let options = ExperimentOptions {
        name: ex.name.as_deref().map(str::parse).transpose()?.unwrap_or(d.name),
        sweep: ex.sweep.as_deref().map(str::parse).transpose()?,
        grid: ex.grid,
        pipeline: ex.pipeline.as_deref().map(str::parse).transpose()?,
        replications: ex.replications.unwrap_or(d.replications),
        seed: ex.seed.unwrap_or(d.seed),
        validation_samples: ex.validation_samples.unwrap_or(d.validation_samples),
    };
    if options.replications == 0 {
        return Err(Error::config("replications", "must be at least 1"));
    }
    if options.grid.as_ref().is_some_and(|g| g.is_empty()) {
        return Err(Error::config("grid", "must not be empty"));
    }
    scn.validate()?;
    Ok(LoadedConfig { scenario: scn, options })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn key_of(text: &str) -> String {
        match parse_config(text) {
            Err(Error::Config { key, .. }) => key,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse_config("").unwrap();
        let s = &c.scenario;
        assert_eq!(s.econ.price_per_rate, 2.0);
        assert_eq!(s.econ.horizon_months, 120.0);
        assert_eq!(s.econ.rate_floor, 1.0);
        assert_eq!(s.network.pathloss_alpha, 4.0);
        assert_relative_eq!(s.network.interference_threshold_w[0], 1e-14, max_relative = 1e-12);
        assert_relative_eq!(s.network.max_seller_power_w, 1e-2, max_relative = 1e-12);
        assert_relative_eq!(s.network.noise_power_w, 1e-18, max_relative = 1e-12);
        assert_eq!(s.settings.iterations, 500);
        assert_eq!((s.network.num_sellers, s.network.num_buyers), (2, 1));
        assert_eq!(s.econ.lease_price, vec![vec![1800.0], vec![1200.0]]);
        assert_eq!(c.options.replications, 500);
    }

    #[test]
    fn alpha_two_is_rejected() {
        let err = parse_config("[network]\npathloss_alpha = 2.0\n").unwrap_err();
        assert!(err.to_string().contains("pathloss_alpha must exceed 2"), "{err}");
        assert_eq!(key_of("[network]\npathloss_alpha = 2\n"), "pathloss_alpha");
    }

    #[test]
    fn dbm_keys_are_converted() {
        let c = parse_config("[network]\ninterference_threshold_dbm = -110\nmax_seller_power_dbm = 0\n").unwrap();
        assert_relative_eq!(c.scenario.network.interference_threshold_w[0], 1e-14, max_relative = 1e-12);
        assert_relative_eq!(c.scenario.network.max_seller_power_w, 1e-3, max_relative = 1e-12);
    }

    #[test]
    fn diagnostics_name_the_key() {
        assert_eq!(key_of("[economics]\nrate_floor = \"high\"\n"), "rate_floor");
        assert_eq!(key_of("[network]\nnum_sellers = 2\nsubbands_per_seller = [1, 2, 3]\n"), "subbands_per_seller");
        assert_eq!(key_of("[network]\nbuyer_power = \"loud\"\n"), "buyer_power");
        assert_eq!(key_of("[economics]\nrate_floor = -1.0\n"), "rate_floor");
        assert_eq!(key_of("[experiment]\nname = \"fig42\"\n"), "experiment.name");
        assert_eq!(key_of("[cssca]\nbeta_exponent = 0.55\n"), "beta_exponent");
        let unknown = parse_config("[network]\nbogus = 1\n").unwrap_err().to_string();
        assert!(unknown.contains("bogus"), "{unknown}");
    }

    #[test]
    fn per_operator_lists() {
        let c = parse_config(
            "[network]\nnum_sellers = 2\nnum_buyers = 2\nsubbands_per_seller = [1, 2]\nseller_bs_intensity = [8, 16]\n\
             buyer_bs_intensity = 4\n[economics]\nlease_price = [1000, 900]\n",
        )
        .unwrap();
        let n = &c.scenario.network;
        assert_eq!(n.subbands_per_seller, vec![1, 2]);
        assert_eq!(n.bs_intensity, vec![8.0, 16.0, 4.0, 4.0]);
        assert_eq!(c.scenario.econ.lease_price, vec![vec![1000.0; 2], vec![900.0; 2]]);
        assert_eq!(n.lease_cap, vec![2, 2]);
    }

    #[test]
    fn echo_round_trips() {
        let text = "[network]\nnum_buyers = 2\nbuyer_power = \"uniform\"\nbuyer_power_dbm = 5\n\
                    [economics]\nphi = 0.3\n[cssca]\niterations = 50\n[experiment]\nname = \"fig6\"\nseed = 9\n";
        let c = parse_config(text).unwrap();
        let again = parse_config(&c.echo()).unwrap();
        assert_eq!(again.options, c.options);
        assert_eq!(again.scenario.econ, c.scenario.econ);
        assert_eq!(again.scenario.settings, c.scenario.settings);
        let (a, b) = (&again.scenario.network, &c.scenario.network);
        assert_eq!((a.num_sellers, a.num_buyers, &a.lease_cap), (b.num_sellers, b.num_buyers, &b.lease_cap));
        match (a.buyer_power, b.buyer_power) {
            (BuyerPowerScheme::UniformRandom { max_w: x }, BuyerPowerScheme::UniformRandom { max_w: y }) => {
                assert_relative_eq!(x, y, max_relative = 1e-12)
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(again.scenario.phi, Some(0.3));
    }

    #[test]
    fn preset_takes_overrides() {
        let c = parse_config("[experiment]\nname = \"custom\"\nsweep = \"penalty\"\ngrid = [10, 1000]\nreplications = 3\n").unwrap();
        let p = c.preset().unwrap();
        assert_eq!(p.sweep, Param::Penalty);
        assert_eq!(p.grid, vec![10.0, 1000.0]);
        assert_eq!(p.replications, 3);
        assert!(parse_config("[experiment]\nreplications = 0\n").is_err());
    }
}
