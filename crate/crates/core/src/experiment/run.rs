use std::path::Path;

use rayon::prelude::*;

use super::preset::{ExperimentPreset, Param, Pipeline, Scenario};
use super::svg::{curves_by_metric, line_chart};
use super::table::{metric_name, ResultTable};
use crate::channel::{SellerPowerVector, SharingMatrix};
use crate::cssca::{self, binarize::round_sharing, CsscaTrace, Fallback};
use crate::economics::{compute_umax, estimate_policy, PolicyEstimate};
use crate::error::{Error, Result};
use crate::geometry::NetworkConfig;
use crate::rate_analysis::{expected_rate, mc_rate_samples, McEstimate, RateQuadratureSettings};
use crate::rng::{stream, sub_seed};

/// Fraction of the final iterations that may be feasibility fallbacks
/// before a run counts as infeasible.
const FALLBACK_LIMIT: f64 = 0.5;
/// Share of the iterations, counted from the end, checked for fallbacks.
const FALLBACK_WINDOW: f64 = 0.1;
/// Validated rate floors may fall short by this fraction of `r^th` beyond
/// three standard errors.
const RATE_SLACK: f64 = 0.1;
/// Same for profit constraints, as a fraction of the money unit `δ D N̄`.
const MONEY_SLACK: f64 = 0.05;
/// Seeds tried for the largest seller profit; one run occasionally ends
/// with a fractional entry whose rounding breaks a rate floor.
const UMAX_ATTEMPTS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub table: ResultTable,
    /// Trace of the first replication of each series (convergence runs).
    pub traces: Vec<(String, CsscaTrace)>,
}

impl ExperimentOutput {
    /// Writes `<prefix>.csv`, one `<prefix>_<metric>.svg` per base metric
    /// and `<prefix>_trace_<series>.csv` per trace.
    pub fn write(&self, dir: &Path, prefix: &str, x_label: &str) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let csv = dir.join(format!("{prefix}.csv"));
        self.table.write_csv(&csv)?;
        written.push(csv);
        for (metric, curves) in curves_by_metric(&self.table) {
            let path = dir.join(format!("{prefix}_{metric}.svg"));
            std::fs::write(&path, line_chart(&format!("{prefix}: {metric}"), x_label, &metric, &curves))?;
            written.push(path);
        }
        for (label, trace) in &self.traces {
            let name = if label.is_empty() { "run".to_string() } else { label.replace(['=', ' '], "_") };
            let path = dir.join(format!("{prefix}_trace_{name}.csv"));
            trace.write_csv(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn replication_seed(master: u64, r: usize) -> u64 {
    sub_seed(master, stream::REPLICATION, r as u64)
}

/// Errors that mean "no usable policy here" rather than a broken setup.
fn is_soft(e: &Error) -> bool {
    matches!(e, Error::Infeasible(_) | Error::NumericalFailure(_) | Error::CoverageRetriesExhausted { .. })
}

/// Outcome of one optimizer replication after rounding and validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub infeasible: bool,
    /// Weighted buyer profit; zero when infeasible.
    pub buyer_profit: f64,
    pub seller_profit: f64,
    pub total_profit: f64,
    /// Largest `|a − round(a)|` of the relaxed sharing matrix.
    pub max_fractional_deviation: f64,
    pub trace: Option<CsscaTrace>,
}

impl RunOutcome {
    fn infeasible() -> Self {
        RunOutcome {
            infeasible: true,
            buyer_profit: 0.0,
            seller_profit: 0.0,
            total_profit: 0.0,
            max_fractional_deviation: f64::NAN,
            trace: None,
        }
    }
}

/// True when a validated policy violates a constraint beyond three
/// standard errors plus the slack allowed for the optimizer's finite run.
pub fn violates(estimate: &PolicyEstimate, scn: &Scenario) -> bool {
    let net = &scn.network;
    let money = (0..net.mno_count()).map(|k| scn.econ.revenue_per_rate(net, k)).sum::<f64>() / net.mno_count() as f64;
    let rate_range = 1..1 + net.mno_count();
    estimate.constraints.iter().enumerate().any(|(i, c)| {
        let slack = if rate_range.contains(&i) { RATE_SLACK * scn.econ.rate_floor } else { MONEY_SLACK * money };
        c.mean > 3.0 * c.stderr + slack
    })
}

fn fallback_heavy(trace: &CsscaTrace) -> bool {
    let n = trace.len();
    let window = ((n as f64 * FALLBACK_WINDOW).ceil() as usize).clamp(1, n.max(1));
    let bad = trace.records[n - window..].iter().filter(|r| r.fallback != Fallback::None).count();
    bad as f64 > FALLBACK_LIMIT * window as f64
}

/// Runs the optimizer once on `scn` and validates the rounded policy on
/// fresh realizations. The seller-profit floor must already be resolved.
pub fn optimize_once(scn: &Scenario, seed: u64, validation_samples: usize, keep_trace: bool) -> Result<RunOutcome> {
    let run = match cssca::run(&scn.network, &scn.econ, &scn.settings, seed) {
        Ok(r) => r,
        Err(e) if is_soft(&e) => return Ok(RunOutcome::infeasible()),
        Err(e) => return Err(e),
    };
    let deviation = run.sharing.max_fractional_deviation();
    let (_, _, report) = cssca::binarize(
        &run.sharing,
        &run.power,
        &scn.network,
        &scn.econ,
        validation_samples,
        sub_seed(seed, stream::VALIDATION, 0),
    )?;
    let est = &report.estimate;
    let infeasible = fallback_heavy(&run.trace) || violates(est, scn);
    let keep = |v: f64| if infeasible { 0.0 } else { v };
    Ok(RunOutcome {
        infeasible,
        buyer_profit: keep(est.weighted_buyer_profit.mean),
        seller_profit: keep(est.weighted_seller_profit.mean),
        total_profit: keep(est.total_profit.mean),
        max_fractional_deviation: deviation,
        trace: keep_trace.then_some(run.trace),
    })
}

/// Sets `ε = φ·U^max` when the scenario asks for it. `Ok(None)` means the
/// largest seller profit could not be found, so the point is infeasible.
fn resolve_floor(scn: &Scenario, umax: Option<f64>) -> Option<Scenario> {
    match scn.phi {
        None => Some(scn.clone()),
        Some(phi) => {
            let mut s = scn.clone();
            s.econ.epsilon = phi * umax?;
            Some(s)
        }
    }
}

/// Largest attainable seller profit per distinct scenario; it does not
/// depend on `φ` or `ε`, so a `φ` sweep solves for it once.
#[derive(Default)]
struct UmaxCache {
    entries: Vec<(Scenario, Option<f64>)>,
}

impl UmaxCache {
    fn get(&mut self, scn: &Scenario, validation_samples: usize, seed: u64) -> Result<Option<f64>> {
        if scn.phi.is_none() {
            return Ok(None);
        }
        let mut key = scn.clone();
        key.phi = None;
        key.econ.epsilon = 0.0;
        if let Some((_, u)) = self.entries.iter().find(|(k, _)| *k == key) {
            return Ok(*u);
        }
        let settings = cssca::CsscaSettings { trace_samples: 0, ..scn.settings.clone() };
        let mut u = None;
        for attempt in 0..UMAX_ATTEMPTS {
            let seed = sub_seed(seed, stream::UMAX, (self.entries.len() * UMAX_ATTEMPTS + attempt) as u64);
            match compute_umax(&key.network, &key.econ, &settings, validation_samples, seed) {
                Ok(found) => {
                    u = Some(found.value);
                    break;
                }
                Err(e) if is_soft(&e) => {}
                Err(e) => return Err(e),
            }
        }
        self.entries.push((key, u));
        Ok(u)
    }
}

fn estimate(values: &[f64]) -> McEstimate {
    McEstimate::from_samples(values)
}

fn push_outcomes(table: &mut ResultTable, sweep: &str, x: f64, series: &str, outcomes: &[RunOutcome]) {
    let col = |f: &dyn Fn(&RunOutcome) -> f64| -> Vec<f64> { outcomes.iter().map(f).collect() };
    table.push(sweep, x, metric_name("buyer_profit", series), estimate(&col(&|o| o.buyer_profit)));
    table.push(sweep, x, metric_name("seller_profit", series), estimate(&col(&|o| o.seller_profit)));
    table.push(sweep, x, metric_name("total_profit", series), estimate(&col(&|o| o.total_profit)));
    let dev: Vec<f64> = outcomes.iter().map(|o| o.max_fractional_deviation).filter(|d| d.is_finite()).collect();
    if !dev.is_empty() {
        table.push(sweep, x, metric_name("max_fractional_deviation", series), estimate(&dev));
    }
    table.push(sweep, x, metric_name("infeasible", series), estimate(&col(&|o| o.infeasible as u8 as f64)));
}

/// The all-shared matrix after rounding the caps.
pub fn complete_sharing(config: &NetworkConfig) -> Result<SharingMatrix> {
    Ok(round_sharing(&SharingMatrix::for_config(config, 1.0), config)?.0)
}

/// No-sharing and complete-sharing rows, both at full seller power, on the
/// validation seeds of the optimizer replications. Profits are reported as
/// evaluated; an `infeasible[..]` row gives the share of replications
/// whose validation flags a constraint.
fn baseline_rows(scn: &Scenario, replications: usize, validation_samples: usize, seed: u64, sweep: &str, x: f64, table: &mut ResultTable) -> Result<()> {
    let net = &scn.network;
    let full = SellerPowerVector::uniform(net, net.max_seller_power_w);
    let policies = [("no_sharing", SharingMatrix::for_config(net, 0.0)), ("complete_sharing", complete_sharing(net)?)];
    for (label, a) in policies {
        let per_rep = (0..replications)
            .into_par_iter()
            .map(|r| {
                let vs = sub_seed(replication_seed(seed, r), stream::VALIDATION, 0);
                estimate_policy(&a, &full, net, &scn.econ, validation_samples, vs)
            })
            .collect::<Result<Vec<_>>>()?;
        let col = |f: &dyn Fn(&PolicyEstimate) -> f64| -> McEstimate { estimate(&per_rep.iter().map(f).collect::<Vec<_>>()) };
        table.push(sweep, x, metric_name("buyer_profit", label), col(&|e| e.weighted_buyer_profit.mean));
        table.push(sweep, x, metric_name("total_profit", label), col(&|e| e.total_profit.mean));
        table.push(sweep, x, metric_name("infeasible", label), col(&|e| violates(e, scn) as u8 as f64));
    }
    Ok(())
}

/// Evaluates no sharing, complete sharing and the optimized policy on the
/// same replication seeds and reports buyer and total profits.
pub fn compare_baselines(scn: &Scenario, replications: usize, validation_samples: usize, seed: u64) -> Result<ResultTable> {
    scn.validate()?;
    if replications == 0 {
        return Err(Error::invalid("replications must be at least 1"));
    }
    let sweep = Param::RateFloor.as_str();
    let x = scn.econ.rate_floor;
    let mut table = ResultTable::default();
    baseline_rows(scn, replications, validation_samples, seed, sweep, x, &mut table)?;
    let umax = UmaxCache::default().get(scn, validation_samples, seed)?;
    let outcomes = match resolve_floor(scn, umax) {
        None => vec![RunOutcome::infeasible(); replications],
        Some(s) => (0..replications)
            .into_par_iter()
            .map(|r| optimize_once(&s, replication_seed(seed, r), validation_samples, false))
            .collect::<Result<Vec<_>>>()?,
    };
    let col = |f: &dyn Fn(&RunOutcome) -> f64| estimate(&outcomes.iter().map(f).collect::<Vec<_>>());
    table.push(sweep, x, metric_name("buyer_profit", "optimized"), col(&|o| o.buyer_profit));
    table.push(sweep, x, metric_name("total_profit", "optimized"), col(&|o| o.total_profit));
    table.push(sweep, x, metric_name("infeasible", "optimized"), col(&|o| o.infeasible as u8 as f64));
    Ok(table)
}

/// Average of the per-operator values of one kind, per realization.
fn rate_rows(scn: &Scenario, replications: usize, seed: u64, sweep: &str, x: f64, series: &str, table: &mut ResultTable) -> Result<()> {
    let net = &scn.network;
    let a = complete_sharing(net)?;
    let p = SellerPowerVector::uniform(net, net.max_seller_power_w);
    let settings = RateQuadratureSettings::default();
    let ns = net.num_sellers;
    let nb = net.num_buyers;
    let mut analytic = Vec::with_capacity(net.mno_count());
    for mno in net.mnos() {
        analytic.push(expected_rate(&a, &p, net, mno, &settings)?);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let one = |v: f64| McEstimate { mean: v, stderr: 0.0, n: 1 };
    table.push(sweep, x, metric_name("seller_rate", series), one(mean(&analytic[..ns])));
    if nb > 0 {
        table.push(sweep, x, metric_name("buyer_rate", series), one(mean(&analytic[ns..])));
    }
    let samples = mc_rate_samples(&a, &p, net, replications, seed)?;
    let seller: Vec<f64> = samples.iter().map(|r| mean(&r[..ns])).collect();
    table.push(sweep, x, metric_name("seller_rate_mc", series), estimate(&seller));
    if nb > 0 {
        let buyer: Vec<f64> = samples.iter().map(|r| mean(&r[ns..])).collect();
        table.push(sweep, x, metric_name("buyer_rate_mc", series), estimate(&buyer));
    }
    Ok(())
}

/// Runs every grid point and series of the preset and aggregates over the
/// replications. Replication `r` uses the same seed at every grid point
/// and in every series, so curves differ by their parameters only.
/// Points where no feasible policy was found are reported as profit zero
/// with an `infeasible` row; the run continues.
pub fn run_experiment(preset: &ExperimentPreset) -> Result<ExperimentOutput> {
    preset.validate()?;
    let sweep = preset.sweep.as_str();
    let reps = preset.replications;
    let vs = preset.validation_samples;
    let mut table = ResultTable::default();
    let mut traces = Vec::new();
    match preset.pipeline {
        Pipeline::Rates => {
            for &x in &preset.grid {
                for s in &preset.series {
                    let mut scn = s.apply(&preset.base)?;
                    scn.apply(preset.sweep, x)?;
                    rate_rows(&scn, reps, preset.seed, sweep, x, &s.label, &mut table)?;
                }
            }
        }
        Pipeline::Convergence => {
            let iterations = preset.base.settings.iterations;
            for s in &preset.series {
                let scn = s.apply(&preset.base)?;
                let umax = UmaxCache::default().get(&scn, vs, preset.seed)?;
                let outcomes: Vec<RunOutcome> = match resolve_floor(&scn, umax) {
                    None => vec![RunOutcome::infeasible(); reps],
                    Some(scn) => (0..reps)
                        .into_par_iter()
                        .map(|r| optimize_once(&scn, replication_seed(preset.seed, r), vs, true))
                        .collect::<Result<_>>()?,
                };
                let with_trace: Vec<&CsscaTrace> = outcomes.iter().filter_map(|o| o.trace.as_ref()).collect();
                if !with_trace.is_empty() {
                    for &t in &preset.grid {
                        let v: Vec<f64> = with_trace.iter().map(|tr| tr.records[t as usize].objective).collect();
                        table.push(sweep, t, metric_name("objective", &s.label), estimate(&v));
                    }
                }
                let final_x = iterations as f64;
                let buyer: Vec<f64> = outcomes.iter().map(|o| o.buyer_profit).collect();
                table.push(sweep, final_x, metric_name("final_buyer_profit", &s.label), estimate(&buyer));
                let inf: Vec<f64> = outcomes.iter().map(|o| o.infeasible as u8 as f64).collect();
                table.push(sweep, final_x, metric_name("infeasible", &s.label), estimate(&inf));
                if let Some(tr) = outcomes.into_iter().next().and_then(|o| o.trace) {
                    traces.push((s.label.clone(), tr));
                }
            }
        }
        Pipeline::Optimize => {
            let series: Vec<Scenario> = preset.series.iter().map(|s| s.apply(&preset.base)).collect::<Result<_>>()?;
            let mut cache = UmaxCache::default();
            let mut jobs = Vec::new();
            for (gi, &x) in preset.grid.iter().enumerate() {
                for (si, scn) in series.iter().enumerate() {
                    let mut point = scn.clone();
                    point.apply(preset.sweep, x)?;
                    let u = cache.get(&point, vs, preset.seed)?;
                    jobs.push((gi, si, resolve_floor(&point, u)));
                }
            }
            let tasks: Vec<(usize, usize)> = (0..jobs.len()).flat_map(|j| (0..reps).map(move |r| (j, r))).collect();
            let outcomes: Vec<RunOutcome> = tasks
                .par_iter()
                .map(|&(j, r)| match &jobs[j].2 {
                    None => Ok(RunOutcome::infeasible()),
                    Some(scn) => optimize_once(scn, replication_seed(preset.seed, r), vs, false),
                })
                .collect::<Result<_>>()?;
            for (j, (gi, si, _)) in jobs.iter().enumerate() {
                let x = preset.grid[*gi];
                push_outcomes(&mut table, sweep, x, &preset.series[*si].label, &outcomes[j * reps..(j + 1) * reps]);
                if preset.baselines && *si == 0 {
                    let mut point = series[0].clone();
                    point.apply(preset.sweep, x)?;
                    baseline_rows(&point, reps, vs, preset.seed, sweep, x, &mut table)?;
                }
            }
        }
    }
    Ok(ExperimentOutput { table, traces })
}
