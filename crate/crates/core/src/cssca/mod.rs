//! Constrained stochastic successive convex approximation.
//!
//! Each iteration draws a network realization, folds the per-sample values
//! and gradients of the objective and of every stochastic constraint into
//! running averages, minimizes the resulting strongly convex quadratic
//! models over the deterministic feasible set, and moves a step of size
//! `β^t` towards the minimizer. When the models admit no feasible point the
//! step heads for the minimizer of the largest constraint model instead.
//!
//! The decision vector concatenates the sharing matrix (row-major) and one
//! normalized power coordinate per sub-band, all in `[0, 1]`.

pub(crate) mod binarize;
mod problem;
mod trace;

pub use binarize::{binarize, BinarizeReport, ConstraintEstimate};
pub use problem::{PowerMap, Sense};
pub use trace::{CsscaTrace, Fallback, TraceRecord};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{SellerPowerVector, SharingMatrix};
use crate::economics::EconParams;
use crate::error::{Error, Result};
use crate::geometry::{sample_network_covered, NetworkConfig};
use crate::rate_analysis::buyer_power_moment;
use crate::rng::{stream, sub_seed};
use crate::subsolver::{
    solve_subproblem_with, IpmOptions, LinearConstraint, QuadraticModel, SolveStatus, SubproblemSpec,
};
use problem::Problem;

/// Step sizes `ρ^t = c_ρ (1+t)^(-κ_ρ)` for the surrogate recursion and
/// `β^t = c_β (1+t)^(-κ_β)` for the iterate update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub rho_exponent: f64,
    pub beta_exponent: f64,
    pub rho_scale: f64,
    pub beta_scale: f64,
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule { rho_exponent: 0.6, beta_exponent: 0.8, rho_scale: 1.0, beta_scale: 1.0 }
    }
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_exponent > 0.5 && self.rho_exponent <= 1.0) {
            return Err(Error::config("rho_exponent", "must lie in (0.5, 1]"));
        }
        if !(self.beta_exponent > self.rho_exponent && self.beta_exponent <= 1.0) {
            return Err(Error::config("beta_exponent", "must lie in (rho_exponent, 1]"));
        }
        for (key, c) in [("rho_scale", self.rho_scale), ("beta_scale", self.beta_scale)] {
            if !(c > 0.0 && c <= 1.0) {
                return Err(Error::config(key, "must lie in (0, 1]"));
            }
        }
        Ok(())
    }

    pub fn rho(&self, t: usize) -> f64 {
        self.rho_scale * (1.0 + t as f64).powf(-self.rho_exponent)
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.beta_scale * (1.0 + t as f64).powf(-self.beta_exponent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsscaSettings {
    pub schedule: StepSchedule,
    /// Number of iterations `T`.
    pub iterations: usize,
    /// Curvature of the objective model.
    pub tau_objective: f64,
    /// Curvature of every constraint model.
    pub tau_constraint: f64,
    /// Realizations averaged per iteration.
    pub batch_size: usize,
    /// Size of the fixed set of realizations on which the traced objective
    /// is evaluated at every iterate. Zero traces the running objective
    /// estimate of the surrogate recursion instead.
    pub trace_samples: usize,
    pub subsolver_tol: f64,
    pub subsolver_max_iter: usize,
    pub power_map: PowerMap,
    pub sense: Sense,
}

impl Default for CsscaSettings {
    fn default() -> Self {
        CsscaSettings {
            schedule: StepSchedule::default(),
            iterations: 500,
            tau_objective: 1.0,
            tau_constraint: 1.0,
            batch_size: 16,
            trace_samples: 32,
            subsolver_tol: 1e-8,
            subsolver_max_iter: 100,
            power_map: PowerMap::default(),
            sense: Sense::BuyerProfit,
        }
    }
}

impl CsscaSettings {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if self.iterations == 0 {
            return Err(Error::config("iterations", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be positive"));
        }
        for (key, tau) in [("tau_objective", self.tau_objective), ("tau_constraint", self.tau_constraint)] {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(Error::config(key, "must be positive"));
            }
        }
        if !(self.subsolver_tol > 0.0) {
            return Err(Error::config("subsolver_tol", "must be positive"));
        }
        self.power_map.validate()
    }
}

/// Running averages of the objective (index 0) and stochastic constraint
/// values and gradients, in the normalized units of the decision vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateState {
    /// Index of the last folded sample; `-1` before the first update.
    pub t: i64,
    pub values: Vec<f64>,
    /// Gradient with respect to the decision vector, sharing entries first.
    pub gradients: Vec<Vec<f64>>,
    pub tau: Vec<f64>,
}

impl SurrogateState {
    pub fn zeroed(functions: usize, dim: usize, tau_objective: f64, tau_constraint: f64) -> Self {
        let mut tau = vec![tau_constraint; functions];
        tau[0] = tau_objective;
        SurrogateState { t: -1, values: vec![0.0; functions], gradients: vec![vec![0.0; dim]; functions], tau }
    }

    pub fn constraint_count(&self) -> usize {
        self.values.len() - 1
    }

    /// Gradient of function `i` with respect to `a[l][b]`.
    pub fn sharing_gradient(&self, i: usize, l: usize, b: usize, num_buyers: usize) -> f64 {
        self.gradients[i][l * num_buyers + b]
    }

    /// Gradient of function `i` with respect to the normalized power of
    /// sub-band `l`.
    pub fn power_gradient(&self, i: usize, l: usize, sharing_len: usize) -> f64 {
        self.gradients[i][sharing_len + l]
    }
}

#[derive(Debug, Clone)]
pub struct CsscaResult {
    pub sharing: SharingMatrix,
    pub power: SellerPowerVector,
    pub trace: CsscaTrace,
    pub state: SurrogateState,
}

impl CsscaResult {
    pub fn fallback_count(&self) -> usize {
        self.trace.records.iter().filter(|r| r.fallback != Fallback::None).count()
    }
}

/// Initial sharing value of seller `s`'s sub-bands: half sharing, reduced
/// so that the lease and borrow caps hold.
pub fn initial_sharing_value(config: &NetworkConfig, s: usize) -> f64 {
    if config.num_buyers == 0 {
        return 0.0;
    }
    let lease = config.lease_cap[s] as f64 / config.num_buyers as f64;
    let borrow = config.borrow_cap[s] as f64 / config.subbands_per_seller[s] as f64;
    0.5f64.min(lease).min(borrow)
}

/// Initial seller power per sub-band: the effective buyer power
/// `E[p^(2/α)]^(α/2)` on that sub-band, capped at `P^max / 2`. Starting far
/// above the buyers' level leaves the buyer rates, and their gradients,
/// numerically zero.
pub fn initial_power(config: &NetworkConfig) -> Result<SellerPowerVector> {
    let half = config.max_seller_power_w / 2.0;
    if config.num_buyers == 0 {
        return Ok(SellerPowerVector::uniform(config, half));
    }
    let owners = config.band_owners();
    let mut p = Vec::with_capacity(owners.len());
    for &s in &owners {
        let effective = buyer_power_moment(config, s)?.powf(config.pathloss_alpha / 2.0);
        p.push(if effective > 0.0 { effective.min(half) } else { half });
    }
    Ok(SellerPowerVector(p))
}

/// Starting point and zeroed surrogate state. The seed is accepted for
/// interface symmetry; the start is deterministic.
pub fn init(
    config: &NetworkConfig,
    econ: &EconParams,
    settings: &CsscaSettings,
    _seed: u64,
) -> Result<(SharingMatrix, SellerPowerVector, SurrogateState)> {
    config.validate()?;
    econ.validate(config)?;
    settings.validate()?;
    let mut a = SharingMatrix::for_config(config, 0.0);
    for s in 0..config.num_sellers {
        let v = initial_sharing_value(config, s);
        for l in config.seller_bands(s) {
            for b in 0..config.num_buyers {
                a.set(l, b, v);
            }
        }
    }
    let p = initial_power(config)?;
    let problem = Problem::new(config, econ, settings)?;
    let state = SurrogateState::zeroed(problem.function_count(), problem.dim(), settings.tau_objective, settings.tau_constraint);
    Ok((a, p, state))
}

/// Folds the batch of realizations drawn for iteration `t` into the state.
fn fold_batch(
    problem: &Problem,
    state: &mut SurrogateState,
    x: &[f64],
    t: usize,
    rho: f64,
    seed: u64,
) -> Result<()> {
    let batch = problem.settings.batch_size;
    let mut values = vec![0.0; state.values.len()];
    let mut grads = vec![vec![0.0; problem.dim()]; state.values.len()];
    for j in 0..batch {
        let xi = sample_network_covered(problem.config, sub_seed(seed, stream::CSSCA, (t * batch + j) as u64))?;
        let (v, g) = problem.sample_functions(&xi, x)?;
        for i in 0..values.len() {
            values[i] += v[i] / batch as f64;
            for (acc, gi) in grads[i].iter_mut().zip(&g[i]) {
                *acc += gi / batch as f64;
            }
        }
    }
    apply_recursion(state, &values, &grads, rho);
    state.t = t as i64;
    Ok(())
}

/// `f ← (1−ρ) f + ρ v` for values and gradients.
fn apply_recursion(state: &mut SurrogateState, values: &[f64], grads: &[Vec<f64>], rho: f64) {
    for i in 0..state.values.len() {
        state.values[i] = (1.0 - rho) * state.values[i] + rho * values[i];
        for (acc, g) in state.gradients[i].iter_mut().zip(&grads[i]) {
            *acc = (1.0 - rho) * *acc + rho * g;
        }
    }
}

/// Folds the realization `xi` into the surrogate state at the iterate
/// `(a, p)` with step `ρ`.
pub fn update_surrogates(
    state: &mut SurrogateState,
    xi: &crate::channel::NetworkSample,
    a: &SharingMatrix,
    p: &SellerPowerVector,
    rho: f64,
    config: &NetworkConfig,
    econ: &EconParams,
    settings: &CsscaSettings,
) -> Result<()> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::invalid(format!("rho must lie in (0, 1], got {rho}")));
    }
    let problem = Problem::new(config, econ, settings)?;
    let x = problem.encode(a, p);
    let (v, g) = problem.sample_functions(xi, &x)?;
    apply_recursion(state, &v, &g, rho);
    state.t += 1;
    Ok(())
}

/// Builds the convex subproblem around `x` from the surrogate state.
pub fn build_subproblem(
    state: &SurrogateState,
    x: &[f64],
    config: &NetworkConfig,
) -> SubproblemSpec {
    let n = x.len();
    let nb = config.num_buyers;
    let objective = QuadraticModel::new(state.values[0], state.gradients[0].clone(), state.tau[0]);
    let mut spec = SubproblemSpec::new(x.to_vec(), objective, vec![0.0; n], vec![1.0; n]);
    for i in 1..state.values.len() {
        spec.constraints.push(QuadraticModel::new(state.values[i], state.gradients[i].clone(), state.tau[i]));
    }
    for s in 0..config.num_sellers {
        for b in 0..nb {
            let terms = config.seller_bands(s).map(|l| (l * nb + b, 1.0)).collect();
            spec.linear.push(LinearConstraint { terms, rhs: config.borrow_cap[s] as f64 });
        }
        for l in config.seller_bands(s) {
            if nb > 0 {
                let terms = (0..nb).map(|b| (l * nb + b, 1.0)).collect();
                spec.linear.push(LinearConstraint { terms, rhs: config.lease_cap[s] as f64 });
            }
        }
    }
    spec
}

/// Step `x^{t+1} = (1−β) x^t + β x̄^t` from an already updated state.
/// Returns the new point, the fallback kind and the subsolver's KKT
/// residual when it converged.
pub fn iterate(
    state: &SurrogateState,
    x: &[f64],
    beta: f64,
    config: &NetworkConfig,
    settings: &CsscaSettings,
) -> (Vec<f64>, Fallback) {
    let spec = build_subproblem(state, x, config);
    let opts = IpmOptions {
        tol: settings.subsolver_tol,
        max_iter: settings.subsolver_max_iter,
        start: Some(interior_start(x, config)),
        ..IpmOptions::default()
    };
    let (target, fallback) = match solve_subproblem_with(&spec, &opts) {
        Ok(sol) => match sol.status {
            SolveStatus::Optimal => (sol.x, Fallback::None),
            SolveStatus::InfeasibleDetected => (sol.x, Fallback::Feasibility),
            SolveStatus::MaxIter => (x.to_vec(), Fallback::NullStep),
        },
        Err(_) => (x.to_vec(), Fallback::NullStep),
    };
    let next = x.iter().zip(&target).map(|(xi, ti)| ((1.0 - beta) * xi + beta * ti).clamp(0.0, 1.0)).collect();
    (next, fallback)
}

/// A point strictly inside the box and caps, close to `x`.
fn interior_start(x: &[f64], config: &NetworkConfig) -> Vec<f64> {
    let n = x.len();
    let nb = config.num_buyers;
    let sharing_len = config.total_subbands() * nb;
    let mut start: Vec<f64> = x.iter().map(|v| 0.98 * v + 0.01).collect();
    // Shrink sharing entries towards zero until every cap is strict.
    let mut caps = Vec::new();
    for s in 0..config.num_sellers {
        for b in 0..nb {
            caps.push((config.seller_bands(s).map(|l| l * nb + b).collect::<Vec<_>>(), config.borrow_cap[s] as f64));
        }
        for l in config.seller_bands(s) {
            caps.push(((0..nb).map(|b| l * nb + b).collect(), config.lease_cap[s] as f64));
        }
    }
    for (idx, cap) in caps {
        let used: f64 = idx.iter().map(|&i| start[i]).sum();
        if used >= cap * 0.999 {
            let f = 0.999 * cap / used;
            for i in idx {
                start[i] *= f;
            }
        }
    }
    debug_assert!(start[..sharing_len].iter().chain(&start[sharing_len..n]).all(|v| *v > 0.0 && *v < 1.0));
    start
}

/// Runs `T` iterations from the default start.
pub fn run(config: &NetworkConfig, econ: &EconParams, settings: &CsscaSettings, seed: u64) -> Result<CsscaResult> {
    let (a, p, _) = init(config, econ, settings, seed)?;
    run_from(config, econ, settings, seed, &a, &p)
}

/// Runs `T` iterations from a given start in the feasible set.
pub fn run_from(
    config: &NetworkConfig,
    econ: &EconParams,
    settings: &CsscaSettings,
    seed: u64,
    a0: &SharingMatrix,
    p0: &SellerPowerVector,
) -> Result<CsscaResult> {
    let problem = Problem::new(config, econ, settings)?;
    p0.validate(config)?;
    if a0.cap_residuals(config).iter().any(|&r| r > 1e-9) {
        return Err(Error::invalid("start violates a sharing cap"));
    }
    let mut state = SurrogateState::zeroed(problem.function_count(), problem.dim(), settings.tau_objective, settings.tau_constraint);
    let mut x = problem.encode(a0, p0);
    let mut trace = CsscaTrace::default();
    let trace_set = (0..settings.trace_samples)
        .map(|i| sample_network_covered(config, sub_seed(seed, stream::TRACE, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    for t in 0..settings.iterations {
        let start = Instant::now();
        fold_batch(&problem, &mut state, &x, t, settings.schedule.rho(t), seed)?;
        let (next, fallback) = iterate(&state, &x, settings.schedule.beta(t), config, settings);
        let step_norm = x.iter().zip(&next).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        x = next;
        let objective = if trace_set.is_empty() {
            problem.objective_in_money(state.values[0])
        } else {
            problem.mean_objective(&trace_set, &x)?
        };
        trace.records.push(TraceRecord {
            t,
            objective,
            max_constraint_residual: problem.max_violation(&state.values),
            step_norm,
            fallback,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    let (sharing, power) = problem.decode(&x);
    Ok(CsscaResult { sharing, power, trace, state })
}

#[cfg(test)]
mod tests;
