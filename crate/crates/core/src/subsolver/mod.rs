//! Solver for the strongly convex subproblems of the stochastic SCA loop:
//!
//! ```text
//! minimize    f₀ + g₀ᵀ(x − c) + τ₀‖x − c‖²
//! subject to  fᵢ + gᵢᵀ(x − c) + τᵢ‖x − c‖² ≤ 0
//!             Gx ≤ h,  lower ≤ x ≤ upper
//! ```
//!
//! and its feasibility variant, which minimizes `η` subject to every
//! quadratic constraint being at most `η`. Both are handled by a primal-dual
//! interior-point method on dense Newton systems.

mod dump;
mod ipm;

pub use dump::{read_spec, write_spec};
pub use ipm::{solve_feasibility, solve_subproblem, solve_subproblem_with, IpmOptions};

use crate::error::{Error, Result};

/// `value + gradientᵀ(x − c) + curvature ‖x − c‖²` around the centre point `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub curvature: f64,
}

impl QuadraticModel {
    pub fn new(value: f64, gradient: Vec<f64>, curvature: f64) -> Self {
        QuadraticModel { value, gradient, curvature }
    }

    pub fn eval(&self, center: &[f64], x: &[f64]) -> f64 {
        let mut lin = 0.0;
        let mut sq = 0.0;
        for ((g, c), xi) in self.gradient.iter().zip(center).zip(x) {
            let d = xi - c;
            lin += g * d;
            sq += d * d;
        }
        self.value + lin + self.curvature * sq
    }
}

/// Sparse linear inequality `Σ coeff·x[index] ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, a)| a * x[i]).sum::<f64>() - self.rhs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSpec {
    pub center: Vec<f64>,
    pub objective: QuadraticModel,
    pub constraints: Vec<QuadraticModel>,
    pub linear: Vec<LinearConstraint>,
    /// Entries may be `-inf`.
    pub lower: Vec<f64>,
    /// Entries may be `+inf`.
    pub upper: Vec<f64>,
}

impl SubproblemSpec {
    /// A spec with only box bounds.
    pub fn new(center: Vec<f64>, objective: QuadraticModel, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        SubproblemSpec { center, objective, constraints: Vec::new(), linear: Vec::new(), lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        let models = std::iter::once(&self.objective).chain(&self.constraints);
        for (i, q) in models.enumerate() {
            if q.gradient.len() != n {
                return Err(Error::invalid(format!("model {i} has gradient of length {}, expected {n}", q.gradient.len())));
            }
            if !(q.curvature > 0.0 && q.curvature.is_finite()) {
                return Err(Error::invalid(format!("model {i} needs positive curvature, got {}", q.curvature)));
            }
            if !q.value.is_finite() || q.gradient.iter().any(|g| !g.is_finite()) {
                return Err(Error::invalid(format!("model {i} has non-finite data")));
            }
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::invalid("bound vectors do not match the dimension"));
        }
        for i in 0..n {
            if !(self.lower[i] < self.upper[i]) || self.lower[i] == f64::INFINITY || self.upper[i] == f64::NEG_INFINITY {
                return Err(Error::invalid(format!("empty or degenerate bounds at coordinate {i}")));
            }
        }
        for (k, lc) in self.linear.iter().enumerate() {
            if lc.terms.iter().any(|&(i, a)| i >= n || !a.is_finite()) || !lc.rhs.is_finite() {
                return Err(Error::invalid(format!("linear constraint {k} is malformed")));
            }
        }
        if self.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("center must be finite"));
        }
        Ok(())
    }

    /// Value of every quadratic constraint model at `x`.
    pub fn constraint_values(&self, x: &[f64]) -> Vec<f64> {
        self.constraints.iter().map(|q| q.eval(&self.center, x)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    InfeasibleDetected,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub x: Vec<f64>,
    /// Optimal `η` of the feasibility problem, when it was solved.
    pub eta: Option<f64>,
    /// Multipliers of the quadratic constraints.
    pub multipliers: Vec<f64>,
    pub linear_multipliers: Vec<f64>,
    pub lower_multipliers: Vec<f64>,
    pub upper_multipliers: Vec<f64>,
    /// Max of stationarity, complementarity and primal violation norms of
    /// the problem that produced `x`.
    pub kkt_residual: f64,
    pub status: SolveStatus,
    pub iterations: usize,
}
