use nalgebra::{DMatrix, DVector};

use super::{SolveStatus, SubproblemSolution, SubproblemSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct IpmOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of the distance to the boundary taken by a step.
    pub boundary_fraction: f64,
    /// Barrier reduction factor between Newton steps.
    pub mu: f64,
    /// Starting point; must be strictly inside the box and linear
    /// constraints. Defaults to a point near the center.
    pub start: Option<Vec<f64>>,
}

impl Default for IpmOptions {
    fn default() -> Self {
        IpmOptions { tol: 1e-8, max_iter: 100, boundary_fraction: 0.99, mu: 10.0, start: None }
    }
}

/// Threshold on `η*` below which the surrogate constraints are taken to be
/// strictly satisfiable.
const FEASIBLE_ETA: f64 = -1e-10;

/// One smooth function of `z = (x, [η])`:
/// `constant + gradᵀ(z − c) + τ ‖x − c_x‖²` with `c = (c_x, 0)`.
struct Func {
    constant: f64,
    grad: Vec<f64>,
    tau: f64,
}

struct Problem<'a> {
    nx: usize,
    nz: usize,
    center: &'a [f64],
    objective: Func,
    cons: Vec<Func>,
}

impl Problem<'_> {
    fn value(&self, f: &Func, z: &[f64]) -> f64 {
        let mut v = f.constant;
        for i in 0..self.nz {
            let c = if i < self.nx { self.center[i] } else { 0.0 };
            let d = z[i] - c;
            v += f.grad[i] * d;
            if i < self.nx {
                v += f.tau * d * d;
            }
        }
        v
    }

    fn gradient(&self, f: &Func, z: &[f64], out: &mut [f64]) {
        for i in 0..self.nz {
            out[i] = f.grad[i];
            if i < self.nx {
                out[i] += 2.0 * f.tau * (z[i] - self.center[i]);
            }
        }
    }
}

/// Layout of the constraint list built from a spec.
struct Layout {
    quad: usize,
    linear: usize,
    lower: Vec<usize>,
    upper: Vec<usize>,
}

fn build<'a>(spec: &'a SubproblemSpec, phase_one: bool) -> (Problem<'a>, Layout) {
    let nx = spec.dim();
    let nz = if phase_one { nx + 1 } else { nx };
    let c = &spec.center;
    let mut cons = Vec::new();
    for q in &spec.constraints {
        let mut grad = q.gradient.clone();
        if phase_one {
            grad.push(-1.0);
        }
        cons.push(Func { constant: q.value, grad, tau: q.curvature });
    }
    for lc in &spec.linear {
        let mut grad = vec![0.0; nz];
        for &(i, a) in &lc.terms {
            grad[i] += a;
        }
        let constant = lc.eval(c);
        cons.push(Func { constant, grad, tau: 0.0 });
    }
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for i in 0..nx {
        if spec.lower[i].is_finite() {
            let mut grad = vec![0.0; nz];
            grad[i] = -1.0;
            cons.push(Func { constant: spec.lower[i] - c[i], grad, tau: 0.0 });
            lower.push(i);
        }
    }
    for i in 0..nx {
        if spec.upper[i].is_finite() {
            let mut grad = vec![0.0; nz];
            grad[i] = 1.0;
            cons.push(Func { constant: c[i] - spec.upper[i], grad, tau: 0.0 });
            upper.push(i);
        }
    }
    let objective = if phase_one {
        let mut grad = vec![0.0; nz];
        grad[nx] = 1.0;
        Func { constant: 0.0, grad, tau: 0.0 }
    } else {
        Func { constant: spec.objective.value, grad: spec.objective.gradient.clone(), tau: spec.objective.curvature }
    };
    let layout = Layout { quad: spec.constraints.len(), linear: spec.linear.len(), lower, upper };
    (Problem { nx, nz, center: c, objective, cons }, layout)
}

struct Outcome {
    z: Vec<f64>,
    lambda: Vec<f64>,
    residual: f64,
    iterations: usize,
    converged: bool,
    /// Every accepted iterate, starting point first.
    path: Vec<Vec<f64>>,
}

struct Eval {
    f: Vec<f64>,
    grads: Vec<Vec<f64>>,
    r_dual: Vec<f64>,
}

fn evaluate(p: &Problem, z: &[f64], lambda: &[f64]) -> Eval {
    let m = p.cons.len();
    let mut r_dual = vec![0.0; p.nz];
    p.gradient(&p.objective, z, &mut r_dual);
    let mut f = Vec::with_capacity(m);
    let mut grads = Vec::with_capacity(m);
    let mut g = vec![0.0; p.nz];
    for (j, c) in p.cons.iter().enumerate() {
        f.push(p.value(c, z));
        p.gradient(c, z, &mut g);
        for i in 0..p.nz {
            r_dual[i] += lambda[j] * g[i];
        }
        grads.push(g.clone());
    }
    Eval { f, grads, r_dual }
}

fn kkt_residual(e: &Eval, lambda: &[f64]) -> f64 {
    let stat = e.r_dual.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let comp = e.f.iter().zip(lambda).fold(0.0f64, |m, (f, l)| m.max((f * l).abs()));
    let primal = e.f.iter().fold(0.0f64, |m, &f| m.max(f));
    let dual = lambda.iter().fold(0.0f64, |m, &l| m.max(-l));
    stat.max(comp).max(primal).max(dual)
}

fn residual_norm(e: &Eval, lambda: &[f64], t: f64) -> f64 {
    let mut s: f64 = e.r_dual.iter().map(|v| v * v).sum();
    for (f, l) in e.f.iter().zip(lambda) {
        let rc = -l * f - 1.0 / t;
        s += rc * rc;
    }
    s.sqrt()
}

fn solve_newton(mat: DMatrix<f64>, rhs: DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = mat.clone().cholesky() {
        return Some(ch.solve(&rhs));
    }
    let scale = (0..mat.nrows()).map(|i| mat[(i, i)].abs()).fold(1e-300, f64::max);
    let ridge = DMatrix::identity(mat.nrows(), mat.ncols()) * (1e-14 * scale);
    if let Some(ch) = (&mat + ridge).cholesky() {
        return Some(ch.solve(&rhs));
    }
    mat.lu().solve(&rhs)
}

fn interior_point(p: &Problem, z0: Vec<f64>, opts: &IpmOptions) -> Result<Outcome> {
    let m = p.cons.len();
    let mut z = z0;
    let f0: Vec<f64> = p.cons.iter().map(|c| p.value(c, &z)).collect();
    if let Some(j) = f0.iter().position(|&f| !(f < 0.0)) {
        return Err(Error::NumericalFailure(format!("starting point violates constraint {j} ({:e})", f0[j])));
    }
    let mut lambda: Vec<f64> = f0.iter().map(|&f| -1.0 / f).collect();
    let mut path = vec![z.clone()];

    for iter in 0..=opts.max_iter {
        let e = evaluate(p, &z, &lambda);
        let residual = kkt_residual(&e, &lambda);
        if residual <= opts.tol {
            return Ok(Outcome { z, lambda, residual, iterations: iter, converged: true, path });
        }
        if iter == opts.max_iter {
            return Ok(Outcome { z, lambda, residual, iterations: iter, converged: false, path });
        }
        let gap: f64 = -e.f.iter().zip(&lambda).map(|(f, l)| f * l).sum::<f64>();
        let t = if m == 0 { 1.0 } else { opts.mu * m as f64 / gap };

        let nz = p.nz;
        let mut mat = DMatrix::<f64>::zeros(nz, nz);
        let diag = 2.0 * (p.objective.tau + p.cons.iter().zip(&lambda).map(|(c, l)| l * c.tau).sum::<f64>());
        for i in 0..p.nx {
            mat[(i, i)] += diag;
        }
        let mut rhs = DVector::from_iterator(nz, e.r_dual.iter().map(|v| -v));
        let r_cent: Vec<f64> = e.f.iter().zip(&lambda).map(|(f, l)| -l * f - 1.0 / t).collect();
        for j in 0..m {
            let w = -lambda[j] / e.f[j];
            let g = &e.grads[j];
            for a in 0..nz {
                if g[a] == 0.0 {
                    continue;
                }
                rhs[a] -= g[a] * r_cent[j] / e.f[j];
                for b in 0..nz {
                    mat[(a, b)] += w * g[a] * g[b];
                }
            }
        }
        let dz = solve_newton(mat, rhs)
            .ok_or_else(|| Error::NumericalFailure("singular Newton system".into()))?;
        let dlambda: Vec<f64> = (0..m)
            .map(|j| {
                let gd: f64 = e.grads[j].iter().zip(dz.iter()).map(|(g, d)| g * d).sum();
                (r_cent[j] - lambda[j] * gd) / e.f[j]
            })
            .collect();

        let mut s_max: f64 = 1.0;
        for j in 0..m {
            if dlambda[j] < 0.0 {
                s_max = s_max.min(-lambda[j] / dlambda[j]);
            }
        }
        let mut s = opts.boundary_fraction * s_max;
        let trial = |s: f64| -> Vec<f64> { z.iter().zip(dz.iter()).map(|(a, d)| a + s * d).collect() };
        let mut halvings = 0;
        while p.cons.iter().any(|c| !(p.value(c, &trial(s)) < 0.0)) {
            s *= 0.5;
            halvings += 1;
            if halvings > 80 {
                break;
            }
        }
        let base = residual_norm(&e, &lambda, t);
        loop {
            let zn = trial(s);
            let ln: Vec<f64> = lambda.iter().zip(&dlambda).map(|(l, d)| l + s * d).collect();
            let en = evaluate(p, &zn, &ln);
            if residual_norm(&en, &ln, t) <= (1.0 - 0.01 * s) * base || halvings > 80 {
                break;
            }
            s *= 0.5;
            halvings += 1;
        }
        if halvings > 80 || s == 0.0 {
            // No progress possible in floating point.
            return Ok(Outcome { z, lambda, residual, iterations: iter, converged: false, path });
        }
        z = trial(s);
        for j in 0..m {
            lambda[j] += s * dlambda[j];
        }
        path.push(z.clone());
    }
    unreachable!("loop returns at max_iter")
}

/// A point strictly inside the box and the linear constraints.
fn interior_start(spec: &SubproblemSpec) -> Result<Vec<f64>> {
    let n = spec.dim();
    let strictly_inside = |x: &[f64]| {
        (0..n).all(|i| x[i] > spec.lower[i] && x[i] < spec.upper[i]) && spec.linear.iter().all(|lc| lc.eval(x) < 0.0)
    };
    let mut anchor = None;
    let mut s = 0.5;
    for _ in 0..60 {
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let (lo, hi) = (spec.lower[i], spec.upper[i]);
                match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => lo + s * (hi - lo),
                    (true, false) => lo + s,
                    (false, true) => hi - s,
                    (false, false) => spec.center[i],
                }
            })
            .collect();
        if strictly_inside(&x) {
            anchor = Some(x);
            break;
        }
        s *= 0.5;
    }
    let anchor = anchor.ok_or_else(|| Error::invalid("feasible set has no interior point along the box diagonal"))?;
    let clipped: Vec<f64> = (0..n).map(|i| spec.center[i].clamp(spec.lower[i], spec.upper[i])).collect();
    let in_set = spec.linear.iter().all(|lc| lc.eval(&clipped) <= 0.0);
    if !in_set {
        return Ok(anchor);
    }
    let x: Vec<f64> = clipped.iter().zip(&anchor).map(|(c, a)| 0.9 * c + 0.1 * a).collect();
    Ok(if strictly_inside(&x) { x } else { anchor })
}

fn start_point(spec: &SubproblemSpec, opts: &IpmOptions) -> Result<Vec<f64>> {
    match &opts.start {
        Some(x) => {
            if x.len() != spec.dim() {
                return Err(Error::invalid("start point has the wrong dimension"));
            }
            Ok(x.clone())
        }
        None => interior_start(spec),
    }
}

fn package(spec: &SubproblemSpec, out: &Outcome, layout: &Layout, status: SolveStatus, eta: Option<f64>) -> SubproblemSolution {
    let n = spec.dim();
    let l = &out.lambda;
    let (q, k) = (layout.quad, layout.linear);
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for (j, &i) in layout.lower.iter().enumerate() {
        lower[i] = l[q + k + j];
    }
    let off = q + k + layout.lower.len();
    for (j, &i) in layout.upper.iter().enumerate() {
        upper[i] = l[off + j];
    }
    SubproblemSolution {
        x: out.z[..n].to_vec(),
        eta,
        multipliers: l[..q].to_vec(),
        linear_multipliers: l[q..q + k].to_vec(),
        lower_multipliers: lower,
        upper_multipliers: upper,
        kkt_residual: out.residual,
        status,
        iterations: out.iterations,
    }
}

fn phase_one(spec: &SubproblemSpec, x0: &[f64], opts: &IpmOptions) -> Result<(Outcome, Layout)> {
    let (p, layout) = build(spec, true);
    let worst = spec.constraint_values(x0).into_iter().fold(f64::NEG_INFINITY, f64::max);
    let mut z0 = x0.to_vec();
    z0.push(worst + 1.0 + worst.abs());
    Ok((interior_point(&p, z0, opts)?, layout))
}

/// Minimizes `η` subject to every quadratic constraint model `≤ η` and the
/// box and linear constraints. Always feasible.
pub fn solve_feasibility(spec: &SubproblemSpec, tol: f64) -> Result<SubproblemSolution> {
    spec.validate()?;
    if spec.constraints.is_empty() {
        return Err(Error::invalid("feasibility problem needs at least one quadratic constraint"));
    }
    let opts = IpmOptions { tol, ..IpmOptions::default() };
    let x0 = start_point(spec, &opts)?;
    let (out, layout) = phase_one(spec, &x0, &opts)?;
    let status = if out.converged { SolveStatus::Optimal } else { SolveStatus::MaxIter };
    let eta = out.z[spec.dim()];
    Ok(package(spec, &out, &layout, status, Some(eta)))
}

pub fn solve_subproblem(spec: &SubproblemSpec, tol: f64) -> Result<SubproblemSolution> {
    solve_subproblem_with(spec, &IpmOptions { tol, ..IpmOptions::default() })
}

/// Solves the subproblem. The feasibility problem is solved first when
/// there are quadratic constraints; if its optimum is not strictly negative the result has status `InfeasibleDetected` and
/// carries the feasibility solution (`eta` set).
pub fn solve_subproblem_with(spec: &SubproblemSpec, opts: &IpmOptions) -> Result<SubproblemSolution> {
    spec.validate()?;
    let mut x0 = start_point(spec, opts)?;
    // Even a feasible start is recentered: starting next to a curved
    // constraint makes the initial multipliers huge and the steps tiny.
    if !spec.constraints.is_empty() {
        let (out, layout) = phase_one(spec, &x0, opts)?;
        let n = spec.dim();
        let eta = out.z[n];
        if !(eta < FEASIBLE_ETA) {
            let status = if out.converged { SolveStatus::InfeasibleDetected } else { SolveStatus::MaxIter };
            return Ok(package(spec, &out, &layout, status, Some(eta)));
        }
        // First phase-one iterate with a comfortable margin.
        x0 = out
            .path
            .iter()
            .find(|z| z[n] <= 0.5 * eta)
            .map(|z| z[..n].to_vec())
            .unwrap_or_else(|| out.z[..n].to_vec());
    }
    let (p, layout) = build(spec, false);
    let out = interior_point(&p, x0, opts)?;
    let status = if out.converged { SolveStatus::Optimal } else { SolveStatus::MaxIter };
    Ok(package(spec, &out, &layout, status, None))
}
