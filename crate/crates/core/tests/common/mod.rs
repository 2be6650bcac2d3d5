#![allow(dead_code)]

use rand::Rng;
use specshare::rng::rng_from_seed;
use specshare::subsolver::{QuadraticModel, SubproblemSpec};

/// Random two-dimensional instance: one quadratic constraint and the box
/// `[-1, 1]²`.
pub fn random_2d_instance(seed: u64) -> SubproblemSpec {
    let mut rng = rng_from_seed(seed);
    let center = vec![rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
    let g0 = vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
    let objective = QuadraticModel::new(0.0, g0, rng.random_range(0.3..2.0));
    let ball = QuadraticModel::new(
        rng.random_range(-0.3..0.05),
        vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
        rng.random_range(0.5..2.0),
    );
    let mut spec = SubproblemSpec::new(center, objective, vec![-1.0, -1.0], vec![1.0, 1.0]);
    spec.constraints.push(ball);
    spec
}

fn feasible(spec: &SubproblemSpec, x: &[f64; 2], slack: f64) -> bool {
    (0..2).all(|i| x[i] >= spec.lower[i] - slack && x[i] <= spec.upper[i] + slack)
        && spec.constraint_values(x).iter().all(|&v| v <= slack)
}

fn objective(spec: &SubproblemSpec, x: &[f64; 2]) -> f64 {
    spec.objective.eval(&spec.center, x)
}

/// Minimizes over a 1-D curve `t ↦ point(t)`, `t ∈ [lo, hi]`, by a dense
/// scan followed by repeated local rescans around the best sample.
fn scan_curve(spec: &SubproblemSpec, lo: f64, hi: f64, point: impl Fn(f64) -> [f64; 2]) -> Option<([f64; 2], f64)> {
    let mut best: Option<(f64, [f64; 2], f64)> = None;
    let scan = |a: f64, b: f64, n: usize, best: &mut Option<(f64, [f64; 2], f64)>| {
        for i in 0..=n {
            let t = a + (b - a) * i as f64 / n as f64;
            let x = point(t);
            if !feasible(spec, &x, 1e-12) {
                continue;
            }
            let v = objective(spec, &x);
            if best.as_ref().is_none_or(|b| v < b.2) {
                *best = Some((t, x, v));
            }
        }
    };
    let n = 200_000;
    scan(lo, hi, n, &mut best);
    let mut h = (hi - lo) / n as f64;
    for _ in 0..4 {
        let (t, _, _) = best?;
        scan((t - 2.0 * h).max(lo), (t + 2.0 * h).min(hi), 2000, &mut best);
        h /= 500.0;
    }
    best.map(|(_, x, v)| (x, v))
}

/// Exhaustive minimizer of a 2-D instance: a 1e-3 grid over the box plus
/// dense scans of every piece of the boundary (constraint circle and box
/// edges) and the unconstrained minimizer. Returns `None` when no grid or
/// boundary sample is feasible.
pub fn brute_force_2d(spec: &SubproblemSpec) -> Option<([f64; 2], f64)> {
    let mut candidates: Vec<([f64; 2], f64)> = Vec::new();
    let (lo, hi) = ([spec.lower[0], spec.lower[1]], [spec.upper[0], spec.upper[1]]);

    let step = 1e-3;
    let n0 = ((hi[0] - lo[0]) / step).round() as usize;
    let n1 = ((hi[1] - lo[1]) / step).round() as usize;
    for i in 0..=n0 {
        for j in 0..=n1 {
            let x = [lo[0] + i as f64 * step, lo[1] + j as f64 * step];
            if feasible(spec, &x, 0.0) {
                candidates.push((x, objective(spec, &x)));
            }
        }
    }
    let free = [
        spec.center[0] - spec.objective.gradient[0] / (2.0 * spec.objective.curvature),
        spec.center[1] - spec.objective.gradient[1] / (2.0 * spec.objective.curvature),
    ];
    if feasible(spec, &free, 0.0) {
        candidates.push((free, objective(spec, &free)));
    }
    for q in &spec.constraints {
        // f + gᵀd + τ|d|² = 0 is a circle around c − g/(2τ).
        let mid = [spec.center[0] - q.gradient[0] / (2.0 * q.curvature), spec.center[1] - q.gradient[1] / (2.0 * q.curvature)];
        let g2 = q.gradient[0] * q.gradient[0] + q.gradient[1] * q.gradient[1];
        let r2 = (g2 / (4.0 * q.curvature) - q.value) / q.curvature;
        if r2 > 0.0 {
            let r = r2.sqrt();
            candidates.extend(scan_curve(spec, 0.0, std::f64::consts::TAU, |t| [mid[0] + r * t.cos(), mid[1] + r * t.sin()]));
        }
    }
    for edge in 0..4 {
        let c = match edge {
            0 => scan_curve(spec, lo[1], hi[1], |t| [lo[0], t]),
            1 => scan_curve(spec, lo[1], hi[1], |t| [hi[0], t]),
            2 => scan_curve(spec, lo[0], hi[0], |t| [t, lo[1]]),
            _ => scan_curve(spec, lo[0], hi[0], |t| [t, hi[1]]),
        };
        candidates.extend(c);
    }
    candidates.into_iter().min_by(|a, b| a.1.total_cmp(&b.1))
}
