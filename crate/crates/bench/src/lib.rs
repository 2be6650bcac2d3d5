//! Fixtures shared by the benchmarks.

use specshare::subsolver::{QuadraticModel, SubproblemSpec};
use specshare::{NetworkConfig, SellerPowerVector, SharingMatrix};

/// Desk topology with every band half shared at a tenth of the power cap.
pub fn desk_point(sellers: usize, buyers: usize, bands: usize) -> (NetworkConfig, SharingMatrix, SellerPowerVector) {
    let cfg = NetworkConfig::standard(sellers, buyers, bands);
    let a = SharingMatrix::for_config(&cfg, 0.5);
    let p = SellerPowerVector::uniform(&cfg, 0.1 * cfg.max_seller_power_w);
    (cfg, a, p)
}

/// A subproblem of dimension `dim` on the unit box with `constraints`
/// quadratic constraints, all feasible at the centre.
pub fn subproblem(dim: usize, constraints: usize) -> SubproblemSpec {
    let center = vec![0.5; dim];
    let wave = |k: usize, i: usize| ((k * 7 + i * 3) as f64).sin();
    let objective = QuadraticModel::new(0.0, (0..dim).map(|i| wave(0, i)).collect(), 1.0);
    let mut spec = SubproblemSpec::new(center, objective, vec![0.0; dim], vec![1.0; dim]);
    for k in 1..=constraints {
        spec.constraints.push(QuadraticModel::new(-0.05, (0..dim).map(|i| wave(k, i)).collect(), 1.0));
    }
    spec
}
