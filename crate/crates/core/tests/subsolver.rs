mod common;

use common::{brute_force_2d, random_2d_instance};
use specshare::subsolver::{solve_subproblem, SolveStatus};

#[test]
fn random_2d_instances_match_exhaustive_search() {
    let mut solved = 0;
    for seed in 0..30 {
        let spec = random_2d_instance(seed);
        let sol = solve_subproblem(&spec, 1e-8).unwrap();
        match (sol.status, brute_force_2d(&spec)) {
            (SolveStatus::Optimal, Some((xb, vb))) => {
                assert!(sol.kkt_residual <= 1e-8);
                let v = spec.objective.eval(&spec.center, &sol.x);
                assert!((sol.x[0] - xb[0]).abs() < 2e-3 && (sol.x[1] - xb[1]).abs() < 2e-3, "seed {seed}: {:?} vs {xb:?}", sol.x);
                assert!((v - vb).abs() < 1e-5, "seed {seed}: {v} vs {vb}");
                solved += 1;
            }
            (SolveStatus::InfeasibleDetected, None) => {}
            (s, b) => panic!("seed {seed}: status {s:?}, exhaustive search {b:?}"),
        }
    }
    assert!(solved >= 20, "{solved}");
}
