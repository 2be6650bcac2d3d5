mod common;

use proptest::prelude::*;
use specshare::channel::{evaluate_sample, instantaneous_rate, sinr_buyer, sinr_seller};
use specshare::cssca::{PowerMap, StepSchedule};
use specshare::economics::{buyer_profit, penalty_term, seller_profit, EconParams};
use specshare::geometry::{sample_network_covered, sample_ppp};
use specshare::subsolver::{solve_subproblem, SolveStatus};
use specshare::{Mno, NetworkConfig, NetworkSample, SellerPowerVector, SharingMatrix};

fn sharing(cfg: &NetworkConfig, values: &[f64]) -> SharingMatrix {
    let (l, b) = (cfg.total_subbands(), cfg.num_buyers);
    SharingMatrix::from_vec(l, b, values[..l * b].to_vec()).unwrap()
}

fn powers(cfg: &NetworkConfig, exps: &[f64]) -> SellerPowerVector {
    SellerPowerVector(exps[..cfg.total_subbands()].iter().map(|e| cfg.max_seller_power_w * 10f64.powf(*e)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ppp_points_stay_in_disc(intensity in 0.0..200.0f64, radius in 10.0..3000.0f64, seed in any::<u64>()) {
        let pts = sample_ppp(intensity, radius, seed).unwrap();
        prop_assert!(pts.distances().all(|d| d <= radius));
    }

    #[test]
    fn network_sample_is_a_function_of_the_seed(seed in any::<u64>()) {
        let cfg = NetworkConfig::standard(2, 2, 1);
        let a = sample_network_covered(&cfg, seed).unwrap();
        let b = sample_network_covered(&cfg, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn seller_rate_nonincreasing_in_sharing(
        seed in any::<u64>(),
        a in prop::collection::vec(0.0..1.0f64, 4),
        p in prop::collection::vec(-6.0..0.0f64, 2),
        entry in 0usize..4,
        bump in 0.0..0.5f64,
    ) {
        let cfg = NetworkConfig::standard(2, 2, 1);
        let xi = sample_network_covered(&cfg, seed).unwrap();
        let (a0, p) = (sharing(&cfg, &a), powers(&cfg, &p));
        let mut raised = a.clone();
        raised[entry] = (raised[entry] + bump).min(1.0);
        let a1 = sharing(&cfg, &raised);
        for s in 0..2 {
            let before = instantaneous_rate(&xi, &a0, &p, Mno::Seller(s)).unwrap();
            let after = instantaneous_rate(&xi, &a1, &p, Mno::Seller(s)).unwrap();
            prop_assert!(after <= before * (1.0 + 1e-12));
        }
    }

    #[test]
    fn sinr_unchanged_by_joint_power_scaling(seed in any::<u64>(), c in 1e-3..1e3f64, a in prop::collection::vec(0.0..1.0f64, 2), p in prop::collection::vec(-6.0..0.0f64, 2)) {
        let cfg = NetworkConfig::standard(1, 2, 2);
        let xi = sample_network_covered(&cfg, seed).unwrap();
        let (a, p) = (SharingMatrix::from_vec(2, 2, vec![a[0], a[1], a[1], a[0]]).unwrap(), powers(&cfg, &p));
        let mut scaled_cfg = cfg.clone();
        scaled_cfg.noise_power_w *= c;
        let bp = xi.buyer_power.iter().map(|v| v.iter().map(|x| x * c).collect()).collect();
        let xs = NetworkSample::from_parts(&scaled_cfg, xi.bs_points.clone(), xi.fading.clone(), bp, 0).unwrap();
        let ps = SellerPowerVector(p.0.iter().map(|x| x * c).collect());
        for l in 0..2 {
            let (g0, g1) = (sinr_seller(&xi, &a, &p, 0, l).unwrap(), sinr_seller(&xs, &a, &ps, 0, l).unwrap());
            prop_assert!((g0 - g1).abs() <= 1e-10 * g0.abs().max(1e-300));
            for b in 0..2 {
                let (g0, g1) = (sinr_buyer(&xi, &a, &p, b, l).unwrap(), sinr_buyer(&xs, &a, &ps, b, l).unwrap());
                prop_assert!((g0 - g1).abs() <= 1e-10 * g0.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn rates_are_finite_and_nonnegative(seed in any::<u64>(), a in prop::collection::vec(0.0..=1.0f64, 4), p in prop::collection::vec(-8.0..0.0f64, 2)) {
        let cfg = NetworkConfig::standard(2, 2, 1);
        let xi = sample_network_covered(&cfg, seed).unwrap();
        let eval = evaluate_sample(&xi, &sharing(&cfg, &a), &powers(&cfg, &p), true).unwrap();
        prop_assert!(eval.seller_rates.iter().chain(&eval.buyer_rates).all(|r| r.is_finite() && *r >= 0.0));
    }

    #[test]
    fn profits_linear_in_rate_and_sharing(
        r1 in 0.0..5.0f64, r2 in 0.0..5.0f64, t in 0.0..1.0f64,
        a in prop::collection::vec(0.0..1.0f64, 4), b in prop::collection::vec(0.0..1.0f64, 4),
    ) {
        let cfg = NetworkConfig::standard(2, 2, 1);
        let econ = EconParams::standard(2, 2);
        let (am, bm) = (sharing(&cfg, &a), sharing(&cfg, &b));
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let mm = sharing(&cfg, &mix);
        let r = t * r1 + (1.0 - t) * r2;
        let tol = |v: f64| 1e-9 * v.abs().max(1.0);
        for k in 0..2 {
            let lhs = buyer_profit(r, &mm, k, &econ, &cfg);
            let rhs = t * buyer_profit(r1, &am, k, &econ, &cfg) + (1.0 - t) * buyer_profit(r2, &bm, k, &econ, &cfg);
            prop_assert!((lhs - rhs).abs() <= tol(lhs));
            let lhs = seller_profit(r, &mm, k, &econ, &cfg);
            let rhs = t * seller_profit(r1, &am, k, &econ, &cfg) + (1.0 - t) * seller_profit(r2, &bm, k, &econ, &cfg);
            prop_assert!((lhs - rhs).abs() <= tol(lhs));
        }
    }

    #[test]
    fn penalty_vanishes_only_on_binary_sharing(a in prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64], 6)) {
        let m = SharingMatrix::from_vec(3, 2, a).unwrap();
        prop_assert_eq!(penalty_term(&m) == 0.0, m.is_binary());
        prop_assert!(penalty_term(&m) >= 0.0);
    }

    #[test]
    fn power_map_round_trips(y in 0.0..=1.0f64, decades in 1.0..12.0f64) {
        for map in [PowerMap::Linear, PowerMap::Logarithmic { decades }] {
            let p = map.to_watts(y, 0.01);
            prop_assert!(p >= 0.0 && p <= 0.01 * (1.0 + 1e-12));
            prop_assert!((map.from_watts(p, 0.01) - y).abs() < 1e-9);
        }
    }

    #[test]
    fn beta_decays_faster_than_rho(t in 0usize..1_000_000) {
        let s = StepSchedule::default();
        let ratio = s.beta(t) / s.rho(t);
        prop_assert!(ratio <= 1.0);
        prop_assert!((ratio - (1.0 + t as f64).powf(-0.2)).abs() < 1e-12);
    }

    #[test]
    fn optimal_subproblems_satisfy_kkt_and_bounds(seed in any::<u64>()) {
        let spec = common::random_2d_instance(seed);
        let sol = solve_subproblem(&spec, 1e-8).unwrap();
        if sol.status == SolveStatus::Optimal {
            prop_assert!(sol.kkt_residual <= 1e-8);
            for i in 0..2 {
                prop_assert!(sol.x[i] >= spec.lower[i] - 1e-8 && sol.x[i] <= spec.upper[i] + 1e-8);
            }
            for (m, v) in sol.multipliers.iter().zip(spec.constraint_values(&sol.x)) {
                prop_assert!((m * v).abs() <= 1e-8);
            }
        }
    }
}
