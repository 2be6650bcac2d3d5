use super::*;
use crate::geometry::sample_network;
use crate::rate_analysis::McEstimate;
use approx::assert_relative_eq;

fn desk() -> (NetworkConfig, EconParams) {
    (NetworkConfig::standard(2, 1, 1), EconParams::standard(2, 1))
}

fn quick(iterations: usize) -> CsscaSettings {
    CsscaSettings { iterations, batch_size: 4, trace_samples: 0, ..CsscaSettings::default() }
}

#[test]
fn init_respects_caps_without_full_sharing() {
    let (cfg, econ) = desk();
    let (a, p, state) = init(&cfg, &econ, &CsscaSettings::default(), 1).unwrap();
    assert!(a.as_slice().iter().all(|&v| v > 0.0 && v < 1.0));
    assert!(a.cap_residuals(&cfg).iter().all(|&r| r <= 0.0));
    p.validate(&cfg).unwrap();
    assert_eq!(state.t, -1);
    assert!(state.values.iter().all(|&v| v == 0.0));
    assert!(state.gradients.iter().flatten().all(|&v| v == 0.0));
}

#[test]
fn init_halves_sharing_under_a_unit_lease_cap() {
    let mut cfg = NetworkConfig::standard(1, 2, 2);
    cfg.lease_cap = vec![1];
    let econ = EconParams::standard(1, 2);
    let (a, _, _) = init(&cfg, &econ, &CsscaSettings::default(), 0).unwrap();
    assert!(a.as_slice().iter().all(|&v| v == 0.5));

    cfg.lease_cap = vec![2];
    cfg.borrow_cap = vec![1];
    cfg.subbands_per_seller = vec![4];
    let (a, _, _) = init(&cfg, &econ, &CsscaSettings::default(), 0).unwrap();
    assert!(a.as_slice().iter().all(|&v| v == 0.25));
}

#[test]
fn init_is_reproducible() {
    let (cfg, econ) = desk();
    let s = CsscaSettings::default();
    assert_eq!(init(&cfg, &econ, &s, 9).unwrap(), init(&cfg, &econ, &s, 9).unwrap());
}

#[test]
fn initial_power_sits_at_the_buyer_level() {
    let (cfg, _) = desk();
    let p = initial_power(&cfg).unwrap();
    let k = buyer_power_moment(&cfg, 0).unwrap();
    assert_relative_eq!(p[0], k * k, max_relative = 1e-12);
    assert!(p[0] < cfg.max_seller_power_w / 2.0);
}

#[test]
fn total_constraint_count_is_two_b_plus_s_plus_one() {
    for (s, b) in [(1, 1), (2, 1), (3, 2)] {
        let cfg = NetworkConfig::standard(s, b, 1);
        let econ = EconParams::standard(s, b);
        let (_, _, state) = init(&cfg, &econ, &CsscaSettings::default(), 0).unwrap();
        assert_eq!(state.constraint_count(), 2 * b + s + 1);
    }
}

#[test]
fn schedule_satisfies_step_size_conditions() {
    let sch = StepSchedule::default();
    sch.validate().unwrap();
    assert_eq!(sch.rho(0), 1.0);
    let mut sum_sq = 0.0;
    let mut sum = 0.0;
    for t in 0..100_000 {
        let (r, b) = (sch.rho(t), sch.beta(t));
        assert_relative_eq!(b / r, (1.0 + t as f64).powf(-0.2), max_relative = 1e-12);
        sum_sq += r * r;
        sum += r;
    }
    // Σ (1+t)^-1.2 ≤ 1 + ∫₀^∞ (1+t)^-1.2 dt = 6.
    assert!(sum_sq < 6.0);
    // The plain sum keeps growing like t^0.4.
    assert!(sum > 0.9 * (100_000f64.powf(0.4) - 1.0) / 0.4);
}

#[test]
fn schedule_rejects_bad_exponents() {
    let bad = StepSchedule { rho_exponent: 0.5, ..StepSchedule::default() };
    assert!(bad.validate().is_err());
    let bad = StepSchedule { beta_exponent: 0.6, ..StepSchedule::default() };
    assert!(bad.validate().is_err());
}

#[test]
fn first_update_with_unit_step_copies_the_sample() {
    let (cfg, econ) = desk();
    let settings = CsscaSettings::default();
    let (a, p, mut state) = init(&cfg, &econ, &settings, 0).unwrap();
    let xi = sample_network_covered(&cfg, 5).unwrap();
    update_surrogates(&mut state, &xi, &a, &p, 1.0, &cfg, &econ, &settings).unwrap();
    let problem = Problem::new(&cfg, &econ, &settings).unwrap();
    let (v, g) = problem.sample_functions(&xi, &problem.encode(&a, &p)).unwrap();
    assert_eq!(state.values, v);
    assert_eq!(state.gradients, g);
    assert_eq!(state.t, 0);
}

#[test]
fn frozen_sample_converges_geometrically() {
    let (cfg, econ) = desk();
    let settings = CsscaSettings::default();
    let (a, p, mut state) = init(&cfg, &econ, &settings, 0).unwrap();
    let xi = sample_network_covered(&cfg, 6).unwrap();
    let problem = Problem::new(&cfg, &econ, &settings).unwrap();
    let (v, _) = problem.sample_functions(&xi, &problem.encode(&a, &p)).unwrap();
    let rho = 0.3;
    for k in 1..=40 {
        update_surrogates(&mut state, &xi, &a, &p, rho, &cfg, &econ, &settings).unwrap();
        for i in 0..v.len() {
            let expected = v[i] * (1.0 - (1.0 - rho).powi(k));
            assert_relative_eq!(state.values[i], expected, max_relative = 1e-10, epsilon = 1e-12);
        }
    }
}

#[test]
fn running_objective_tracks_monte_carlo_mean() {
    let (cfg, econ) = desk();
    let settings = CsscaSettings::default();
    let (a, p, mut state) = init(&cfg, &econ, &settings, 0).unwrap();
    let problem = Problem::new(&cfg, &econ, &settings).unwrap();
    let x = problem.encode(&a, &p);
    let sch = settings.schedule;
    // Weight of sample t in the final estimate, for its standard error.
    let n = 500;
    let mut weights = vec![0.0; n];
    for t in 0..n {
        let r = sch.rho(t);
        for w in weights.iter_mut().take(t) {
            *w *= 1.0 - r;
        }
        weights[t] = r;
        let xi = sample_network_covered(&cfg, sub_seed(3, stream::CSSCA, t as u64)).unwrap();
        update_surrogates(&mut state, &xi, &a, &p, r, &cfg, &econ, &settings).unwrap();
    }
    let oracle: Vec<f64> = (0..20_000)
        .map(|i| {
            let xi = sample_network_covered(&cfg, sub_seed(4, stream::MONTE_CARLO, i)).unwrap();
            problem.sample_functions(&xi, &x).unwrap().0[0]
        })
        .collect();
    let mc = McEstimate::from_samples(&oracle);
    let sd = mc.stderr * (mc.n as f64).sqrt();
    let running_se = sd * weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    let combined = (running_se * running_se + mc.stderr * mc.stderr).sqrt();
    assert!((state.values[0] - mc.mean).abs() < 3.0 * combined, "{} vs {} ± {}", state.values[0], mc.mean, combined);
}

#[test]
fn sample_gradients_match_finite_differences() {
    let (cfg, econ) = desk();
    for map in [PowerMap::default(), PowerMap::Linear] {
        for sense in [Sense::BuyerProfit, Sense::SellerProfit] {
            let settings = CsscaSettings { power_map: map, sense, ..CsscaSettings::default() };
            let problem = Problem::new(&cfg, &econ, &settings).unwrap();
            let xi = sample_network_covered(&cfg, 11).unwrap();
            let x = vec![0.3, 0.7, 0.6, 0.8];
            let (_, g) = problem.sample_functions(&xi, &x).unwrap();
            for j in 0..x.len() {
                let h = 1e-6;
                let mut up = x.clone();
                let mut dn = x.clone();
                up[j] += h;
                dn[j] -= h;
                let vu = problem.sample_functions(&xi, &up).unwrap().0;
                let vd = problem.sample_functions(&xi, &dn).unwrap().0;
                for i in 0..g.len() {
                    let fd = (vu[i] - vd[i]) / (2.0 * h);
                    assert!((g[i][j] - fd).abs() <= 1e-5 * (1.0 + fd.abs()), "{map:?} {sense:?} f{i} x{j}: {} vs {fd}", g[i][j]);
                }
            }
        }
    }
}

#[test]
fn subproblem_curvatures_are_positive() {
    let (cfg, econ) = desk();
    let settings = CsscaSettings { tau_objective: 2.5, ..CsscaSettings::default() };
    let (a, p, mut state) = init(&cfg, &econ, &settings, 0).unwrap();
    let xi = sample_network_covered(&cfg, 2).unwrap();
    update_surrogates(&mut state, &xi, &a, &p, 1.0, &cfg, &econ, &settings).unwrap();
    let problem = Problem::new(&cfg, &econ, &settings).unwrap();
    let spec = build_subproblem(&state, &problem.encode(&a, &p), &cfg);
    assert_eq!(spec.objective.curvature, 2.5);
    assert!(spec.constraints.iter().all(|c| c.curvature > 0.0));
    assert_eq!(spec.constraints.len(), 5);
    // One borrow cap per seller and buyer, one lease cap per sub-band.
    assert_eq!(spec.linear.len(), 4);
}

#[test]
fn step_size_extremes() {
    let (cfg, econ) = desk();
    let settings = CsscaSettings::default();
    let (a, p, mut state) = init(&cfg, &econ, &settings, 0).unwrap();
    let xi = sample_network_covered(&cfg, 2).unwrap();
    update_surrogates(&mut state, &xi, &a, &p, 1.0, &cfg, &econ, &settings).unwrap();
    let problem = Problem::new(&cfg, &econ, &settings).unwrap();
    let x = problem.encode(&a, &p);
    let (stay, _) = iterate(&state, &x, 0.0, &cfg, &settings);
    assert_eq!(stay, x);
    let (full, fb) = iterate(&state, &x, 1.0, &cfg, &settings);
    let spec = build_subproblem(&state, &x, &cfg);
    let opts = IpmOptions { start: Some(interior_start(&x, &cfg)), ..IpmOptions::default() };
    let sol = solve_subproblem_with(&spec, &opts).unwrap();
    assert_ne!(fb, Fallback::NullStep);
    for (u, v) in full.iter().zip(&sol.x) {
        assert_relative_eq!(u, v, epsilon = 1e-12);
    }
}

#[test]
fn iterates_stay_in_the_feasible_set() {
    let mut cfg = NetworkConfig::standard(2, 2, 2);
    cfg.lease_cap = vec![1, 1];
    cfg.borrow_cap = vec![1, 2];
    let econ = EconParams::standard(2, 2);
    let settings = quick(1);
    let (a, p, _) = init(&cfg, &econ, &settings, 0).unwrap();
    let problem = Problem::new(&cfg, &econ, &settings).unwrap();
    let mut x = problem.encode(&a, &p);
    let mut state = SurrogateState::zeroed(problem.function_count(), problem.dim(), 1.0, 1.0);
    for t in 0..60 {
        fold_batch(&problem, &mut state, &x, t, settings.schedule.rho(t), 17).unwrap();
        x = iterate(&state, &x, settings.schedule.beta(t), &cfg, &settings).0;
        let (a, p) = problem.decode(&x);
        assert!(a.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(a.cap_residuals(&cfg).iter().all(|&r| r <= 1e-9), "t = {t}: {:?}", a.cap_residuals(&cfg));
        p.validate(&cfg).unwrap();
    }
}

#[test]
fn run_is_deterministic_per_seed() {
    let (cfg, econ) = desk();
    let settings = quick(30);
    let r1 = run(&cfg, &econ, &settings, 5).unwrap();
    let r2 = run(&cfg, &econ, &settings, 5).unwrap();
    assert_eq!(r1.sharing, r2.sharing);
    assert_eq!(r1.power, r2.power);
    assert_eq!(r1.trace.objectives(), r2.trace.objectives());
    assert_eq!(r1.trace.len(), 30);
    let r3 = run(&cfg, &econ, &settings, 6).unwrap();
    assert_ne!(r1.power, r3.power);
}

#[test]
fn trace_csv_has_fixed_columns() {
    let (cfg, econ) = desk();
    let res = run(&cfg, &econ, &quick(3), 0).unwrap();
    let mut buf = Vec::new();
    res.trace.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,objective,max_constraint_residual,step_norm,fallback_flag,wall_ms");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 6));
}

#[test]
fn binarize_leaves_binary_matrices_alone() {
    let (cfg, econ) = desk();
    let a = SharingMatrix::from_vec(2, 1, vec![1.0, 0.0]).unwrap();
    let p = SellerPowerVector::uniform(&cfg, 1e-5);
    let (b, q, report) = binarize(&a, &p, &cfg, &econ, 50, 0).unwrap();
    assert_eq!(b, a);
    assert_eq!(q, p);
    assert!(report.zeroed.is_empty());
    assert_eq!(report.constraints.len(), 5);
}

#[test]
fn binarize_rounds_to_nearest() {
    let (cfg, econ) = desk();
    let a = SharingMatrix::from_vec(2, 1, vec![0.97, 0.03]).unwrap();
    let p = SellerPowerVector::uniform(&cfg, 1e-5);
    let (b, _, _) = binarize(&a, &p, &cfg, &econ, 20, 0).unwrap();
    assert_eq!(b.as_slice(), &[1.0, 0.0]);
}

#[test]
fn rounding_resolves_cap_violations_by_dropping_the_smallest() {
    let mut cfg = NetworkConfig::standard(1, 2, 1);
    cfg.lease_cap = vec![1];
    let a = SharingMatrix::from_vec(1, 2, vec![0.6, 0.55]).unwrap();
    let (b, zeroed) = binarize::round_sharing(&a, &cfg).unwrap();
    assert_eq!(b.as_slice(), &[1.0, 0.0]);
    assert_eq!(zeroed, vec![(0, 1)]);
    assert!(b.cap_residuals(&cfg).iter().all(|&r| r <= 0.0));
}

#[test]
fn update_rejects_bad_step() {
    let (cfg, econ) = desk();
    let settings = CsscaSettings::default();
    let (a, p, mut state) = init(&cfg, &econ, &settings, 0).unwrap();
    let xi = sample_network(&cfg, 1).unwrap();
    assert!(update_surrogates(&mut state, &xi, &a, &p, 0.0, &cfg, &econ, &settings).is_err());
    assert!(update_surrogates(&mut state, &xi, &a, &p, 1.5, &cfg, &econ, &settings).is_err());
}
