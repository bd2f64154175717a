use proptest::prelude::*;
use spikesolve::instances::{random_measure, AmplitudeLaw};
use spikesolve::noise::{make_observation_trial, NoiseSpec};
use spikesolve::solvers::{
    is_approximation, solve_constrained, solve_tikhonov, tikhonov_objective, Observation, SolverConfig,
};

fn noisy(m: usize, j: usize, seed: u64, eps: f64) -> (spikesolve::DiscreteMeasure, Observation, f64) {
    let mu0 = random_measure(j, m, 1.0, seed, AmplitudeLaw::ComplexGaussian).unwrap();
    let (obs, _, eps) = make_observation_trial(&mu0, m, &NoiseSpec::bounded(eps, seed), 0).unwrap();
    (mu0, obs, eps)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn objective_trace_is_nonincreasing(seed in 0u64..10_000, j in 1usize..4, frac in 0.01..0.5f64) {
        let (_, obs, _) = noisy(16, j, seed, 0.3);
        let cfg = SolverConfig::default();
        let tau = frac * obs.y_norm();
        let r = solve_tikhonov(&obs, tau, &cfg).unwrap();
        for w in r.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs(), "{:?}", r.objective_trace);
        }
        if r.converged {
            prop_assert!(r.duality_gap <= cfg.gap_tolerance * obs.y_norm().powi(2));
        }
        prop_assert!(r.duality_gap >= -1e-12);
        let direct = tikhonov_objective(&obs, tau, &r.measure);
        prop_assert!((direct - r.objective_trace.last().unwrap()).abs() <= 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn residual_grows_with_tau(seed in 0u64..10_000, j in 1usize..4, lo in 0.005..0.2f64, ratio in 1.05..4.0f64) {
        let (_, obs, _) = noisy(16, j, seed, 0.3);
        let cfg = SolverConfig { gap_tolerance: 1e-13, ..Default::default() };
        let scale = obs.y_norm();
        let r1 = solve_tikhonov(&obs, lo * scale, &cfg).unwrap();
        let r2 = solve_tikhonov(&obs, lo * ratio * scale, &cfg).unwrap();
        prop_assert!(r1.residual_l2 <= r2.residual_l2 + 1e-5 * scale, "{} > {}", r1.residual_l2, r2.residual_l2);
    }

    #[test]
    fn penalized_total_variation_bound(seed in 0u64..10_000, j in 1usize..5, eps in 0.05..1.0f64) {
        let (mu0, obs, eps) = noisy(32, j, seed, eps);
        let r = solve_tikhonov(&obs, eps, &SolverConfig::default()).unwrap();
        prop_assert!(r.measure.total_variation() <= mu0.total_variation() + eps / 2.0 + 1e-6);
        prop_assert!(is_approximation(&r.measure, &mu0, 32, eps).pass());
    }
}

#[test]
fn constrained_total_variation_bound() {
    for seed in 0..6u64 {
        let (mu0, obs, eps) = noisy(32, 1 + seed as usize % 4, seed, 0.4);
        let r = solve_constrained(&obs, eps, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.residual_l2 <= eps);
        assert!(r.measure.total_variation() <= mu0.total_variation() + 1e-6);
        let rep = is_approximation(&r.measure, &mu0, 32, eps);
        assert!(rep.spectral_l2 <= 2.0 * eps, "{rep:?}");
    }
}

#[test]
fn constrained_path_residuals_follow_tau() {
    let (_, obs, eps) = noisy(24, 3, 7, 0.5);
    let r = solve_constrained(&obs, eps, &SolverConfig::default()).unwrap();
    let mut pts: Vec<_> = r.path.iter().filter(|p| p.converged).collect();
    pts.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    for w in pts.windows(2) {
        assert!(w[0].residual <= w[1].residual + 1e-6 * obs.y_norm(), "{:?}", r.path);
        assert!(w[0].total_variation >= w[1].total_variation - 1e-6, "{:?}", r.path);
    }
}
