use proptest::prelude::*;
use spikesolve::noise::{epsilon_from_gaussian, noise_energies, tail_montecarlo};

#[test]
fn chi_square_moments() {
    let m = 64;
    let dof = (2 * (2 * m + 1)) as f64;
    let e = noise_energies(m, 1.0, 10_000, 11);
    let n = e.len() as f64;
    let mean = e.iter().sum::<f64>() / n;
    let var = e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((mean - dof).abs() <= 0.02 * dof, "mean {mean}");
    assert!((var - 2.0 * dof).abs() <= 0.1 * 2.0 * dof, "variance {var}");
}

#[test]
fn energies_scale_with_sigma_squared() {
    let a = noise_energies(8, 1.0, 50, 3);
    let b = noise_energies(8, 2.5, 50, 3);
    for (x, y) in a.iter().zip(&b) {
        assert!((y - 6.25 * x).abs() <= 1e-12 * y);
    }
}

#[test]
fn tail_frequency_below_bound_on_grid() {
    for (m, gamma) in [(2usize, 0.5), (16, 0.1), (32, 0.2)] {
        let t = tail_montecarlo(m, 1.0, gamma, 4000, 5).unwrap();
        assert!(t.pass(), "M={m} gamma={gamma}: {t:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn epsilon_strictly_increasing(m in 1usize..500, sigma in 0.01..10.0f64, gamma in 0.0..3.0f64) {
        let e = epsilon_from_gaussian(m, sigma, gamma);
        prop_assert!(epsilon_from_gaussian(m + 1, sigma, gamma) > e);
        prop_assert!(epsilon_from_gaussian(m, sigma * 1.01, gamma) > e);
        prop_assert!(epsilon_from_gaussian(m, sigma, gamma + 0.01) > e);
    }
}
