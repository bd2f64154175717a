//! Spectral noise models and the Gaussian tail machinery.
//!
//! Randomness is keyed by `(seed, trial)`: trial `t` draws from ChaCha stream
//! `t` of the generator seeded with `seed`, so trials are reproducible and
//! independent of evaluation order.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::solvers::Observation;
use crate::torus::{DiscreteMeasure, TrigPoly};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseKind {
    #[serde(rename = "bounded-adversarial", alias = "bounded")]
    BoundedAdversarial,
    #[serde(rename = "gaussian")]
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Per-component standard deviation.
    pub sigma: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub seed: u64,
    /// L2 radius for bounded noise; defaults to [`epsilon_from_gaussian`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl NoiseSpec {
    pub fn gaussian(sigma: f64, gamma: f64, seed: u64) -> Self {
        NoiseSpec { kind: NoiseKind::Gaussian, sigma, gamma, seed, epsilon: None }
    }

    pub fn bounded(epsilon: f64, seed: u64) -> Self {
        NoiseSpec {
            kind: NoiseKind::BoundedAdversarial,
            sigma: 0.0,
            gamma: 0.0,
            seed,
            epsilon: Some(epsilon),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return param(format!("sigma must be nonnegative, got {}", self.sigma));
        }
        if self.kind == NoiseKind::Gaussian && !(self.gamma > 0.0) {
            return param(format!("gamma must be positive for gaussian noise, got {}", self.gamma));
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0) || !e.is_finite() {
                return param(format!("epsilon must be nonnegative, got {e}"));
            }
        }
        if self.kind == NoiseKind::BoundedAdversarial && self.epsilon.is_none() && !(self.gamma >= 0.0) {
            return param("bounded noise needs epsilon or a nonnegative gamma");
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: NoiseSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// The noise spectrum `eta_hat(m)`, `m = -M..M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    pub spectrum: TrigPoly,
}

impl NoiseRealization {
    pub fn l2_norm(&self) -> f64 {
        self.spectrum.l2_norm()
    }
}

fn rng_for(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn gaussian_spectrum(m: usize, sigma: f64, rng: &mut ChaCha8Rng) -> TrigPoly {
    let coeffs = (0..2 * m + 1)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(sigma * re, sigma * im)
        })
        .collect();
    TrigPoly::new(m, coeffs).expect("length 2M+1")
}

/// `2(2M+1)` independent `N(0, sigma^2)` draws as the real and imaginary parts
/// of the noise spectrum.
pub fn sample_gaussian_noise(m: usize, sigma: f64, seed: u64) -> NoiseRealization {
    sample_gaussian_noise_trial(m, sigma, seed, 0)
}

/// As [`sample_gaussian_noise`] for trial `trial` of a sweep.
pub fn sample_gaussian_noise_trial(m: usize, sigma: f64, seed: u64, trial: u64) -> NoiseRealization {
    NoiseRealization { spectrum: gaussian_spectrum(m, sigma, &mut rng_for(seed, trial)) }
}

/// `sigma (1 + gamma) sqrt(2(2M+1))`.
pub fn epsilon_from_gaussian(m: usize, sigma: f64, gamma: f64) -> f64 {
    sigma * (1.0 + gamma) * (2.0 * (2 * m + 1) as f64).sqrt()
}

/// `exp(-2(2M+1) gamma^2)`.
pub fn failure_probability_bound(m: usize, gamma: f64) -> f64 {
    (-2.0 * (2 * m + 1) as f64 * gamma * gamma).exp()
}

/// Threshold `t(x) = dof + 2 sqrt(dof x) + 2x` with `P(X >= t) <= e^{-x}` for a
/// chi-square variable `X` with `dof` degrees of freedom.
pub fn chi2_tail_bound(dof: f64, x: f64) -> f64 {
    dof + 2.0 * (dof * x).sqrt() + 2.0 * x
}

/// `sigma sqrt(t(x))` at `x = 2(2M+1) gamma^2`: the radius that the chi-square
/// tail inequality certifies with probability `1 - exp(-2(2M+1) gamma^2)`.
pub fn rigorous_epsilon(m: usize, sigma: f64, gamma: f64) -> f64 {
    let d = 2.0 * (2 * m + 1) as f64;
    sigma * chi2_tail_bound(d, d * gamma * gamma).sqrt()
}

/// Result of a tail-frequency Monte-Carlo run.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailEstimate {
    pub trials: usize,
    pub exceedances: usize,
    pub frequency: f64,
    pub bound: f64,
    /// Binomial standard error at the bound, `sqrt(p (1 - p) / trials)`.
    pub std_error: f64,
}

impl TailEstimate {
    fn new(trials: usize, exceedances: usize, bound: f64) -> Self {
        let p = bound.clamp(0.0, 1.0);
        TailEstimate {
            trials,
            exceedances,
            frequency: exceedances as f64 / trials as f64,
            bound,
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }

    /// Frequency within the bound plus three standard errors.
    pub fn pass(&self) -> bool {
        self.frequency <= self.bound + 3.0 * self.std_error
    }
}

/// Fraction of Gaussian realizations with `||P_M eta|| >= epsilon_from_gaussian`.
pub fn tail_montecarlo(m: usize, sigma: f64, gamma: f64, trials: usize, seed: u64) -> Result<TailEstimate> {
    if trials < 1000 {
        return param(format!("tail_montecarlo needs at least 1000 trials, got {trials}"));
    }
    if !(sigma >= 0.0) || !(gamma > 0.0) {
        return param("sigma must be nonnegative and gamma positive");
    }
    let eps = epsilon_from_gaussian(m, sigma, gamma);
    let hits = (0..trials as u64)
        .into_par_iter()
        .filter(|&t| sigma > 0.0 && sample_gaussian_noise_trial(m, sigma, seed, t).l2_norm() >= eps)
        .count();
    Ok(TailEstimate::new(trials, hits, failure_probability_bound(m, gamma)))
}

/// Empirical `P(X >= chi2_tail_bound(dof, x))` for chi-square `X`.
pub fn chi2_montecarlo(dof: usize, x: f64, trials: usize, seed: u64) -> TailEstimate {
    let t = chi2_tail_bound(dof as f64, x);
    let hits = (0..trials as u64)
        .into_par_iter()
        .filter(|&k| {
            let mut rng = rng_for(seed, k);
            let s: f64 = (0..dof)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z * z
                })
                .sum();
            s >= t
        })
        .count();
    TailEstimate::new(trials, hits, (-x).exp())
}

/// `||P_M eta||^2` for each of `trials` Gaussian realizations.
pub fn noise_energies(m: usize, sigma: f64, trials: usize, seed: u64) -> Vec<f64> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| sample_gaussian_noise_trial(m, sigma, seed, t).l2_norm().powi(2))
        .collect()
}

/// Noise for `spec` at trial `trial`, with its L2 bound `epsilon`.
pub fn realize_noise(m: usize, spec: &NoiseSpec, trial: u64) -> Result<(NoiseRealization, f64)> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, trial);
    match spec.kind {
        NoiseKind::Gaussian => {
            let eps = epsilon_from_gaussian(m, spec.sigma, spec.gamma);
            Ok((NoiseRealization { spectrum: gaussian_spectrum(m, spec.sigma, &mut rng) }, eps))
        }
        NoiseKind::BoundedAdversarial => {
            let eps = spec
                .epsilon
                .unwrap_or_else(|| epsilon_from_gaussian(m, spec.sigma, spec.gamma));
            let dir = gaussian_spectrum(m, 1.0, &mut rng);
            let norm = dir.l2_norm();
            let spectrum = if eps == 0.0 || norm == 0.0 {
                TrigPoly::zeros(m)
            } else {
                dir.scale(Complex64::new(eps / norm, 0.0))
            };
            Ok((NoiseRealization { spectrum }, eps))
        }
    }
}

/// `y = P_M mu_0 + eta`, the noise realization and its bound `epsilon`.
pub fn make_observation(
    mu0: &DiscreteMeasure,
    m: usize,
    noise: &NoiseSpec,
) -> Result<(Observation, NoiseRealization, f64)> {
    make_observation_trial(mu0, m, noise, 0)
}

pub fn make_observation_trial(
    mu0: &DiscreteMeasure,
    m: usize,
    noise: &NoiseSpec,
    trial: u64,
) -> Result<(Observation, NoiseRealization, f64)> {
    if m == 0 {
        return param("M must be positive");
    }
    let (eta, eps) = realize_noise(m, noise, trial)?;
    let y = mu0.project(m).add(&eta.spectrum);
    Ok((Observation::new(y), eta, eps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_from_gaussian(12, 0.0, 0.3), 0.0);
        assert!((epsilon_from_gaussian(12, 1.0, 0.0) - 50f64.sqrt()).abs() < 1e-12);
        assert!((epsilon_from_gaussian(1, 2.0, 0.5) - 3.0 * 6f64.sqrt()).abs() < 1e-12);
        assert!((epsilon_from_gaussian(1, 2.0, 0.5) - 7.3485).abs() < 1e-4);
    }

    #[test]
    fn bound_examples() {
        assert!((failure_probability_bound(4, 0.3) - (-1.62f64).exp()).abs() < 1e-15);
        assert!((failure_probability_bound(4, 0.3) - 0.1979).abs() < 1e-4);
        assert!((failure_probability_bound(128, 0.1) - 5.86e-3).abs() < 1e-5);
        assert!(failure_probability_bound(4, 1.0) < failure_probability_bound(4, 0.5));
        assert!((chi2_tail_bound(2.0, 1.0) - (4.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn chi2_threshold_at_gamma_squared_dof() {
        // with x = d gamma^2 the threshold is d (1 + 2 gamma + 2 gamma^2), which
        // exceeds d (1 + gamma)^2 by d gamma^2
        for m in [1usize, 4, 64, 128] {
            for gamma in [0.01, 0.1, 0.5, 2.0] {
                let d = 2.0 * (2 * m + 1) as f64;
                let t = chi2_tail_bound(d, d * gamma * gamma);
                let expect = d * (1.0 + 2.0 * gamma + 2.0 * gamma * gamma);
                assert!((t - expect).abs() <= 1e-12 * expect);
                assert!(t >= d * (1.0 + gamma).powi(2));
                let rig = rigorous_epsilon(m, 1.0, gamma);
                assert!((rig * rig - t).abs() <= 1e-12 * t);
                assert!(rig >= epsilon_from_gaussian(m, 1.0, gamma));
            }
        }
    }

    #[test]
    fn determinism_and_zero_sigma() {
        let a = sample_gaussian_noise(8, 1.0, 7);
        let b = sample_gaussian_noise(8, 1.0, 7);
        assert_eq!(a, b);
        assert_ne!(a, sample_gaussian_noise(8, 1.0, 8));
        assert_eq!(sample_gaussian_noise(8, 0.0, 7).l2_norm(), 0.0);
        let t = tail_montecarlo(4, 0.0, 0.3, 1000, 1).unwrap();
        assert_eq!(t.frequency, 0.0);
    }

    #[test]
    fn bounded_noise_on_sphere() {
        let mu0 = DiscreteMeasure::dirac(0.2);
        let spec = NoiseSpec::bounded(0.37, 5);
        let (obs, eta, eps) = make_observation(&mu0, 16, &spec).unwrap();
        assert_eq!(eps, 0.37);
        assert!((eta.l2_norm() - 0.37).abs() < 1e-12);
        assert!(eta.l2_norm() <= eps * (1.0 + 1e-15));
        assert!((obs.y.sub(&mu0.project(16)).l2_norm() - 0.37).abs() < 1e-12);
        let (obs0, _, _) = make_observation(&mu0, 16, &NoiseSpec::bounded(0.0, 5)).unwrap();
        assert_eq!(obs0.y, mu0.project(16));
    }

    #[test]
    fn gaussian_epsilon_delegates() {
        let spec = NoiseSpec::gaussian(0.1, 0.2, 42);
        let (_, _, eps) = make_observation(&DiscreteMeasure::zero(), 32, &spec).unwrap();
        assert_eq!(eps, epsilon_from_gaussian(32, 0.1, 0.2));
    }

    #[test]
    fn json_format() {
        let s = NoiseSpec::from_json(r#"{"kind":"gaussian","sigma":0.1,"gamma":0.2,"seed":42}"#).unwrap();
        assert_eq!(s, NoiseSpec::gaussian(0.1, 0.2, 42));
        let b = NoiseSpec::from_json(r#"{"kind":"bounded","sigma":0,"epsilon":0.5}"#).unwrap();
        assert_eq!(b.kind, NoiseKind::BoundedAdversarial);
        assert!(NoiseSpec::from_json(r#"{"kind":"gaussian","sigma":-1,"gamma":0.2}"#).is_err());
        assert!(NoiseSpec::from_json(r#"{"kind":"gaussian","sigma":1,"gamma":0}"#).is_err());
    }
}
