//! Random separated test measures.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::torus::{DiscreteMeasure, TorusPoint};

const ATTEMPTS_PER_SPIKE: usize = 10_000;
const RESTARTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeLaw {
    /// `e^{i theta}` with uniform phase.
    UnitPhase,
    /// Independent standard normal real and imaginary parts.
    ComplexGaussian,
}

impl std::str::FromStr for AmplitudeLaw {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "unit-phase" | "unit" => Ok(AmplitudeLaw::UnitPhase),
            "complex-gaussian" | "gaussian" => Ok(AmplitudeLaw::ComplexGaussian),
            _ => Err(format!("unknown amplitude law `{s}` (unit-phase | complex-gaussian)")),
        }
    }
}

pub fn sample_amplitude(law: AmplitudeLaw, rng: &mut impl Rng) -> Complex64 {
    match law {
        AmplitudeLaw::UnitPhase => Complex64::cis(TAU * rng.random::<f64>()),
        AmplitudeLaw::ComplexGaussian => {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        }
    }
}

/// `j` points with pairwise torus distance at least `margin * 2 / m`, by
/// sequential rejection sampling.
pub fn random_support(j: usize, m: usize, margin: f64, rng: &mut impl Rng) -> Result<Vec<TorusPoint>> {
    if m == 0 {
        return param("M must be positive");
    }
    if !(margin >= 1.0) || !margin.is_finite() {
        return param(format!("margin must be >= 1, got {margin}"));
    }
    let sep = margin * 2.0 / m as f64;
    if j as f64 * sep > 1.0 {
        return param(format!("{j} spikes at separation {sep} do not fit on the torus"));
    }
    for _ in 0..RESTARTS {
        let mut pts: Vec<TorusPoint> = Vec::with_capacity(j);
        let mut attempts = 0;
        while pts.len() < j && attempts < ATTEMPTS_PER_SPIKE * j.max(1) {
            attempts += 1;
            let x = TorusPoint::new(rng.random::<f64>());
            if pts.iter().all(|p| p.distance(x) >= sep) {
                pts.push(x);
            }
        }
        if pts.len() == j {
            pts.sort_by(|a, b| a.value().total_cmp(&b.value()));
            return Ok(pts);
        }
    }
    param(format!("rejection sampling failed to place {j} spikes at separation {sep}"))
}

/// A random `j`-spike measure, deterministic in `seed`.
pub fn random_measure(j: usize, m: usize, margin: f64, seed: u64, law: AmplitudeLaw) -> Result<DiscreteMeasure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let support = random_support(j, m, margin, &mut rng)?;
    let positions: Vec<f64> = support.iter().map(|p| p.value()).collect();
    let amps: Vec<Complex64> = (0..j).map(|_| sample_amplitude(law, &mut rng)).collect();
    Ok(DiscreteMeasure::from_parts(&positions, &amps))
}
