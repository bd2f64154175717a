//! Total-variation regularized recovery of discrete measures.
//!
//! Three problems are solved over measures `mu` on the torus, given data
//! `y = P_M(mu_0 + eta)`:
//!
//! * penalized: `min 1/2 ||P_M mu - y||^2 + tau ||mu||` ([`solve_tikhonov`]),
//! * constrained: `min ||mu||` s.t. `||P_M mu - y|| <= delta` ([`solve_constrained`]),
//! * noiseless: the constrained problem with a vanishing `delta` ([`solve_noiseless`]).
//!
//! The penalized solver is a fully-corrective conditional gradient method over
//! measures; the constrained one follows the penalized path in `tau`.

mod amplitudes;
mod cg;
mod constrained;
mod dual;
mod lasso;
mod sliding;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::torus::{DiscreteMeasure, TrigPoly};

pub use cg::{solve_tikhonov, solve_tikhonov_from};
pub use constrained::{solve_constrained, solve_noiseless, PathPoint};
pub use dual::{dual_sup, DualSup};
pub use lasso::{grid_lasso_oracle, GridLassoSolution};

/// Observed data `P_M(mu_0 + eta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub y: TrigPoly,
}

impl Observation {
    pub fn new(y: TrigPoly) -> Self {
        Observation { y }
    }

    /// The cutoff frequency `M`.
    pub fn m(&self) -> usize {
        self.y.degree()
    }

    pub fn y_norm(&self) -> f64 {
        self.y.l2_norm()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Candidate grid has `grid_factor * (2M + 1)` points.
    pub grid_factor: usize,
    pub max_iterations: usize,
    /// Stopping threshold on the duality gap, relative to `||y||^2`.
    pub gap_tolerance: f64,
    /// Off-grid refinement of inserted atoms and joint sliding of positions.
    /// When false, atoms stay on the candidate grid and the grid-restricted
    /// problem is solved instead.
    pub refine_positions: bool,
    /// Atoms closer than this are merged after each iteration.
    pub merge_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid_factor: 16,
            max_iterations: 300,
            gap_tolerance: 1e-10,
            refine_positions: true,
            merge_tolerance: 1e-7,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_factor < 4 {
            return param(format!("grid_factor must be >= 4, got {}", self.grid_factor));
        }
        if !(self.gap_tolerance > 0.0) {
            return param("gap_tolerance must be positive");
        }
        if !(self.merge_tolerance > 0.0) {
            return param("merge_tolerance must be positive");
        }
        if self.max_iterations == 0 {
            return param("max_iterations must be positive");
        }
        Ok(())
    }

    pub fn grid_size(&self, m: usize) -> usize {
        self.grid_factor * (2 * m + 1)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveResult {
    pub measure: DiscreteMeasure,
    /// `||P_M mu - y||_{L^2}`.
    pub residual_l2: f64,
    /// Duality gap of the penalized problem at `tau`.
    pub duality_gap: f64,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    /// Penalty weight of the (final) penalized solve.
    pub tau: f64,
    /// Points visited along the `tau` path; empty for penalized solves.
    #[serde(default)]
    pub path: Vec<PathPoint>,
}

impl SolveResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// `1/2 ||P_M mu - y||^2 + tau ||mu||`.
pub fn tikhonov_objective(obs: &Observation, tau: f64, mu: &DiscreteMeasure) -> f64 {
    let r = obs.y.sub(&mu.project(obs.m()));
    0.5 * r.l2_norm().powi(2) + tau * mu.total_variation()
}

/// Gap between the penalized objective at `(atoms, amplitudes)` and the dual
/// objective at the residual rescaled into the dual-feasible set.
///
/// `q_at_atoms` holds the residual polynomial at the atom positions and
/// `sup_q` its sup norm over the feasible set of the dual constraint.
pub(crate) fn gap_from_parts(
    residual_sq: f64,
    amplitudes: &[Complex64],
    q_at_atoms: &[Complex64],
    sup_q: f64,
    tau: f64,
) -> f64 {
    let scale = if sup_q > tau { tau / sup_q } else { 1.0 };
    let mut gap = 0.5 * (1.0 - scale).powi(2) * residual_sq;
    for (c, q) in amplitudes.iter().zip(q_at_atoms) {
        gap += tau * c.norm() - scale * (c * q.conj()).re;
    }
    gap
}

/// Duality gap of `mu` for the penalized problem with weight `tau`.
pub fn duality_gap(obs: &Observation, tau: f64, mu: &DiscreteMeasure) -> Result<f64> {
    if !(tau > 0.0) {
        return param(format!("tau must be positive, got {tau}"));
    }
    let r = obs.y.sub(&mu.project(obs.m()));
    let sup = dual_sup(&r, SolverConfig::default().grid_size(obs.m()), true).value;
    let q: Vec<Complex64> = mu
        .spikes()
        .iter()
        .map(|s| r.eval(s.position.value()))
        .collect();
    Ok(gap_from_parts(
        r.l2_norm().powi(2),
        &mu.amplitudes(),
        &q,
        sup,
        tau,
    ))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ApproximationReport {
    pub total_variation: f64,
    pub total_variation_bound: f64,
    pub total_variation_ok: bool,
    /// `||P_M(mu - mu_0)||_{L^2}`.
    pub spectral_l2: f64,
    pub spectral_l2_bound: f64,
    pub spectral_l2_ok: bool,
    /// `||P_M(mu - mu_0)||_{L^inf}`, reported only.
    pub spectral_linf: f64,
}

impl ApproximationReport {
    pub fn pass(&self) -> bool {
        self.total_variation_ok && self.spectral_l2_ok
    }
}

/// Checks `||mu|| <= ||mu_0|| + 2 eps` and `||P_M(mu - mu_0)||_{L^2} <= 2 eps`.
pub fn is_approximation(
    mu: &DiscreteMeasure,
    mu0: &DiscreteMeasure,
    m: usize,
    eps: f64,
) -> ApproximationReport {
    let diff = mu.project(m).sub(&mu0.project(m));
    let spectral_l2 = diff.l2_norm();
    let spectral_linf = dual_sup(&diff, 16 * (2 * m + 1), true).value;
    let total_variation = mu.total_variation();
    let total_variation_bound = mu0.total_variation() + 2.0 * eps;
    // a relative slack of one part in 1e12 absorbs rounding in the sums
    let slack = 1e-12 * (1.0 + total_variation_bound);
    ApproximationReport {
        total_variation,
        total_variation_bound,
        total_variation_ok: total_variation <= total_variation_bound + slack,
        spectral_l2,
        spectral_l2_bound: 2.0 * eps,
        spectral_l2_ok: spectral_l2 <= 2.0 * eps + 1e-12 * (1.0 + spectral_l2),
        spectral_linf,
    }
}
