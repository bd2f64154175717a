use serde::{Deserialize, Serialize};

use super::cg::solve_with_target;
use super::dual::dual_sup;
use super::{Observation, SolveResult, SolverConfig};
use crate::error::{param, Result};
use crate::torus::DiscreteMeasure;

/// Relative tolerance on `|residual - delta|`.
pub const DELTA_REL_TOL: f64 = 1e-3;
const MAX_PATH_STEPS: usize = 60;
const DOWN_FACTOR: f64 = 10.0;
/// Smallest resolvable duality gap relative to `||y||^2`.
const GAP_FLOOR: f64 = 1e-13;

/// One penalized solve along the `tau` path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub tau: f64,
    pub residual: f64,
    pub total_variation: f64,
    pub converged: bool,
}

/// `min ||mu||` subject to `||P_M mu - y|| <= delta`, following the penalized
/// path: the residual of the penalized solution is nondecreasing in `tau`.
///
/// The result is flagged (`converged == false`) when no feasible point is
/// found or the residual could not be brought within the relative tolerance.
pub fn solve_constrained(obs: &Observation, delta: f64, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    if !(delta > 0.0) || !delta.is_finite() {
        return param(format!("delta must be positive and finite, got {delta}"));
    }
    let y_norm = obs.y_norm();
    if delta >= y_norm {
        return Ok(SolveResult {
            measure: DiscreteMeasure::zero(),
            residual_l2: y_norm,
            duality_gap: 0.0,
            iterations: 0,
            objective_trace: Vec::new(),
            converged: true,
            tau: 0.0,
            path: Vec::new(),
        });
    }
    // penalized solves must resolve the objective well below delta^2; they
    // count as converged once the gap reaches what double precision resolves
    let y_sq = y_norm * y_norm;
    let target = (cfg.gap_tolerance * y_sq).min(1e-4 * delta * delta);
    let floor = target.max(GAP_FLOOR * y_sq);
    let tau_max = dual_sup(&obs.y, cfg.grid_size(obs.m()), true).value;

    let mut path = Vec::new();
    let mut iterations = 0;
    let mut run = |tau: f64, warm: &DiscreteMeasure, path: &mut Vec<PathPoint>| -> Result<SolveResult> {
        let mut r = solve_with_target(obs, tau, cfg, warm, target)?;
        r.converged = r.duality_gap <= floor;
        iterations += r.iterations;
        path.push(PathPoint {
            tau,
            residual: r.residual_l2,
            total_variation: r.measure.total_variation(),
            converged: r.converged,
        });
        Ok(r)
    };

    // walk down from tau_max (zero solution, infeasible) until feasible
    let mut hi = (tau_max, y_norm);
    let mut warm = DiscreteMeasure::zero();
    let mut feasible: Option<SolveResult> = None;
    let mut tau = tau_max / DOWN_FACTOR;
    while tau > 1e-14 * tau_max {
        let r = run(tau, &warm, &mut path)?;
        warm = r.measure.clone();
        if r.residual_l2 <= delta {
            feasible = Some(r);
            break;
        }
        // log-log extrapolation from the last two infeasible points, halved
        let next = if hi.0 < tau_max {
            let slope = (r.residual_l2.ln() - hi.1.ln()) / (tau.ln() - hi.0.ln());
            let guess = tau * (delta / r.residual_l2).powf(1.0 / slope);
            if slope > 0.0 && guess.is_finite() { 0.5 * guess } else { 0.0 }
        } else {
            0.0
        };
        hi = (tau, r.residual_l2);
        tau = next.clamp(tau / DOWN_FACTOR, tau / 2.0);
    }
    let Some(mut lo) = feasible else {
        return Ok(finish(None, false, path, iterations));
    };
    let mut best = lo.clone();

    // Illinois regula falsi on log residual - log delta over log tau
    let target_ln = delta.ln();
    let mut f_lo = lo.residual_l2.max(1e-300).ln() - target_ln;
    let mut f_hi = hi.1.ln() - target_ln;
    let mut side = 0i8;
    let mut steps = 0;
    while lo.residual_l2 < (1.0 - DELTA_REL_TOL) * delta && steps < MAX_PATH_STEPS {
        steps += 1;
        let (l_t, h_t) = (lo.tau.ln(), hi.0.ln());
        if h_t - l_t < 1e-13 {
            break;
        }
        let mut t = l_t - f_lo * (h_t - l_t) / (f_hi - f_lo);
        if !(t > l_t && t < h_t) {
            t = 0.5 * (l_t + h_t);
        }
        let tau = t.exp();
        let warm = lo.measure.clone();
        let r = run(tau, &warm, &mut path)?;
        let f = r.residual_l2.max(1e-300).ln() - target_ln;
        if r.residual_l2 <= delta {
            if r.measure.total_variation() < best.measure.total_variation() {
                best = r.clone();
            }
            lo = r;
            f_lo = f;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = (tau, r.residual_l2);
            f_hi = f;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    let hit = lo.residual_l2 >= (1.0 - DELTA_REL_TOL) * delta;
    Ok(finish(Some(best), hit, path, iterations))
}

fn finish(best: Option<SolveResult>, hit: bool, path: Vec<PathPoint>, iterations: usize) -> SolveResult {
    match best {
        Some(mut r) => {
            r.converged = r.converged && hit;
            r.iterations = iterations;
            r.path = path;
            r
        }
        None => SolveResult {
            measure: DiscreteMeasure::zero(),
            residual_l2: f64::NAN,
            duality_gap: f64::NAN,
            iterations,
            objective_trace: Vec::new(),
            converged: false,
            tau: f64::NAN,
            path,
        },
    }
}

/// Noiseless recovery: the constrained problem with
/// `delta = max(1e-8, 1e-10 ||y||)`.
pub fn solve_noiseless(obs: &Observation, cfg: &SolverConfig) -> Result<SolveResult> {
    let delta = 1e-8f64.max(1e-10 * obs.y_norm());
    solve_constrained(obs, delta, cfg)
}
