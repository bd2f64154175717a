use num_complex::Complex64;

use super::amplitudes::update_amplitudes;
use super::dual::dual_sup_from_grid;
use super::sliding::{model, objective, slide};
use super::{gap_from_parts, Observation, SolveResult, SolverConfig};
use crate::error::{param, Result};
use crate::torus::{DiscreteMeasure, TrigPoly};

const SLIDE_STEPS: usize = 30;
const STALL_LIMIT: usize = 4;

/// Penalized recovery `min 1/2 ||P_M mu - y||^2 + tau ||mu||`.
pub fn solve_tikhonov(obs: &Observation, tau: f64, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_tikhonov_from(obs, tau, cfg, &DiscreteMeasure::zero())
}

/// As [`solve_tikhonov`], starting from the atoms of `warm`.
pub fn solve_tikhonov_from(
    obs: &Observation,
    tau: f64,
    cfg: &SolverConfig,
    warm: &DiscreteMeasure,
) -> Result<SolveResult> {
    cfg.validate()?;
    if !(tau > 0.0) || !tau.is_finite() {
        return param(format!("tau must be positive and finite, got {tau}"));
    }
    let target = cfg.gap_tolerance * obs.y_norm().powi(2);
    solve_with_target(obs, tau, cfg, warm, target)
}

struct State {
    pos: Vec<f64>,
    amps: Vec<Complex64>,
}

impl State {
    fn residual(&self, y: &TrigPoly) -> TrigPoly {
        let mdl = model(y.degree(), &self.pos, &self.amps);
        let coeffs = y.coeffs().iter().zip(&mdl).map(|(a, b)| a - b).collect();
        TrigPoly::new(y.degree(), coeffs).expect("matching length")
    }

    fn prune(&mut self) {
        let keep: Vec<usize> = (0..self.pos.len())
            .filter(|&j| self.amps[j].norm() > 0.0)
            .collect();
        self.pos = keep.iter().map(|&j| self.pos[j]).collect();
        self.amps = keep.iter().map(|&j| self.amps[j]).collect();
    }

    fn from_measure(mu: &DiscreteMeasure) -> Self {
        State {
            pos: mu.spikes().iter().map(|s| s.position.value()).collect(),
            amps: mu.amplitudes(),
        }
    }

    fn measure(&self) -> DiscreteMeasure {
        DiscreteMeasure::from_parts(&self.pos, &self.amps)
    }
}

/// Core loop with an absolute gap target.
pub(crate) fn solve_with_target(
    obs: &Observation,
    tau: f64,
    cfg: &SolverConfig,
    warm: &DiscreteMeasure,
    target: f64,
) -> Result<SolveResult> {
    let y = &obs.y;
    let m = obs.m();
    let y_sq = obs.y_norm().powi(2);
    if y_sq == 0.0 {
        return Ok(SolveResult {
            measure: DiscreteMeasure::zero(),
            residual_l2: 0.0,
            duality_gap: 0.0,
            iterations: 0,
            objective_trace: vec![0.0],
            converged: true,
            tau,
            path: Vec::new(),
        });
    }
    let n_grid = cfg.grid_size(m);
    let refine = cfg.refine_positions;
    // the Gram-form gap inside the amplitude step bottoms out near this level
    let inner_floor = 1e-14 * y_sq;

    let mut st = if refine {
        State::from_measure(&warm.canonical(cfg.merge_tolerance))
    } else {
        let snapped: Vec<f64> = warm
            .spikes()
            .iter()
            .map(|s| (s.position.value() * n_grid as f64).round() / n_grid as f64)
            .collect();
        State::from_measure(&DiscreteMeasure::from_parts(&snapped, &warm.amplitudes()).canonical(0.25 / n_grid as f64))
    };
    if !st.pos.is_empty() {
        update_amplitudes(y, &st.pos, &mut st.amps, tau, target.max(inner_floor));
        st.prune();
    }

    let mut trace = Vec::new();
    let mut converged = false;
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut stalls = 0;
    let mut best_obj = objective(y, &st.pos, &st.amps, tau);
    trace.push(best_obj);

    while iterations < cfg.max_iterations {
        let r = st.residual(y);
        let values = r.eval_grid(n_grid);
        let sup = dual_sup_from_grid(&r, &values, refine);
        let q_at: Vec<Complex64> = st.pos.iter().map(|&x| r.eval(x)).collect();
        gap = gap_from_parts(r.l2_norm().powi(2), &st.amps, &q_at, sup.value, tau);
        if gap <= target {
            converged = true;
            break;
        }
        iterations += 1;

        let mut inserted = false;
        if sup.value > tau {
            let x = if refine {
                sup.position
            } else {
                sup.grid_index as f64 / n_grid as f64
            };
            let clash = st.pos.iter().any(|&p| {
                let d = (p - x).rem_euclid(1.0);
                d.min(1.0 - d) < if refine { cfg.merge_tolerance } else { 0.25 / n_grid as f64 }
            });
            if !clash {
                st.pos.push(x);
                st.amps.push(Complex64::new(0.0, 0.0));
                inserted = true;
            }
        }
        let inner = (1e-4 * gap).max(1e-2 * target).max(inner_floor);
        update_amplitudes(y, &st.pos, &mut st.amps, tau, inner);
        st.prune();

        if refine && !st.pos.is_empty() {
            slide(y, &mut st.pos, &mut st.amps, tau, SLIDE_STEPS, 1e-3 * target);
            for p in st.pos.iter_mut() {
                *p = p.rem_euclid(1.0);
            }
            st.prune();
            let before = objective(y, &st.pos, &st.amps, tau);
            let mut merged = State::from_measure(&st.measure().canonical(cfg.merge_tolerance));
            if merged.pos.len() < st.pos.len() {
                update_amplitudes(y, &merged.pos, &mut merged.amps, tau, inner);
                merged.prune();
                if objective(y, &merged.pos, &merged.amps, tau) <= before {
                    st = merged;
                }
            }
        }

        let obj = objective(y, &st.pos, &st.amps, tau);
        trace.push(obj);
        if !inserted && obj >= best_obj - 1e-15 * best_obj.abs() {
            stalls += 1;
            if stalls >= STALL_LIMIT {
                break;
            }
        } else {
            stalls = 0;
        }
        best_obj = best_obj.min(obj);
    }
    if !converged && iterations == cfg.max_iterations {
        // final gap after the last update
        let r = st.residual(y);
        let sup = dual_sup_from_grid(&r, &r.eval_grid(n_grid), refine);
        let q_at: Vec<Complex64> = st.pos.iter().map(|&x| r.eval(x)).collect();
        gap = gap_from_parts(r.l2_norm().powi(2), &st.amps, &q_at, sup.value, tau);
        converged = gap <= target;
    }

    let measure = st.measure().canonicalize();
    let residual_l2 = y.sub(&measure.project(m)).l2_norm();
    Ok(SolveResult {
        measure,
        residual_l2,
        duality_gap: gap,
        iterations,
        objective_trace: trace,
        converged,
        tau,
        path: Vec::new(),
    })
}
