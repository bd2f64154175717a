//! Brute-force reference solver: atoms pinned to a uniform grid, amplitudes by
//! accelerated proximal gradient. Used only to cross-check [`super::solve_tikhonov`].

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use super::amplitudes::soft_threshold;
use super::{gap_from_parts, Observation};
use crate::error::{param, Result};
use crate::torus::{DiscreteMeasure, TrigPoly};

const MAX_ITERATIONS: usize = 2_000_000;
const GAP_CHECK_EVERY: usize = 20;
/// Stopping gap, relative to `||y||^2`.
pub const ORACLE_GAP: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct GridLassoSolution {
    pub measure: DiscreteMeasure,
    pub objective: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves `min 1/2 ||y - A c||^2 + tau sum |c_k|` over amplitudes `c_k` at the
/// grid points `k / grid_size`.
pub fn grid_lasso_oracle(obs: &Observation, tau: f64, grid_size: usize) -> Result<GridLassoSolution> {
    let m = obs.m();
    if grid_size < 4 * (2 * m + 1) {
        return param(format!("grid_size must be >= 4(2M+1) = {}, got {grid_size}", 4 * (2 * m + 1)));
    }
    if !(tau > 0.0) {
        return param(format!("tau must be positive, got {tau}"));
    }
    let n = grid_size;
    let y = &obs.y;
    let y_sq = obs.y_norm().powi(2);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);

    // A c: the Fourier coefficients -M..M of sum_k c_k delta_{k/n}
    let forward = |c: &[Complex64]| -> TrigPoly {
        let mut buf = c.to_vec();
        fft.process(&mut buf);
        TrigPoly::from_fn(m, |f| buf[f.rem_euclid(n as i64) as usize])
    };
    let residual = |c: &[Complex64]| y.sub(&forward(c));
    let objective = |c: &[Complex64], r: &TrigPoly| {
        0.5 * r.l2_norm().powi(2) + tau * c.iter().map(|v| v.norm()).sum::<f64>()
    };
    let gap_of = |c: &[Complex64], r: &TrigPoly| {
        let q = r.eval_grid(n);
        let sup = q.iter().map(|v| v.norm()).fold(0.0, f64::max);
        gap_from_parts(r.l2_norm().powi(2), c, &q, sup, tau)
    };

    let zero = Complex64::new(0.0, 0.0);
    let step = 1.0 / n as f64;
    let mut c = vec![zero; n];
    let mut z = c.clone();
    let mut t = 1.0f64;
    let mut iterations = 0;
    let mut gap = gap_of(&c, &residual(&c));
    let mut converged = gap <= ORACLE_GAP * y_sq;
    while !converged && iterations < MAX_ITERATIONS {
        iterations += 1;
        let q = residual(&z).eval_grid(n);
        let next: Vec<Complex64> = z
            .iter()
            .zip(&q)
            .map(|(zk, qk)| soft_threshold(zk + step * qk, step * tau))
            .collect();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        // gradient restart
        let restart: f64 = z
            .iter()
            .zip(&next)
            .zip(&c)
            .map(|((zk, nk), ck)| ((zk - nk).conj() * (nk - ck)).re)
            .sum();
        if restart > 0.0 {
            t = 1.0;
            z = next.clone();
        } else {
            let w = (t - 1.0) / t_next;
            z = next.iter().zip(&c).map(|(nk, ck)| nk + w * (nk - ck)).collect();
            t = t_next;
        }
        c = next;
        if iterations % GAP_CHECK_EVERY == 0 {
            gap = gap_of(&c, &residual(&c));
            converged = gap <= ORACLE_GAP * y_sq;
        }
    }
    let r = residual(&c);
    let (pos, amps): (Vec<f64>, Vec<Complex64>) = c
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > 0.0)
        .map(|(k, v)| (k as f64 / n as f64, *v))
        .unzip();
    Ok(GridLassoSolution {
        measure: DiscreteMeasure::from_parts(&pos, &amps),
        objective: objective(&c, &r),
        gap: gap_of(&c, &r),
        iterations,
        converged,
    })
}
