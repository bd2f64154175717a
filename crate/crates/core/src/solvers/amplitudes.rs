//! Amplitude update for a fixed set of positions: the complex Lasso
//! `min 1/2 c^H G c - Re(c^H b) + tau sum |c_j|` with `G` the Dirichlet Gram
//! matrix, solved by cyclic proximal coordinate descent.

use num_complex::Complex64;

use crate::torus::{TorusPoint, TrigPoly};

const MAX_SWEEPS: usize = 20_000;
const GAP_CHECK_EVERY: usize = 5;

/// Dirichlet kernel `sum_{|m| <= M} e^{2 pi i m x}`.
pub(crate) fn dirichlet(m: usize, x: f64) -> f64 {
    let t = TorusPoint::new(x).offset_from(TorusPoint::new(0.0));
    let s = (std::f64::consts::PI * t).sin();
    let n = (2 * m + 1) as f64;
    if s.abs() < 1e-10 {
        // second-order expansion around 0
        let pt = std::f64::consts::PI * t;
        return n * (1.0 - (n * n - 1.0) * pt * pt / 6.0);
    }
    (n * std::f64::consts::PI * t).sin() / s
}

pub(crate) fn soft_threshold(z: Complex64, t: f64) -> Complex64 {
    let r = z.norm();
    if r <= t {
        Complex64::new(0.0, 0.0)
    } else {
        z * ((r - t) / r)
    }
}

/// Fixed-support problem data.
pub(crate) struct Restricted {
    gram: Vec<f64>,
    b: Vec<Complex64>,
    k: usize,
    y_sq: f64,
}

impl Restricted {
    pub(crate) fn new(y: &TrigPoly, positions: &[f64]) -> Self {
        let m = y.degree();
        let k = positions.len();
        let mut gram = vec![0.0; k * k];
        for i in 0..k {
            for j in i..k {
                let v = dirichlet(m, positions[i] - positions[j]);
                gram[i * k + j] = v;
                gram[j * k + i] = v;
            }
        }
        Restricted {
            gram,
            b: positions.iter().map(|&x| y.eval(x)).collect(),
            k,
            y_sq: y.l2_norm().powi(2),
        }
    }

    /// `||y - A c||^2` from the Gram form.
    fn residual_sq(&self, c: &[Complex64], gc: &[Complex64]) -> f64 {
        let mut quad = 0.0;
        let mut lin = 0.0;
        for j in 0..self.k {
            quad += (c[j].conj() * gc[j]).re;
            lin += (c[j].conj() * self.b[j]).re;
        }
        (self.y_sq - 2.0 * lin + quad).max(0.0)
    }

    /// Duality gap of the problem restricted to the current positions.
    fn gap(&self, c: &[Complex64], gc: &[Complex64], tau: f64) -> f64 {
        let q: Vec<Complex64> = (0..self.k).map(|j| self.b[j] - gc[j]).collect();
        let sup = q.iter().map(|v| v.norm()).fold(0.0, f64::max);
        super::gap_from_parts(self.residual_sq(c, gc), c, &q, sup, tau)
    }
}

/// Minimizes over amplitudes in place; returns the restricted duality gap.
pub(crate) fn update_amplitudes(
    y: &TrigPoly,
    positions: &[f64],
    amps: &mut [Complex64],
    tau: f64,
    gap_target: f64,
) -> f64 {
    let prob = Restricted::new(y, positions);
    let k = prob.k;
    if k == 0 {
        return 0.0;
    }
    let g = &prob.gram;
    let mut gc = vec![Complex64::new(0.0, 0.0); k];
    for i in 0..k {
        for j in 0..k {
            gc[i] += g[i * k + j] * amps[j];
        }
    }
    let mut gap = prob.gap(amps, &gc, tau);
    for sweep in 0..MAX_SWEEPS {
        if gap <= gap_target {
            break;
        }
        for j in 0..k {
            let diag = g[j * k + j];
            let z = prob.b[j] - gc[j] + diag * amps[j];
            let new = soft_threshold(z, tau) / diag;
            let delta = new - amps[j];
            if delta != Complex64::new(0.0, 0.0) {
                amps[j] = new;
                for i in 0..k {
                    gc[i] += g[i * k + j] * delta;
                }
            }
        }
        if sweep % GAP_CHECK_EVERY == GAP_CHECK_EVERY - 1 {
            // refresh to cap drift of the incremental products
            for i in 0..k {
                gc[i] = (0..k).map(|j| g[i * k + j] * amps[j]).sum();
            }
            gap = prob.gap(amps, &gc, tau);
        }
    }
    prob.gap(amps, &gc, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::DiscreteMeasure;

    #[test]
    fn dirichlet_matches_sum() {
        let m = 9;
        for &x in &[0.0, 1e-12, 1e-7, 0.013, 0.5, 0.77, -0.2] {
            let direct: f64 = (-(m as i64)..=m as i64)
                .map(|k| (2.0 * std::f64::consts::PI * k as f64 * x).cos())
                .sum();
            assert!((dirichlet(m, x) - direct).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn exact_support_small_tau_recovers_amplitudes() {
        let pos = [0.1, 0.45, 0.8];
        let amps0 = [Complex64::new(1.0, 0.5), Complex64::new(-2.0, 0.0), Complex64::new(0.0, 1.0)];
        let y = DiscreteMeasure::from_parts(&pos, &amps0).project(16);
        let mut amps = vec![Complex64::new(0.0, 0.0); 3];
        let gap = update_amplitudes(&y, &pos, &mut amps, 1e-9, 1e-20);
        assert!(gap < 1e-12);
        for (a, b) in amps.iter().zip(&amps0) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn large_tau_zeroes_everything() {
        let pos = [0.1, 0.6];
        let y = DiscreteMeasure::from_parts(&pos, &[Complex64::new(1.0, 0.0); 2]).project(8);
        let mut amps = vec![Complex64::new(0.3, 0.0); 2];
        update_amplitudes(&y, &pos, &mut amps, 1e3, 1e-14);
        assert!(amps.iter().all(|a| a.norm() == 0.0));
    }
}
