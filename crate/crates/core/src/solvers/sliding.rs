//! Joint local optimization of positions and amplitudes (damped Newton on the
//! penalized objective in the real coordinates `(Re c_j, Im c_j, s_j)`).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::torus::TrigPoly;

const ARMIJO: f64 = 1e-4;

/// `A(s) c` as a coefficient vector over `m = -M..M`.
pub(crate) fn model(m: usize, pos: &[f64], amps: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); 2 * m + 1];
    for (&s, &c) in pos.iter().zip(amps) {
        let step = Complex64::cis(-2.0 * PI * s);
        let mut phase = Complex64::cis(2.0 * PI * m as f64 * s) * c;
        for v in out.iter_mut() {
            *v += phase;
            phase *= step;
        }
    }
    out
}

pub(crate) fn objective(y: &TrigPoly, pos: &[f64], amps: &[Complex64], tau: f64) -> f64 {
    let mdl = model(y.degree(), pos, amps);
    let r: f64 = y
        .coeffs()
        .iter()
        .zip(&mdl)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    0.5 * r + tau * amps.iter().map(|c| c.norm()).sum::<f64>()
}

/// Runs at most `max_iter` damped Newton steps; returns the final objective.
///
/// `stop` is an absolute threshold on the Newton decrement.
pub(crate) fn slide(
    y: &TrigPoly,
    pos: &mut [f64],
    amps: &mut [Complex64],
    tau: f64,
    max_iter: usize,
    stop: f64,
) -> f64 {
    let k = pos.len();
    let mut f = objective(y, pos, amps, tau);
    if k == 0 || amps.iter().any(|c| c.norm() == 0.0) {
        return f;
    }
    let mut lambda = 1e-12;

    for _ in 0..max_iter {
        let (grad, hess) = derivatives(y, pos, amps, tau);
        let nv = 3 * k;
        let diag: Vec<f64> = (0..nv).map(|u| hess[(u, u)].abs() + 1e-300).collect();
        let mut accepted = false;
        let mut decrement = 0.0;
        for _ in 0..12 {
            let mut damped = hess.clone();
            for (u, d) in diag.iter().enumerate() {
                damped[(u, u)] += lambda * d;
            }
            let Some(chol) = damped.cholesky() else {
                lambda = (lambda * 10.0).max(1e-10);
                continue;
            };
            let p = chol.solve(&(-&grad));
            let slope = grad.dot(&p);
            decrement = -slope;
            if decrement <= stop {
                return f;
            }
            let mut t = 1.0;
            while t > 1e-6 {
                let trial_pos: Vec<f64> = (0..k).map(|j| pos[j] + t * p[3 * j + 2]).collect();
                let trial_amps: Vec<Complex64> = (0..k)
                    .map(|j| amps[j] + t * Complex64::new(p[3 * j], p[3 * j + 1]))
                    .collect();
                let ft = objective(y, &trial_pos, &trial_amps, tau);
                if ft <= f + ARMIJO * t * slope {
                    pos.copy_from_slice(&trial_pos);
                    amps.copy_from_slice(&trial_amps);
                    f = ft;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if accepted {
                lambda = (lambda * 0.1).max(1e-14);
                break;
            }
            lambda = (lambda * 10.0).max(1e-10);
        }
        if !accepted || decrement <= stop || amps.iter().any(|c| c.norm() == 0.0) {
            break;
        }
    }
    f
}


/// `(D(t), sum w sin(2 pi w t), sum w^2 cos(2 pi w t))` over `|w| <= M`.
fn pair_sums(m: usize, t: f64) -> (f64, f64, f64) {
    let e = Complex64::cis(2.0 * PI * t);
    let mut z = e;
    let (mut d, mut f1, mut f2) = (1.0, 0.0, 0.0);
    for w in 1..=m {
        let w = w as f64;
        d += 2.0 * z.re;
        f1 += 2.0 * w * z.im;
        f2 += 2.0 * w * w * z.re;
        z *= e;
    }
    (d, f1, f2)
}

/// Gradient and Hessian of the objective in `(Re c_j, Im c_j, s_j)`.
fn derivatives(y: &TrigPoly, pos: &[f64], amps: &[Complex64], tau: f64) -> (DVector<f64>, DMatrix<f64>) {
    let m = y.degree();
    let k = pos.len();
    let nv = 3 * k;
    let mdl = model(m, pos, amps);
    let r_coeffs = y.coeffs().iter().zip(&mdl).map(|(a, b)| a - b).collect();
    let r = TrigPoly::new(m, r_coeffs).expect("matching length");
    let two_pi = 2.0 * PI;
    let i = Complex64::i();

    let mut grad = DVector::<f64>::zeros(nv);
    let mut hess = DMatrix::<f64>::zeros(nv, nv);
    for j in 0..k {
        let [p0, p1, p2] = r.eval_with_derivatives(pos[j]);
        // sums of conj(r_w) w^p e^{-2 pi i w s_j}
        let r0 = p0.conj();
        let r1 = (p1 / (two_pi * i)).conj();
        let r2 = (-p2 / (two_pi * two_pi)).conj();
        let dw = Complex64::new(0.0, -two_pi);
        let (ir, ii, is) = (3 * j, 3 * j + 1, 3 * j + 2);
        grad[ir] = -r0.re;
        grad[ii] = -(i * r0).re;
        grad[is] = -(amps[j] * dw * r1).re;
        hess[(ir, is)] -= (dw * r1).re;
        hess[(is, ir)] -= (dw * r1).re;
        hess[(ii, is)] -= (i * dw * r1).re;
        hess[(is, ii)] -= (i * dw * r1).re;
        hess[(is, is)] -= (dw * dw * amps[j] * r2).re;

        let z = amps[j];
        let n = z.norm();
        grad[ir] += tau * z.re / n;
        grad[ii] += tau * z.im / n;
        let t = tau / (n * n * n);
        hess[(ir, ir)] += t * z.im * z.im;
        hess[(ii, ii)] += t * z.re * z.re;
        hess[(ir, ii)] -= t * z.re * z.im;
        hess[(ii, ir)] -= t * z.re * z.im;
    }
    for j in 0..k {
        for l in j..k {
            let (d, f1, f2) = pair_sums(m, pos[j] - pos[l]);
            let (cj, cl) = (amps[j], amps[l]);
            let block = [
                [d, 0.0, two_pi * f1 * cl.re],
                [0.0, d, two_pi * f1 * cl.im],
                [-two_pi * f1 * cj.re, -two_pi * f1 * cj.im, two_pi * two_pi * f2 * (cj.conj() * cl).re],
            ];
            for (u, row) in block.iter().enumerate() {
                for (v, &h) in row.iter().enumerate() {
                    hess[(3 * j + u, 3 * l + v)] += h;
                    if j != l {
                        hess[(3 * l + v, 3 * j + u)] += h;
                    }
                }
            }
        }
    }
    (grad, hess)
}
