use num_complex::Complex64;
use serde::Serialize;

use crate::torus::TrigPoly;

/// Location and value of the largest modulus of a polynomial.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DualSup {
    pub value: f64,
    pub position: f64,
    /// Index of the best grid point (lowest index wins ties).
    pub grid_index: usize,
    pub grid_value: f64,
}

/// Local maxima of `|q|` within this fraction of the grid maximum are refined.
const CANDIDATE_FRACTION: f64 = 0.95;
const MAX_CANDIDATES: usize = 64;
const REFINE_STEPS: usize = 20;

/// Sup of `|q|` over the torus: grid search on `grid_size` points, then (when
/// `refine`) damped Newton steps on `|q|^2` around each competitive local maximum.
pub fn dual_sup(q: &TrigPoly, grid_size: usize, refine: bool) -> DualSup {
    let values = q.eval_grid(grid_size);
    dual_sup_from_grid(q, &values, refine)
}

pub(crate) fn dual_sup_from_grid(q: &TrigPoly, values: &[Complex64], refine: bool) -> DualSup {
    let n = values.len();
    let mods: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    let mut grid_index = 0;
    for (k, &v) in mods.iter().enumerate() {
        if v > mods[grid_index] {
            grid_index = k;
        }
    }
    let grid_value = mods[grid_index];
    let mut best = DualSup {
        value: grid_value,
        position: grid_index as f64 / n as f64,
        grid_index,
        grid_value,
    };
    if !refine || grid_value == 0.0 {
        return best;
    }

    let mut candidates: Vec<usize> = (0..n)
        .filter(|&k| {
            let v = mods[k];
            v >= CANDIDATE_FRACTION * grid_value
                && v >= mods[(k + n - 1) % n]
                && v >= mods[(k + 1) % n]
        })
        .collect();
    candidates.sort_by(|&a, &b| mods[b].total_cmp(&mods[a]).then(a.cmp(&b)));
    candidates.truncate(MAX_CANDIDATES);
    if !candidates.contains(&grid_index) {
        candidates.insert(0, grid_index);
    }

    let h = 1.0 / n as f64;
    for k in candidates {
        let (x, v) = refine_peak(q, k as f64 * h, h);
        if v > best.value {
            best.value = v;
            best.position = x.rem_euclid(1.0);
        }
    }
    // ties resolve towards the grid winner
    if best.value < grid_value {
        best.value = grid_value;
        best.position = grid_index as f64 / n as f64;
    }
    best
}

/// Maximizes `|q|^2` near `x0` within `[x0 - h, x0 + h]`.
pub(crate) fn refine_peak(q: &TrigPoly, x0: f64, h: f64) -> (f64, f64) {
    let mut x = x0;
    let [v0, ..] = q.eval_with_derivatives(x);
    let mut best = (x, v0.norm());
    for _ in 0..REFINE_STEPS {
        let [v, d1, d2] = q.eval_with_derivatives(x);
        let g = 2.0 * (d1 * v.conj()).re;
        let curv = 2.0 * (d1.norm_sqr() + (d2 * v.conj()).re);
        let step = if curv < 0.0 {
            -g / curv
        } else {
            0.25 * h * g.signum()
        };
        let next = (x + step).clamp(x0 - h, x0 + h);
        let val = q.eval(next).norm();
        if val >= best.1 {
            best = (next, val);
        } else {
            // overshoot: halve back towards the best point
            x = 0.5 * (next + best.0);
            let val = q.eval(x).norm();
            if val >= best.1 {
                best = (x, val);
            }
            continue;
        }
        if (next - x).abs() < 1e-16 {
            break;
        }
        x = next;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::DiscreteMeasure;

    #[test]
    fn finds_off_grid_peak() {
        let m = 32;
        let x0 = 0.123456789;
        let q = DiscreteMeasure::from_parts(&[x0], &[Complex64::new(0.0, 2.0)]).project(m);
        let s = dual_sup(&q, 16 * (2 * m + 1), true);
        assert!((s.position - x0).abs() < 1e-10, "{}", s.position);
        assert!((s.value - 2.0 * (2 * m + 1) as f64).abs() < 1e-9);
        let coarse = dual_sup(&q, 16 * (2 * m + 1), false);
        assert!(coarse.value <= s.value);
    }

    #[test]
    fn zero_polynomial() {
        let s = dual_sup(&TrigPoly::zeros(4), 64, true);
        assert_eq!(s.value, 0.0);
        assert_eq!(s.grid_index, 0);
    }
}
