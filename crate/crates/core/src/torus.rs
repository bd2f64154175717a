//! Discrete measures on the circle group R/Z and trigonometric polynomials.
//!
//! Fourier coefficients follow the analysis convention
//! `mu_hat(m) = sum_j c_j exp(-2 pi i m s_j)`, so that the projection onto the
//! window `{-M, ..., M}` evaluates as `sum_m mu_hat(m) exp(2 pi i m x)`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Spikes closer than this (in torus distance) are merged by canonicalization.
pub const MERGE_TOLERANCE: f64 = 1e-9;

const TAU: f64 = 2.0 * PI;

/// A point of the torus, stored as its representative in `[0, 1)`.
#[derive(Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct TorusPoint(f64);

impl TorusPoint {
    pub fn new(x: f64) -> Self {
        let mut v = x - x.floor();
        // x slightly below an integer rounds up to exactly 1.0
        if v >= 1.0 {
            v = 0.0;
        }
        TorusPoint(v)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Signed offset `self - other`, wrapped into `[-1/2, 1/2)`.
    pub fn offset_from(self, other: TorusPoint) -> f64 {
        let mut d = self.0 - other.0;
        if d >= 0.5 {
            d -= 1.0;
        } else if d < -0.5 {
            d += 1.0;
        }
        d
    }

    pub fn distance(self, other: TorusPoint) -> f64 {
        torus_distance(self, other)
    }

    pub fn shifted(self, dx: f64) -> Self {
        TorusPoint::new(self.0 + dx)
    }
}

impl From<f64> for TorusPoint {
    fn from(x: f64) -> Self {
        TorusPoint::new(x)
    }
}

impl From<TorusPoint> for f64 {
    fn from(p: TorusPoint) -> f64 {
        p.0
    }
}

impl fmt::Debug for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Distance on the torus, in `[0, 1/2]`.
pub fn torus_distance(x: TorusPoint, y: TorusPoint) -> f64 {
    let d = (x.0 - y.0).abs();
    d.min(1.0 - d)
}

/// Smallest pairwise torus distance; `+inf` for fewer than two points.
pub fn min_separation(support: &[TorusPoint]) -> f64 {
    if support.len() < 2 {
        return f64::INFINITY;
    }
    let mut sorted: Vec<f64> = support.iter().map(|p| p.0).collect();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut best = 1.0 - (sorted[sorted.len() - 1] - sorted[0]);
    for w in sorted.windows(2) {
        best = best.min(w[1] - w[0]);
    }
    best.min(0.5)
}

/// The minimum separation condition `min |s_j - s_k| >= 2/M` (boundary inclusive).
pub fn satisfies_separation(support: &[TorusPoint], m: usize) -> bool {
    assert!(m >= 1, "M must be positive");
    min_separation(support) >= 2.0 / m as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spike {
    pub position: TorusPoint,
    pub amplitude: Complex64,
}

impl Spike {
    pub fn new(position: f64, amplitude: Complex64) -> Self {
        Spike {
            position: TorusPoint::new(position),
            amplitude,
        }
    }
}

/// A finite weighted sum of Dirac masses with complex weights.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "MeasureRepr", into = "MeasureRepr")]
pub struct DiscreteMeasure {
    spikes: Vec<Spike>,
}

impl DiscreteMeasure {
    /// Builds a measure without merging; see [`DiscreteMeasure::canonical`].
    pub fn new(spikes: Vec<Spike>) -> Self {
        DiscreteMeasure { spikes }
    }

    pub fn zero() -> Self {
        DiscreteMeasure { spikes: Vec::new() }
    }

    pub fn from_parts(positions: &[f64], amplitudes: &[Complex64]) -> Self {
        assert_eq!(positions.len(), amplitudes.len());
        DiscreteMeasure::new(
            positions
                .iter()
                .zip(amplitudes)
                .map(|(&p, &a)| Spike::new(p, a))
                .collect(),
        )
    }

    pub fn dirac(position: f64) -> Self {
        DiscreteMeasure::new(vec![Spike::new(position, Complex64::new(1.0, 0.0))])
    }

    pub fn spikes(&self) -> &[Spike] {
        &self.spikes
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }

    pub fn positions(&self) -> Vec<TorusPoint> {
        self.spikes.iter().map(|s| s.position).collect()
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.spikes.iter().map(|s| s.amplitude).collect()
    }

    /// Canonical form with the default merge tolerance.
    pub fn canonicalize(&self) -> Self {
        self.canonical(MERGE_TOLERANCE)
    }

    /// Sorts spikes by position, merges clusters whose consecutive members are
    /// within `tol` of each other (including across 0), and drops zero amplitudes.
    pub fn canonical(&self, tol: f64) -> Self {
        let mut spikes: Vec<Spike> = self
            .spikes
            .iter()
            .copied()
            .filter(|s| s.amplitude != Complex64::new(0.0, 0.0))
            .collect();
        spikes.sort_by(|a, b| a.position.0.total_cmp(&b.position.0));
        if spikes.len() < 2 {
            return DiscreteMeasure { spikes };
        }
        // start clusters after the largest gap so no cluster straddles the cut
        let n = spikes.len();
        let gap_after = |i: usize| {
            let next = spikes[(i + 1) % n].position;
            next.offset_from(spikes[i].position).rem_euclid(1.0)
        };
        let start = (0..n)
            .max_by(|&i, &j| gap_after(i).total_cmp(&gap_after(j)))
            .map(|i| (i + 1) % n)
            .unwrap_or(0);

        let mut out: Vec<Spike> = Vec::with_capacity(n);
        let mut cluster: Vec<Spike> = Vec::new();
        for k in 0..n {
            let s = spikes[(start + k) % n];
            if let Some(last) = cluster.last() {
                if torus_distance(last.position, s.position) > tol {
                    out.push(merge_cluster(&cluster));
                    cluster.clear();
                }
            }
            cluster.push(s);
        }
        out.push(merge_cluster(&cluster));
        out.retain(|s| s.amplitude != Complex64::new(0.0, 0.0));
        out.sort_by(|a, b| a.position.0.total_cmp(&b.position.0));
        DiscreteMeasure { spikes: out }
    }

    /// Total variation norm: the sum of amplitude moduli.
    pub fn total_variation(&self) -> f64 {
        self.spikes.iter().map(|s| s.amplitude.norm()).sum()
    }

    pub fn fourier_coeff(&self, m: i64) -> Complex64 {
        self.spikes
            .iter()
            .map(|s| s.amplitude * Complex64::cis(-TAU * m as f64 * s.position.0))
            .sum()
    }

    /// `P_M mu` as a trigonometric polynomial of degree `m`.
    pub fn project(&self, m: usize) -> TrigPoly {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * m + 1];
        for s in &self.spikes {
            let step = Complex64::cis(-TAU * s.position.0);
            let mut phase = Complex64::cis(TAU * m as f64 * s.position.0) * s.amplitude;
            for c in coeffs.iter_mut() {
                *c += phase;
                phase *= step;
            }
        }
        TrigPoly { degree: m, coeffs }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        DiscreteMeasure::new(
            self.spikes
                .iter()
                .map(|s| Spike {
                    position: s.position,
                    amplitude: s.amplitude * factor,
                })
                .collect(),
        )
    }

    /// `self + other`, canonicalized.
    pub fn plus(&self, other: &DiscreteMeasure) -> Self {
        let mut spikes = self.spikes.clone();
        spikes.extend_from_slice(&other.spikes);
        DiscreteMeasure::new(spikes).canonicalize()
    }

    /// `self - other`, canonicalized.
    pub fn minus(&self, other: &DiscreteMeasure) -> Self {
        self.plus(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn merge_cluster(cluster: &[Spike]) -> Spike {
    if cluster.len() == 1 {
        return cluster[0];
    }
    let anchor = cluster[0].position;
    let mut weight = 0.0;
    let mut offset = 0.0;
    let mut amplitude = Complex64::new(0.0, 0.0);
    for s in cluster {
        let w = s.amplitude.norm();
        weight += w;
        offset += w * s.position.offset_from(anchor);
        amplitude += s.amplitude;
    }
    Spike {
        position: anchor.shifted(if weight > 0.0 { offset / weight } else { 0.0 }),
        amplitude,
    }
}

#[derive(Serialize, Deserialize)]
struct SpikeRepr {
    pos: f64,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    spikes: Vec<SpikeRepr>,
}

impl From<MeasureRepr> for DiscreteMeasure {
    fn from(r: MeasureRepr) -> Self {
        DiscreteMeasure::new(
            r.spikes
                .into_iter()
                .map(|s| Spike::new(s.pos, Complex64::new(s.re, s.im)))
                .collect(),
        )
    }
}

impl From<DiscreteMeasure> for MeasureRepr {
    fn from(m: DiscreteMeasure) -> Self {
        MeasureRepr {
            spikes: m
                .spikes
                .into_iter()
                .map(|s| SpikeRepr {
                    pos: s.position.0,
                    re: s.amplitude.re,
                    im: s.amplitude.im,
                })
                .collect(),
        }
    }
}

/// A trigonometric polynomial `sum_{m=-M}^{M} c_m exp(2 pi i m x)`.
///
/// Coefficients are stored in order `m = -M, ..., M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrigPolyRepr", into = "TrigPolyRepr")]
pub struct TrigPoly {
    degree: usize,
    coeffs: Vec<Complex64>,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

impl TrigPoly {
    pub fn new(degree: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * degree + 1 {
            return param(format!(
                "degree {degree} needs {} coefficients, got {}",
                2 * degree + 1,
                coeffs.len()
            ));
        }
        Ok(TrigPoly { degree, coeffs })
    }

    pub fn zeros(degree: usize) -> Self {
        TrigPoly {
            degree,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * degree + 1],
        }
    }

    /// Builds a polynomial from a coefficient function of the frequency.
    pub fn from_fn(degree: usize, f: impl Fn(i64) -> Complex64) -> Self {
        let d = degree as i64;
        TrigPoly {
            degree,
            coeffs: (-d..=d).map(f).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of frequency `m`; zero outside the window.
    pub fn coeff(&self, m: i64) -> Complex64 {
        let d = self.degree as i64;
        if m.abs() > d {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(m + d) as usize]
        }
    }

    pub fn frequencies(&self) -> impl Iterator<Item = i64> {
        let d = self.degree as i64;
        -d..=d
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.eval_derivative(x, 0)
    }

    /// Value of the `order`-th derivative at `x`.
    pub fn eval_derivative(&self, x: f64, order: u32) -> Complex64 {
        let d = self.degree as i64;
        let step = Complex64::cis(TAU * x);
        let mut phase = Complex64::cis(-TAU * d as f64 * x);
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, m) in self.coeffs.iter().zip(-d..=d) {
            let w = if order == 0 {
                *c
            } else {
                c * Complex64::new(0.0, TAU * m as f64).powu(order)
            };
            acc += w * phase;
            phase *= step;
        }
        acc
    }

    /// Values of the polynomial and its first two derivatives at `x`.
    pub fn eval_with_derivatives(&self, x: f64) -> [Complex64; 3] {
        let d = self.degree as i64;
        let step = Complex64::cis(TAU * x);
        let mut phase = Complex64::cis(-TAU * d as f64 * x);
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (c, m) in self.coeffs.iter().zip(-d..=d) {
            let t = c * phase;
            let w = TAU * m as f64;
            out[0] += t;
            out[1] += t * Complex64::new(0.0, w);
            out[2] -= t * (w * w);
            phase *= step;
        }
        out
    }

    /// The `order`-th derivative as a polynomial of the same degree.
    pub fn derivative(&self, order: u32) -> TrigPoly {
        let d = self.degree as i64;
        TrigPoly {
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .zip(-d..=d)
                .map(|(c, m)| c * Complex64::new(0.0, TAU * m as f64).powu(order))
                .collect(),
        }
    }

    /// L2 norm on the torus, by Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Values at the uniform grid `k / n`, `k = 0..n`.
    ///
    /// Frequencies are folded modulo `n`, which is exact at grid points for any `n`.
    pub fn eval_grid(&self, n: usize) -> Vec<Complex64> {
        assert!(n > 0, "grid must be nonempty");
        let d = self.degree as i64;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (c, m) in self.coeffs.iter().zip(-d..=d) {
            buf[m.rem_euclid(n as i64) as usize] += c;
        }
        PLANNER.with(|p| {
            let fft = p.borrow_mut().plan_fft_inverse(n);
            fft.process(&mut buf);
        });
        buf
    }

    pub fn scale(&self, factor: Complex64) -> TrigPoly {
        TrigPoly {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Coefficientwise sum; the result has the larger of the two degrees.
    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        let degree = self.degree.max(other.degree);
        TrigPoly::from_fn(degree, |m| self.coeff(m) + other.coeff(m))
    }

    pub fn sub(&self, other: &TrigPoly) -> TrigPoly {
        let degree = self.degree.max(other.degree);
        TrigPoly::from_fn(degree, |m| self.coeff(m) - other.coeff(m))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Serialize, Deserialize)]
struct TrigPolyRepr {
    degree: usize,
    coeffs: Vec<[f64; 2]>,
}

impl TryFrom<TrigPolyRepr> for TrigPoly {
    type Error = Error;

    fn try_from(r: TrigPolyRepr) -> Result<Self> {
        TrigPoly::new(
            r.degree,
            r.coeffs
                .into_iter()
                .map(|[re, im]| Complex64::new(re, im))
                .collect(),
        )
    }
}

impl From<TrigPoly> for TrigPolyRepr {
    fn from(p: TrigPoly) -> Self {
        TrigPolyRepr {
            degree: p.degree,
            coeffs: p.coeffs.into_iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dirichlet_closed(m: usize, x: f64) -> f64 {
        let s = (PI * x).sin();
        if s.abs() < 1e-12 {
            return (2 * m + 1) as f64;
        }
        ((2 * m + 1) as f64 * PI * x).sin() / s
    }

    #[test]
    fn distance_examples() {
        let d = |a: f64, b: f64| torus_distance(TorusPoint::new(a), TorusPoint::new(b));
        assert!((d(0.1, 0.9) - 0.2).abs() < 1e-15);
        assert_eq!(d(0.37, 0.37), 0.0);
        assert_eq!(d(0.25, 0.75), 0.5);
    }

    #[test]
    fn torus_point_wraps() {
        assert_eq!(TorusPoint::new(1.25).value(), 0.25);
        assert!((TorusPoint::new(-0.25).value() - 0.75).abs() < 1e-15);
        assert_eq!(TorusPoint::new(-1e-18).value(), 0.0);
        assert_eq!(TorusPoint::new(3.0).value(), 0.0);
    }

    #[test]
    fn separation_examples() {
        let pts = |v: &[f64]| v.iter().map(|&x| TorusPoint::new(x)).collect::<Vec<_>>();
        assert_eq!(min_separation(&pts(&[0.0, 0.5])), 0.5);
        assert_eq!(min_separation(&pts(&[0.0, 2.0 / 128.0, 0.5])), 2.0 / 128.0);
        assert_eq!(min_separation(&pts(&[0.3])), f64::INFINITY);
        assert_eq!(min_separation(&[]), f64::INFINITY);
        assert!(satisfies_separation(&pts(&[0.0, 0.5]), 128));
        assert!(!satisfies_separation(&pts(&[0.0, 1.0 / 128.0]), 128));
        assert!(satisfies_separation(&pts(&[0.0, 2.0 / 128.0]), 128));
        // wraparound pair
        assert!((min_separation(&pts(&[0.01, 0.5, 0.99])) - 0.02).abs() < 1e-15);
    }

    #[test]
    fn total_variation_examples() {
        let mu = DiscreteMeasure::from_parts(&[0.0, 0.5], &[c(3.0, 0.0), c(0.0, -4.0)]);
        assert_eq!(mu.total_variation(), 7.0);
        assert_eq!(DiscreteMeasure::zero().total_variation(), 0.0);
        let theta = 1.234;
        let mu = DiscreteMeasure::from_parts(&[0.2], &[Complex64::cis(theta)]);
        assert!((mu.total_variation() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fourier_coeff_examples() {
        let d0 = DiscreteMeasure::dirac(0.0);
        for m in -5..=5 {
            assert_eq!(d0.fourier_coeff(m), c(1.0, 0.0));
        }
        let half = DiscreteMeasure::dirac(0.5);
        for m in -5i64..=5 {
            let want = if m % 2 == 0 { 1.0 } else { -1.0 };
            assert!((half.fourier_coeff(m) - c(want, 0.0)).norm() < 1e-14);
        }
        let mu = DiscreteMeasure::from_parts(&[0.0, 0.25], &[c(2.0, 0.0), c(-1.0, 0.0)]);
        assert!((mu.fourier_coeff(1) - c(2.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn project_examples() {
        let p = DiscreteMeasure::dirac(0.0).project(2);
        assert_eq!(p.coeffs().len(), 5);
        for v in p.coeffs() {
            assert!((v - c(1.0, 0.0)).norm() < 1e-15);
        }
        let z = DiscreteMeasure::zero().project(7);
        assert!(z.coeffs().iter().all(|v| v.norm() == 0.0));

        let mu = DiscreteMeasure::from_parts(
            &[0.113, 0.472, 0.861],
            &[c(1.0, -0.5), c(-0.3, 2.0), c(0.7, 0.7)],
        );
        let p = mu.project(8);
        for m in -8i64..=8 {
            // direct per-frequency summation
            let mut want = c(0.0, 0.0);
            for s in mu.spikes() {
                let arg = -2.0 * PI * m as f64 * s.position.value();
                want += s.amplitude * c(arg.cos(), arg.sin());
            }
            assert!((p.coeff(m) - want).norm() < 1e-12);
        }
    }

    #[test]
    fn trig_eval_examples() {
        let p = TrigPoly::new(1, vec![c(1.0, 0.0); 3]).unwrap();
        assert!((p.eval(0.0) - c(3.0, 0.0)).norm() < 1e-15);
        assert!((p.l2_norm() - 3f64.sqrt()).abs() < 1e-15);
        let mono = TrigPoly::from_fn(1, |m| if m == 1 { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let d = mono.derivative(1);
        assert!((d.coeff(1) - c(0.0, 2.0 * PI)).norm() < 1e-15);
        assert!(TrigPoly::new(2, vec![c(0.0, 0.0); 4]).is_err());
    }

    #[test]
    fn eval_grid_matches_direct() {
        let p = TrigPoly::from_fn(6, |m| c((m as f64).sin(), 0.3 * m as f64));
        for n in [5usize, 13, 64] {
            let g = p.eval_grid(n);
            for (k, v) in g.iter().enumerate() {
                assert!((v - p.eval(k as f64 / n as f64)).norm() < 1e-11, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn derivative_evaluation_agrees() {
        let p = TrigPoly::from_fn(5, |m| c(1.0 / (1.0 + m.abs() as f64), 0.1 * m as f64));
        let x = 0.317;
        let all = p.eval_with_derivatives(x);
        for order in 0..3u32 {
            let a = p.eval_derivative(x, order);
            let b = p.derivative(order).eval(x);
            assert!((a - b).norm() < 1e-9 * (1.0 + b.norm()));
            assert!((all[order as usize] - b).norm() < 1e-9 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn canonicalization_merges_and_drops() {
        let mu = DiscreteMeasure::from_parts(
            &[0.5, 0.5 + 1e-11, 0.2, 0.999_999_999_999, 0.0, 0.7],
            &[c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)],
        );
        let can = mu.canonicalize();
        assert_eq!(can.len(), 3);
        let amps: Vec<f64> = can.spikes().iter().map(|s| s.amplitude.re).collect();
        assert!(amps.contains(&3.0));
        assert!(amps.contains(&2.0));
        assert!(amps.contains(&-1.0));
        let cancel = DiscreteMeasure::from_parts(&[0.3, 0.3], &[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(cancel.canonicalize().is_empty());
    }

    #[test]
    fn json_round_trip() {
        let mu = DiscreteMeasure::from_parts(&[0.125, 0.3], &[c(1.0, 0.0), c(-0.1, 1.0 / 3.0)]);
        let s = mu.to_json().unwrap();
        assert!(s.starts_with(r#"{"spikes":[{"pos":0.125,"re":1.0,"im":0.0}"#));
        assert_eq!(DiscreteMeasure::from_json(&s).unwrap(), mu);

        let p = TrigPoly::from_fn(2, |m| c(m as f64 / 7.0, 1.0 / (m as f64 + 3.5)));
        let s = p.to_json().unwrap();
        assert!(s.starts_with(r#"{"degree":2,"coeffs":[["#));
        let back = TrigPoly::from_json(&s).unwrap();
        for (a, b) in back.coeffs().iter().zip(p.coeffs()) {
            assert!((a - b).norm() <= 1e-15 * b.norm());
        }
        assert!(TrigPoly::from_json(r#"{"degree":1,"coeffs":[[1,0]]}"#).is_err());
    }

    fn arb_measure() -> impl Strategy<Value = DiscreteMeasure> {
        prop::collection::vec((0.0..1.0f64, -2.0..2.0f64, -2.0..2.0f64), 0..6).prop_map(|v| {
            DiscreteMeasure::new(v.into_iter().map(|(p, re, im)| Spike::new(p, c(re, im))).collect())
        })
    }

    proptest! {
        #[test]
        fn projection_is_dirichlet_convolution(mu in arb_measure(), m in 1usize..20, x in 0.0..1.0f64) {
            let p = mu.project(m);
            let direct: Complex64 = mu
                .spikes()
                .iter()
                .map(|s| s.amplitude * dirichlet_closed(m, x - s.position.value()))
                .sum();
            let scale = 1.0 + mu.total_variation() * (2 * m + 1) as f64;
            prop_assert!((p.eval(x) - direct).norm() <= 1e-10 * scale);
        }

        #[test]
        fn distance_is_metric(a in 0.0..1.0f64, b in 0.0..1.0f64, z in 0.0..1.0f64) {
            let (a, b, z) = (TorusPoint::new(a), TorusPoint::new(b), TorusPoint::new(z));
            let dab = torus_distance(a, b);
            prop_assert!((0.0..=0.5).contains(&dab));
            prop_assert_eq!(dab, torus_distance(b, a));
            prop_assert!(dab <= torus_distance(a, z) + torus_distance(z, b) + 1e-15);
        }

        #[test]
        fn projection_is_linear(mu in arb_measure(), nu in arb_measure(), ar in -2.0..2.0f64, bi in -2.0..2.0f64) {
            let (a, b) = (c(ar, 0.5), c(0.3, bi));
            let combo = DiscreteMeasure::new(
                mu.scaled(a).spikes().iter().chain(nu.scaled(b).spikes()).copied().collect(),
            );
            let lhs = combo.project(6);
            let rhs = mu.project(6).scale(a).add(&nu.project(6).scale(b));
            for (x, y) in lhs.coeffs().iter().zip(rhs.coeffs()) {
                prop_assert!((x - y).norm() < 1e-10);
            }
        }

        #[test]
        fn total_variation_additive_on_disjoint(mu in arb_measure()) {
            // split by position into two disjoint halves
            let (lo, hi): (Vec<Spike>, Vec<Spike>) =
                mu.spikes().iter().partition(|s| s.position.value() < 0.5);
            let lo = DiscreteMeasure::new(lo);
            let hi = DiscreteMeasure::new(hi);
            prop_assert!((lo.total_variation() + hi.total_variation() - mu.total_variation()).abs() < 1e-12);
        }

        #[test]
        fn parseval(coeffs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 9)) {
            let p = TrigPoly::new(4, coeffs.into_iter().map(|(r, i)| c(r, i)).collect()).unwrap();
            let n = 64;
            let grid = p.eval_grid(n);
            let l2 = (grid.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64).sqrt();
            prop_assert!((l2 - p.l2_norm()).abs() < 1e-12);
        }
    }
}
