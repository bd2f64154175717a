//! Interpolating polynomials `f(x) = sum_j alpha_j G(x - s_j) + beta_j G'(x - s_j)`
//! with prescribed values `a` and derivatives `b` on a separated support.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::kernels::{g_kernel, Kernel};
use crate::torus::{satisfies_separation, TorusPoint, TrigPoly};

/// Below this degree the invertibility guarantees are not available.
pub const THEORY_MIN_DEGREE: usize = 128;

/// Radius of the neighbourhoods `S_M(j)` in units of `1/M`.
pub const NEAR_RADIUS: f64 = 0.16;

/// Condition estimates above this are treated as singular.
const MAX_CONDITION: f64 = 1e13;

/// `(D_l)_{jk} = G^{(l)}(s_j - s_k)` for `l = 0, 1, 2`.
#[derive(Clone, Debug)]
pub struct CertificateMatrices {
    pub d0: DMatrix<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    pub support: Vec<TorusPoint>,
    pub degree: usize,
    kernel: Kernel,
}

impl CertificateMatrices {
    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// True when `M` is in the regime where the construction is guaranteed.
    pub fn in_theory_regime(&self) -> bool {
        self.degree >= THEORY_MIN_DEGREE
    }
}

/// Assembles `D0, D1, D2`. The support must satisfy the `2/M` separation.
pub fn build_matrices(support: &[TorusPoint], m: usize) -> Result<CertificateMatrices> {
    if m < 2 {
        return param(format!("certificate degree must be >= 2, got {m}"));
    }
    if !satisfies_separation(support, m) {
        return param(format!("support violates the 2/M separation for M = {m}"));
    }
    let kernel = g_kernel(m)?;
    let j = support.len();
    let mut d = [DMatrix::zeros(j, j), DMatrix::zeros(j, j), DMatrix::zeros(j, j)];
    for r in 0..j {
        for c in 0..j {
            let x = support[r].offset_from(support[c]);
            for (order, mat) in d.iter_mut().enumerate() {
                mat[(r, c)] = kernel.eval(x, order as u32);
            }
        }
    }
    let [d0, d1, d2] = d;
    Ok(CertificateMatrices {
        d0,
        d1,
        d2,
        support: support.to_vec(),
        degree: m,
        kernel,
    })
}

/// Maximum absolute row sum.
pub fn inf_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn inverse(a: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    if a.is_empty() {
        return Ok(a.clone());
    }
    let inv = a.clone().lu().try_inverse().ok_or_else(|| Error::Singular {
        context: context.to_string(),
        condition: f64::INFINITY,
    })?;
    let condition = inf_norm(a) * inf_norm(&inv);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::Singular {
            context: context.to_string(),
            condition,
        });
    }
    Ok(inv)
}

fn real_parts(v: &[Complex64]) -> (nalgebra::DVector<f64>, nalgebra::DVector<f64>) {
    (
        nalgebra::DVector::from_iterator(v.len(), v.iter().map(|z| z.re)),
        nalgebra::DVector::from_iterator(v.len(), v.iter().map(|z| z.im)),
    )
}

fn to_complex(re: &nalgebra::DVector<f64>, im: &nalgebra::DVector<f64>) -> Vec<Complex64> {
    re.iter().zip(im.iter()).map(|(&r, &i)| Complex64::new(r, i)).collect()
}

/// The interpolating polynomial `f` in kernel form.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub support: Vec<TorusPoint>,
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
    pub degree: usize,
    /// Infinity-norm condition estimate of the Schur complement.
    pub schur_condition: f64,
    kernel: Kernel,
}

/// Solves the block system `[[D0, D1], [D1, D2]] [alpha; beta] = [a; b]` through
/// the Schur complement `D2 - D1 D0^{-1} D1`.
pub fn solve_coefficients(
    mats: &CertificateMatrices,
    a: &[Complex64],
    b: &[Complex64],
) -> Result<Certificate> {
    let j = mats.len();
    if a.len() != j || b.len() != j {
        return param(format!(
            "interpolation data must have length {j}, got {} and {}",
            a.len(),
            b.len()
        ));
    }
    let d0_inv = inverse(&mats.d0, "D0")?;
    let schur = &mats.d2 - &mats.d1 * &d0_inv * &mats.d1;
    let schur_inv = inverse(&schur, "Schur complement D2 - D1 D0^-1 D1")?;
    let schur_condition = if j == 0 {
        1.0
    } else {
        inf_norm(&schur) * inf_norm(&schur_inv)
    };

    let (a_re, a_im) = real_parts(a);
    let (b_re, b_im) = real_parts(b);
    let solve = |a: &nalgebra::DVector<f64>, b: &nalgebra::DVector<f64>| {
        let beta = &schur_inv * (b - &mats.d1 * (&d0_inv * a));
        let alpha = &d0_inv * (a - &mats.d1 * &beta);
        (alpha, beta)
    };
    let (alpha_re, beta_re) = solve(&a_re, &b_re);
    let (alpha_im, beta_im) = solve(&a_im, &b_im);

    Ok(Certificate {
        support: mats.support.clone(),
        alpha: to_complex(&alpha_re, &alpha_im),
        beta: to_complex(&beta_re, &beta_im),
        degree: mats.degree,
        schur_condition,
        kernel: mats.kernel.clone(),
    })
}

impl Certificate {
    /// `f^{(order)}(x)` for `order <= 2`.
    pub fn eval(&self, x: f64, order: u32) -> Complex64 {
        assert!(order <= 2, "certificate derivatives are provided up to order 2");
        self.support
            .iter()
            .zip(self.alpha.iter().zip(&self.beta))
            .map(|(s, (al, be))| {
                let t = x - s.value();
                al * self.kernel.eval(t, order) + be * self.kernel.eval(t, order + 1)
            })
            .sum()
    }

    /// Spectral form: `f_hat(m) = G_hat(m) sum_j (alpha_j + 2 pi i m beta_j) e^{-2 pi i m s_j}`.
    pub fn spectral(&self) -> TrigPoly {
        let g = self.kernel.spectral().expect("G has a spectral form");
        TrigPoly::from_fn(g.degree(), |m| {
            let w = Complex64::new(0.0, 2.0 * std::f64::consts::PI * m as f64);
            let sum: Complex64 = self
                .support
                .iter()
                .zip(self.alpha.iter().zip(&self.beta))
                .map(|(s, (al, be))| {
                    (al + w * be) * Complex64::cis(-2.0 * std::f64::consts::PI * m as f64 * s.value())
                })
                .sum();
            g.coeff(m) * sum
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }
}

fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `||a||_inf + ||b||_inf / M`, the natural scale of an interpolation problem.
pub fn data_scale(a: &[Complex64], b: &[Complex64], m: usize) -> f64 {
    max_abs(a) + max_abs(b) / m as f64
}

/// Residual of the full block system, relative to [`data_scale`].
pub fn block_residual(
    mats: &CertificateMatrices,
    cert: &Certificate,
    a: &[Complex64],
    b: &[Complex64],
) -> f64 {
    let j = mats.len();
    let m = mats.degree as f64;
    let mut worst: f64 = 0.0;
    for r in 0..j {
        let mut top = -a[r];
        let mut bottom = -b[r];
        for c in 0..j {
            top += mats.d0[(r, c)] * cert.alpha[c] + mats.d1[(r, c)] * cert.beta[c];
            bottom += mats.d1[(r, c)] * cert.alpha[c] + mats.d2[(r, c)] * cert.beta[c];
        }
        worst = worst.max(top.norm()).max(bottom.norm() / m);
    }
    let scale = data_scale(a, b, mats.degree);
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct InterpolationReport {
    pub value_error: f64,
    /// Derivative error scaled by `1/M`.
    pub derivative_error: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Re-evaluates `f` and `f'` on the support and compares with `a`, `b`.
pub fn verify_interpolation(
    cert: &Certificate,
    a: &[Complex64],
    b: &[Complex64],
    tol: f64,
) -> InterpolationReport {
    let m = cert.degree as f64;
    let mut value_error: f64 = 0.0;
    let mut derivative_error: f64 = 0.0;
    for (k, s) in cert.support.iter().enumerate() {
        value_error = value_error.max((cert.eval(s.value(), 0) - a[k]).norm());
        derivative_error = derivative_error.max((cert.eval(s.value(), 1) - b[k]).norm() / m);
    }
    let threshold = tol * data_scale(a, b, cert.degree);
    InterpolationReport {
        value_error,
        derivative_error,
        threshold,
        pass: value_error <= threshold && derivative_error <= threshold,
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AffineRemainderReport {
    /// Largest `|f(x) - a_j - b_j (x - s_j)| / ((M^2 ||a|| + M ||b||) |x - s_j|^2)`.
    pub constant: f64,
    pub samples: usize,
}

/// Points per neighbourhood for the remainder scan.
pub const REMAINDER_SAMPLES: usize = 256;

/// Empirical constant of the affine behaviour of `f` on each `S_M(j)`.
pub fn affine_remainder_check(
    cert: &Certificate,
    a: &[Complex64],
    b: &[Complex64],
) -> AffineRemainderReport {
    let m = cert.degree as f64;
    let radius = NEAR_RADIUS / m;
    let scale = m * m * max_abs(a) + m * max_abs(b);
    let mut constant: f64 = 0.0;
    let mut samples = 0;
    for (j, s) in cert.support.iter().enumerate() {
        for k in 0..REMAINDER_SAMPLES {
            let t = -radius + 2.0 * radius * k as f64 / (REMAINDER_SAMPLES - 1) as f64;
            samples += 1;
            if t == 0.0 || scale == 0.0 {
                continue;
            }
            let rem = (cert.eval(s.value() + t, 0) - a[j] - b[j] * t).norm();
            constant = constant.max(rem / (scale * t * t));
        }
    }
    AffineRemainderReport { constant, samples }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormBoundReport {
    pub d0_inv: f64,
    /// `||D1|| / M`.
    pub d1_scaled: f64,
    /// `M^2 ||(D2 - D1 D0^{-1} D1)^{-1}||`.
    pub schur_inv_scaled: f64,
    pub in_theory_regime: bool,
}

pub fn norm_bound_report(mats: &CertificateMatrices) -> Result<NormBoundReport> {
    let m = mats.degree as f64;
    let d0_inv = inverse(&mats.d0, "D0")?;
    let schur = &mats.d2 - &mats.d1 * &d0_inv * &mats.d1;
    let schur_inv = inverse(&schur, "Schur complement")?;
    Ok(NormBoundReport {
        d0_inv: inf_norm(&d0_inv),
        d1_scaled: inf_norm(&mats.d1) / m,
        schur_inv_scaled: m * m * inf_norm(&schur_inv),
        in_theory_regime: mats.in_theory_regime(),
    })
}

#[derive(Clone, Debug)]
pub struct DualCertificate {
    pub certificate: Certificate,
    /// Largest `|f|` over the scan grid, excluding the support points.
    pub sup_off_support: f64,
    /// Largest `|f|` over grid points outside every `S_M(j)`.
    pub sup_far: f64,
    /// Whether `|f(x)| < 1` at every scanned grid point other than the support.
    pub strictly_below_one: bool,
    pub grid_size: usize,
}

/// Default scan grid for dual certificates.
pub const DUAL_SCAN_GRID: usize = 1 << 18;

/// The certificate with `f(s_j) = v_j`, `f'(s_j) = 0` for unit-modulus `v`.
pub fn dual_certificate(
    support: &[TorusPoint],
    v: &[Complex64],
    m: usize,
    grid_size: usize,
) -> Result<DualCertificate> {
    if v.iter().any(|z| (z.norm() - 1.0).abs() > 1e-12) {
        return param("dual certificate values must have unit modulus");
    }
    let mats = build_matrices(support, m)?;
    let zeros = vec![Complex64::new(0.0, 0.0); v.len()];
    let certificate = solve_coefficients(&mats, v, &zeros)?;
    let values = certificate.spectral().eval_grid(grid_size);
    let radius = NEAR_RADIUS / m as f64;
    let mut sup_off_support: f64 = 0.0;
    let mut sup_far: f64 = 0.0;
    let mut strictly_below_one = true;
    for (k, val) in values.iter().enumerate() {
        let x = TorusPoint::new(k as f64 / grid_size as f64);
        let nearest = support
            .iter()
            .map(|s| s.distance(x))
            .fold(f64::INFINITY, f64::min);
        if nearest < 1e-12 {
            continue;
        }
        let r = val.norm();
        sup_off_support = sup_off_support.max(r);
        if nearest > radius {
            sup_far = sup_far.max(r);
        }
        if r >= 1.0 {
            strictly_below_one = false;
        }
    }
    Ok(DualCertificate {
        certificate,
        sup_off_support,
        sup_far,
        strictly_below_one,
        grid_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pts(v: &[f64]) -> Vec<TorusPoint> {
        v.iter().map(|&x| TorusPoint::new(x)).collect()
    }

    /// Separated support with gaps drawn in units of 1/M.
    fn random_support(j: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<TorusPoint> {
        let start: f64 = rng.random();
        let mut x = start;
        (0..j)
            .map(|_| {
                let p = TorusPoint::new(x);
                x += (2.0 + 2.0 * rng.random::<f64>()) / m as f64;
                p
            })
            .collect()
    }

    fn random_vec(j: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        (0..j)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale)
            .collect()
    }

    #[test]
    fn single_point_matrices() {
        let mats = build_matrices(&pts(&[0.3]), 128).unwrap();
        assert!((mats.d0[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(mats.d1[(0, 0)].abs() < 1e-9);
        let g2 = mats.kernel().eval(0.0, 2);
        assert!((mats.d2[(0, 0)] - g2).abs() < 1e-9 * g2.abs());
    }

    #[test]
    fn antipodal_matrices_decay() {
        let mats = build_matrices(&pts(&[0.0, 0.5]), 128).unwrap();
        assert!(mats.d0[(0, 1)].abs() < 1e-6);
        assert!(mats.d0[(1, 0)].abs() < 1e-6);
    }

    #[test]
    fn matrix_symmetries() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_support(8, 128, &mut rng);
        let mats = build_matrices(&s, 128).unwrap();
        for r in 0..8 {
            assert!((mats.d0[(r, r)] - 1.0).abs() < 1e-12);
            for k in 0..8 {
                assert!((mats.d1[(r, k)] + mats.d1[(k, r)]).abs() < 1e-12 * 128.0);
                assert!((mats.d0[(r, k)] - mats.d0[(k, r)]).abs() < 1e-12);
                assert!((mats.d2[(r, k)] - mats.d2[(k, r)]).abs() < 1e-12 * 128.0 * 128.0);
            }
        }
    }

    #[test]
    fn separation_violation_rejected() {
        assert!(build_matrices(&pts(&[0.0, 0.01]), 128).is_err());
        assert!(build_matrices(&pts(&[0.0]), 1).is_err());
    }

    #[test]
    fn single_point_solutions() {
        let mats = build_matrices(&pts(&[0.0]), 128).unwrap();
        let cert = solve_coefficients(&mats, &[c(1.0, 0.0)], &[c(0.0, 0.0)]).unwrap();
        assert!((cert.alpha[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(cert.beta[0].norm() < 1e-12);
        assert!((cert.eval(0.0, 0) - c(1.0, 0.0)).norm() < 1e-12);
        assert!(cert.eval(0.0, 1).norm() < 1e-8);

        let cert = solve_coefficients(&mats, &[c(0.0, 0.0)], &[c(1.0, 0.0)]).unwrap();
        let g2 = mats.kernel().eval(0.0, 2);
        assert!(cert.alpha[0].norm() < 1e-12);
        assert!((cert.beta[0] - c(1.0 / g2, 0.0)).norm() < 1e-12 / g2.abs());
    }

    #[test]
    fn random_block_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_support(5, 128, &mut rng);
        let a = random_vec(5, 1.0, &mut rng);
        let b = random_vec(5, 128.0, &mut rng);
        let mats = build_matrices(&s, 128).unwrap();
        let cert = solve_coefficients(&mats, &a, &b).unwrap();
        assert!(block_residual(&mats, &cert, &a, &b) <= 1e-10);
        let rep = verify_interpolation(&cert, &a, &b, 1e-8);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn zero_data_gives_zero_certificate() {
        let mats = build_matrices(&pts(&[0.1, 0.4, 0.8]), 64).unwrap();
        let z = vec![c(0.0, 0.0); 3];
        let cert = solve_coefficients(&mats, &z, &z).unwrap();
        assert!(cert.alpha.iter().chain(&cert.beta).all(|v| v.norm() == 0.0));
        assert!(verify_interpolation(&cert, &z, &z, 1e-8).pass);
    }

    #[test]
    fn eval_matches_spectral_assembly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_support(6, 64, &mut rng);
        let a = random_vec(6, 1.0, &mut rng);
        let b = random_vec(6, 64.0, &mut rng);
        let mats = build_matrices(&s, 64).unwrap();
        let cert = solve_coefficients(&mats, &a, &b).unwrap();
        let spec = cert.spectral();
        assert!(spec.degree() <= 64);
        for k in 0..200 {
            let x = k as f64 / 200.0 + 0.0013;
            for order in 0..3u32 {
                let direct = cert.eval(x, order);
                let via = spec.eval_derivative(x, order);
                let scale = 64f64.powi(order as i32);
                assert!((direct - via).norm() < 1e-9 * scale, "x={x} order={order}");
            }
        }
    }

    #[test]
    fn remainder_of_g() {
        let mats = build_matrices(&pts(&[0.0]), 128).unwrap();
        let a = [c(1.0, 0.0)];
        let b = [c(0.0, 0.0)];
        let cert = solve_coefficients(&mats, &a, &b).unwrap();
        let rep = affine_remainder_check(&cert, &a, &b);
        // |G(x) - 1| <= |G''(0)| x^2 / 2 near 0, normalized by M^2
        let bound = 0.5 * mats.kernel().eval(0.0, 2).abs() / (128.0 * 128.0);
        assert!(rep.constant <= bound * 1.001, "{} vs {bound}", rep.constant);
        assert!(rep.constant > 0.5 * bound);
    }

    #[test]
    fn remainder_constant_stable_across_scales() {
        let mut consts = Vec::new();
        for m in [128usize, 256] {
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            let s = random_support(6, m, &mut rng);
            let a = random_vec(6, 1.0, &mut rng);
            let b = random_vec(6, m as f64, &mut rng);
            let mats = build_matrices(&s, m).unwrap();
            let cert = solve_coefficients(&mats, &a, &b).unwrap();
            consts.push(affine_remainder_check(&cert, &a, &b).constant);
        }
        let ratio = consts[0] / consts[1];
        assert!((0.5..=2.0).contains(&ratio), "{consts:?}");
    }

    #[test]
    fn norm_reports() {
        let one = build_matrices(&pts(&[0.2]), 128).unwrap();
        let r = norm_bound_report(&one).unwrap();
        assert!((r.d0_inv - 1.0).abs() < 1e-12);
        assert!(r.in_theory_regime);

        let two = build_matrices(&pts(&[0.0, 0.5]), 128).unwrap();
        assert!(norm_bound_report(&two).unwrap().d0_inv <= 1.0 + 1e-5);

        let small = build_matrices(&pts(&[0.0, 0.5]), 16).unwrap();
        assert!(!norm_bound_report(&small).unwrap().in_theory_regime);
    }

    #[test]
    fn dual_certificate_single() {
        let d = dual_certificate(&pts(&[0.25]), &[c(1.0, 0.0)], 128, 1 << 14).unwrap();
        assert!(d.strictly_below_one);
        assert!(d.sup_off_support < 1.0);
        assert!((d.certificate.eval(0.25, 0) - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn dual_certificate_antipodal() {
        let d = dual_certificate(&pts(&[0.0, 0.5]), &[c(1.0, 0.0); 2], 128, 1 << 16).unwrap();
        assert!(d.sup_off_support <= 1.0 + 1e-6);
        assert!(d.sup_far < 0.999);
    }

    #[test]
    fn dual_certificate_rejects_non_unit() {
        assert!(dual_certificate(&pts(&[0.0]), &[c(0.5, 0.0)], 128, 1024).is_err());
    }
}
