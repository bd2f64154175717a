//! Convolution kernels: the interpolation kernel `G`, the Dirichlet and Fejér
//! families, and periodized compactly supported bumps.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::torus::{DiscreteMeasure, TorusPoint, TrigPoly};

/// Grid oversampling factor (points per unit of degree) used for sup norms.
pub const SUP_GRID_FACTOR: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    G,
    Dirichlet,
    Fejer,
    Bump,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum SpatialForm {
    /// `(sin(n pi x) / (n sin(pi x)))^4`, order 0 only.
    GClosed { n: f64 },
    /// Periodization of `k(N x)` with the raised-cosine-squared profile.
    Bump { n: f64, l: f64 },
}

/// A real, even kernel on the torus with at least one evaluation route.
#[derive(Clone, Debug)]
pub struct Kernel {
    family: KernelFamily,
    scale: usize,
    spectral: Option<TrigPoly>,
    spatial: Option<SpatialForm>,
}

impl Kernel {
    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// The resolution parameter `N` (the kernel lives at scale `1/N`).
    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn spectral(&self) -> Option<&TrigPoly> {
        self.spectral.as_ref()
    }

    pub fn degree(&self) -> Option<usize> {
        self.spectral.as_ref().map(TrigPoly::degree)
    }

    pub fn has_spatial_form(&self) -> bool {
        self.spatial.is_some()
    }

    /// The `order`-th derivative at `x`, through the spectral form when present.
    pub fn eval(&self, x: f64, order: u32) -> f64 {
        assert!(order <= 3, "kernel derivatives are provided up to order 3");
        match &self.spectral {
            Some(p) => eval_real_even(p, x, order),
            None => self
                .eval_spatial(x, order)
                .expect("kernel without spectral form must have a spatial form"),
        }
    }

    /// Closed-form evaluation; `None` when no closed form exists for this order.
    pub fn eval_spatial(&self, x: f64, order: u32) -> Option<f64> {
        match self.spatial? {
            SpatialForm::GClosed { n } => (order == 0).then(|| g_closed_form(n, x)),
            SpatialForm::Bump { n, l } => {
                let u = n * TorusPoint::new(x).offset_from(TorusPoint::new(0.0));
                Some(n.powi(order as i32) * bump_profile(l, u, order))
            }
        }
    }

    /// Sup norms of the profile derivatives `k, k', k''` for bump kernels.
    pub fn profile_sup_norms(&self) -> Option<[f64; 3]> {
        match self.spatial? {
            SpatialForm::Bump { l, .. } => {
                let pl = PI * l;
                Some([1.0, 3.0 * 3f64.sqrt() * pl / 8.0, pl * pl])
            }
            SpatialForm::GClosed { .. } => None,
        }
    }

    /// Grid size that resolves this kernel and degree-`m` data.
    pub fn resolving_grid(&self, m: usize) -> usize {
        SUP_GRID_FACTOR * self.scale.max(m).max(1)
    }
}

/// `sum_m c_m (2 pi i m)^order e^{2 pi i m x}` for real even coefficients.
fn eval_real_even(p: &TrigPoly, x: f64, order: u32) -> f64 {
    let d = p.degree() as i64;
    let step = Complex64::cis(2.0 * PI * x);
    let mut phase = step;
    let mut acc = if order == 0 { p.coeff(0).re } else { 0.0 };
    for m in 1..=d {
        let w = 2.0 * PI * m as f64;
        let c = p.coeff(m).re;
        acc += 2.0
            * c
            * match order {
                0 => phase.re,
                1 => -w * phase.im,
                2 => -w * w * phase.re,
                _ => w * w * w * phase.im,
            };
        phase *= step;
    }
    acc
}

fn g_closed_form(n: f64, x: f64) -> f64 {
    let s = (PI * x).sin();
    if s.abs() < 1e-300 {
        return 1.0;
    }
    let r = (n * PI * x).sin() / (n * s);
    r.powi(4)
}

/// Raised-cosine-squared profile `(1 + cos(pi L u))^2 / 4` on `|u| <= 1/L`.
fn bump_profile(l: f64, u: f64, order: u32) -> f64 {
    if u.abs() > 1.0 / l {
        return 0.0;
    }
    let pl = PI * l;
    let t = pl * u;
    let (s, c) = t.sin_cos();
    match order {
        0 => (1.0 + c).powi(2) / 4.0,
        1 => -0.5 * pl * (1.0 + c) * s,
        2 => -0.5 * pl * pl * (c + (2.0 * t).cos()),
        3 => 0.5 * pl.powi(3) * (s + 2.0 * (2.0 * t).sin()),
        _ => unreachable!(),
    }
}

/// Spectral coefficients of `G` for `n = floor(M/2) + 1`: the self-convolution of
/// the triangle sequence `1 - |k|/n`, scaled by `1/n^2`.
fn g_coefficients(n: usize) -> TrigPoly {
    let half = n as i64 - 1;
    let tri = |k: i64| {
        if k.abs() > half {
            0.0
        } else {
            1.0 - k.abs() as f64 / n as f64
        }
    };
    let degree = 2 * half as usize;
    let norm = 1.0 / (n * n) as f64;
    TrigPoly::from_fn(degree, |m| {
        let lo = (m - half).max(-half);
        let hi = (m + half).min(half);
        let s: f64 = (lo..=hi).map(|k| tri(k) * tri(m - k)).sum();
        Complex64::new(s * norm, 0.0)
    })
}

/// The interpolation kernel `G(x) = (sin((M/2+1) pi x) / ((M/2+1) sin(pi x)))^4`.
///
/// Odd `M` uses `floor(M/2)`, so the degree never exceeds `M`.
pub fn g_kernel(m: usize) -> Result<Kernel> {
    if m < 2 {
        return param(format!("G kernel needs M >= 2, got {m}"));
    }
    let n = m / 2 + 1;
    Ok(Kernel {
        family: KernelFamily::G,
        scale: m,
        spectral: Some(g_coefficients(n)),
        spatial: Some(SpatialForm::GClosed { n: n as f64 }),
    })
}

/// Like [`g_kernel`], but rejecting odd `M`.
pub fn g_kernel_even(m: usize) -> Result<Kernel> {
    if !m.is_multiple_of(2) {
        return param(format!("G kernel needs even M, got {m}"));
    }
    g_kernel(m)
}

/// `G^{(order)}(x)` for the kernel of degree `m`.
pub fn g_derivative_eval(m: usize, order: u32, x: f64) -> Result<f64> {
    if order > 3 {
        return param("G derivatives are provided up to order 3");
    }
    Ok(g_kernel(m)?.eval(x, order))
}

pub fn dirichlet_kernel(n: usize) -> Result<Kernel> {
    if n < 1 {
        return param("Dirichlet kernel needs N >= 1");
    }
    Ok(Kernel {
        family: KernelFamily::Dirichlet,
        scale: n,
        spectral: Some(TrigPoly::from_fn(n, |_| Complex64::new(1.0, 0.0))),
        spatial: None,
    })
}

pub fn fejer_kernel(n: usize) -> Result<Kernel> {
    if n < 1 {
        return param("Fejér kernel needs N >= 1");
    }
    let d = (n + 1) as f64;
    Ok(Kernel {
        family: KernelFamily::Fejer,
        scale: n,
        spectral: Some(TrigPoly::from_fn(n, |m| {
            Complex64::new(1.0 - m.abs() as f64 / d, 0.0)
        })),
        spatial: None,
    })
}

/// 1-periodization of `k(N x)`, `k` supported in `[-1/L, 1/L]`.
pub fn periodized_bump(n: usize, l: f64) -> Result<Kernel> {
    if !(l > 2.0) || !l.is_finite() {
        return param(format!("bump support parameter must satisfy L > 2, got {l}"));
    }
    if n < 1 {
        return param("bump kernel needs N >= 1");
    }
    Ok(Kernel {
        family: KernelFamily::Bump,
        scale: n,
        spectral: None,
        spatial: Some(SpatialForm::Bump { n: n as f64, l }),
    })
}

/// Builds a kernel of the given family at scale `n`; bumps use `L = 4`.
pub fn kernel_family(family: KernelFamily, n: usize) -> Result<Kernel> {
    match family {
        KernelFamily::G => g_kernel(n),
        KernelFamily::Dirichlet => dirichlet_kernel(n),
        KernelFamily::Fejer => fejer_kernel(n),
        KernelFamily::Bump => periodized_bump(n, DEFAULT_BUMP_L),
    }
}

pub const DEFAULT_BUMP_L: f64 = 4.0;

/// `(K * nu)(x) = sum_j c_j K(x - s_j)`.
pub fn convolve_at(kernel: &Kernel, nu: &DiscreteMeasure, x: f64) -> Complex64 {
    nu.spikes()
        .iter()
        .map(|s| s.amplitude * kernel.eval(x - s.position.value(), 0))
        .sum()
}

/// Result of a grid-based sup norm.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SupNorm {
    /// Largest modulus over the grid.
    pub value: f64,
    /// `value * correction`; a certified upper bound for polynomial inputs.
    pub upper_bound: f64,
    /// Bernstein sampling factor `1 / (1 - pi N / n)`; 1 for non-polynomial inputs.
    pub correction: f64,
    pub argmax: f64,
    pub grid_size: usize,
}

fn grid_max(values: impl Iterator<Item = f64>, n: usize) -> (f64, f64) {
    let mut best = (0.0, 0.0);
    for (k, v) in values.enumerate() {
        if v > best.0 {
            best = (v, k as f64 / n as f64);
        }
    }
    best
}

fn bernstein_correction(degree: usize, grid_size: usize) -> f64 {
    1.0 / (1.0 - PI * degree as f64 / grid_size as f64)
}

/// Sup norm of a trigonometric polynomial on a uniform grid of `grid_size` points.
pub fn sup_norm_poly(p: &TrigPoly, grid_size: usize) -> Result<SupNorm> {
    let need = SUP_GRID_FACTOR * p.degree();
    if grid_size < need.max(1) {
        return param(format!(
            "grid of {grid_size} points is too coarse for degree {} (need {need})",
            p.degree()
        ));
    }
    let vals = p.eval_grid(grid_size);
    let (value, argmax) = grid_max(vals.iter().map(|v| v.norm()), grid_size);
    let correction = bernstein_correction(p.degree(), grid_size);
    Ok(SupNorm {
        value,
        upper_bound: value * correction,
        correction,
        argmax,
        grid_size,
    })
}

/// Sup norm of a kernel derivative. Spectral kernels use the polynomial route.
pub fn sup_norm_kernel(kernel: &Kernel, order: u32, grid_size: usize) -> Result<SupNorm> {
    match kernel.spectral() {
        Some(p) => sup_norm_poly(&p.derivative(order), grid_size),
        None => {
            if grid_size < SUP_GRID_FACTOR {
                return param(format!("grid of {grid_size} points is too coarse"));
            }
            let (value, argmax) = grid_max(
                (0..grid_size).map(|k| kernel.eval(k as f64 / grid_size as f64, order).abs()),
                grid_size,
            );
            Ok(SupNorm {
                value,
                upper_bound: value,
                correction: 1.0,
                argmax,
                grid_size,
            })
        }
    }
}

/// Sup norms of `K, K', K''` on the kernel's default grid.
pub fn kernel_norms(kernel: &Kernel, grid_size: usize) -> Result<[f64; 3]> {
    Ok([
        sup_norm_kernel(kernel, 0, grid_size)?.value,
        sup_norm_kernel(kernel, 1, grid_size)?.value,
        sup_norm_kernel(kernel, 2, grid_size)?.value,
    ])
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BernsteinReport {
    pub degree: usize,
    pub sup: f64,
    pub sup_d1: f64,
    pub sup_d2: f64,
    /// `||p''|| <= N ||p'|| <= N^2 ||p||` as displayed, without `2 pi`.
    pub literal_pass: bool,
    /// The same chain with `2 pi N` in place of `N`.
    pub corrected_pass: bool,
    /// Both corrected inequalities hold with room to spare.
    pub corrected_strict: bool,
}

/// Checks Bernstein's inequality chain for `p` on a `64 N` grid.
pub fn bernstein_check(p: &TrigPoly) -> Result<BernsteinReport> {
    let n = p.degree();
    let grid = SUP_GRID_FACTOR * n.max(1);
    let s0 = sup_norm_poly(p, grid)?.value;
    let s1 = sup_norm_poly(&p.derivative(1), grid)?.value;
    let s2 = sup_norm_poly(&p.derivative(2), grid)?.value;
    let le = |a: f64, b: f64| a <= b * (1.0 + 1e-9) + 1e-12;
    let lt = |a: f64, b: f64| a < b * (1.0 - 1e-9);
    let nf = n as f64;
    let w = 2.0 * PI * nf;
    Ok(BernsteinReport {
        degree: n,
        sup: s0,
        sup_d1: s1,
        sup_d2: s2,
        literal_pass: le(s2, nf * s1) && le(s1, nf * s0),
        corrected_pass: le(s2, w * s1) && le(s1, w * s0),
        corrected_strict: lt(s2, w * s1) && lt(s1, w * s0),
    })
}
