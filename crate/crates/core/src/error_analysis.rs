//! Error functionals of a recovered measure: mass away from the true support,
//! second moments near it, and kernel-smoothed sup-norm errors.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::NEAR_RADIUS;
use crate::error::{param, Result};
use crate::kernels::{kernel_family, kernel_norms, sup_norm_poly, Kernel, KernelFamily};
use crate::noise::{make_observation_trial, NoiseSpec};
use crate::solvers::{solve_constrained, SolverConfig};
use crate::torus::{DiscreteMeasure, Spike, TorusPoint, TrigPoly};

/// Closed intervals `S_M(j)` of radius `0.16 / M` around the support points.
#[derive(Clone, Debug, Serialize)]
pub struct NeighborhoodSystem {
    pub centers: Vec<TorusPoint>,
    pub radius: f64,
    pub m: usize,
}

impl NeighborhoodSystem {
    pub fn new(centers: &[TorusPoint], m: usize) -> Self {
        NeighborhoodSystem {
            centers: centers.to_vec(),
            radius: NEAR_RADIUS / m as f64,
            m,
        }
    }

    /// Index of the neighbourhood containing `x`, boundary included.
    pub fn classify(&self, x: TorusPoint) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (j, c) in self.centers.iter().enumerate() {
            let d = c.distance(x);
            if d <= self.radius && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        best.map(|(j, _)| j)
    }

    /// True when no two neighbourhoods intersect.
    pub fn disjoint(&self) -> bool {
        let n = self.centers.len();
        (0..n).all(|i| (i + 1..n).all(|k| self.centers[i].distance(self.centers[k]) > 2.0 * self.radius))
    }
}

pub fn neighborhoods(support: &[TorusPoint], m: usize) -> NeighborhoodSystem {
    NeighborhoodSystem::new(support, m)
}

/// `mu - mu_0` as a raw spike list; coincident spikes are kept apart so the
/// dipole structure of small position errors survives.
pub fn difference(mu: &DiscreteMeasure, mu0: &DiscreteMeasure) -> DiscreteMeasure {
    let mut spikes: Vec<Spike> = mu.spikes().to_vec();
    spikes.extend(mu0.spikes().iter().map(|s| Spike {
        position: s.position,
        amplitude: -s.amplitude,
    }));
    DiscreteMeasure::new(spikes)
}

/// Mass of `|nu|` outside every `S_M(j)`.
pub fn far_mass(nu: &DiscreteMeasure, nbhd: &NeighborhoodSystem) -> f64 {
    nu.spikes()
        .iter()
        .filter(|s| nbhd.classify(s.position).is_none())
        .map(|s| s.amplitude.norm())
        .sum()
}

/// Mass of `|nu|` inside the union of the `S_M(j)`.
pub fn near_mass(nu: &DiscreteMeasure, nbhd: &NeighborhoodSystem) -> f64 {
    nu.spikes()
        .iter()
        .filter(|s| nbhd.classify(s.position).is_some())
        .map(|s| s.amplitude.norm())
        .sum()
}

/// `sum_j int_{S_M(j)} |x - s_j|^2 d|nu|(x)`.
pub fn near_second_moment(nu: &DiscreteMeasure, nbhd: &NeighborhoodSystem) -> f64 {
    nu.spikes()
        .iter()
        .filter_map(|s| {
            nbhd.classify(s.position)
                .map(|j| s.amplitude.norm() * nbhd.centers[j].distance(s.position).powi(2))
        })
        .sum()
}

/// Default grid for smoothed errors: `64 max(N, M)` points.
pub fn smoothing_grid(kernel: &Kernel, m: usize) -> usize {
    kernel.resolving_grid(m)
}

/// `K * nu` as a polynomial, for kernels with a spectral form.
fn smoothed_poly(kernel: &Kernel, nu: &DiscreteMeasure) -> Option<TrigPoly> {
    let k = kernel.spectral()?;
    let nu_hat = nu.project(k.degree());
    Some(TrigPoly::from_fn(k.degree(), |m| k.coeff(m) * nu_hat.coeff(m)))
}

/// `||K * (mu - mu_0)||_{L^inf}` on `grid_size` points. Spectral kernels return
/// the Bernstein-corrected bound, which dominates the true sup.
pub fn smoothed_error(
    kernel: &Kernel,
    mu: &DiscreteMeasure,
    mu0: &DiscreteMeasure,
    grid_size: usize,
) -> Result<f64> {
    let nu = difference(mu, mu0);
    smoothed_sup(kernel, &nu, grid_size).map(|(v, _)| v)
}

/// Sup of `|K * nu|` and a grid point where it is attained.
fn smoothed_sup(kernel: &Kernel, nu: &DiscreteMeasure, grid_size: usize) -> Result<(f64, f64)> {
    if let Some(p) = smoothed_poly(kernel, nu) {
        let s = sup_norm_poly(&p, grid_size)?;
        return Ok((s.upper_bound, s.argmax));
    }
    if grid_size < 64 {
        return param(format!("grid of {grid_size} points is too coarse"));
    }
    let mut vals = vec![Complex64::new(0.0, 0.0); grid_size];
    for s in nu.spikes() {
        for (k, v) in vals.iter_mut().enumerate() {
            let x = k as f64 / grid_size as f64 - s.position.value();
            *v += s.amplitude * kernel.eval(x, 0);
        }
    }
    let mut best = (0.0, 0.0);
    for (k, v) in vals.iter().enumerate() {
        if v.norm() > best.0 {
            best = (v.norm(), k as f64 / grid_size as f64);
        }
    }
    Ok(best)
}

/// `C eps (||K|| + ||K'|| / M + ||K''|| / M^2)`.
pub fn smoothing_error_bound(kernel: &Kernel, m: usize, eps: f64, c: f64) -> Result<f64> {
    let [k0, k1, k2] = kernel_norms(kernel, kernel.resolving_grid(m))?;
    Ok(rhs_from_norms([k0, k1, k2], m, eps, c))
}

fn rhs_from_norms(norms: [f64; 3], m: usize, eps: f64, c: f64) -> f64 {
    let mf = m as f64;
    c * eps * (norms[0] + norms[1] / mf + norms[2] / (mf * mf))
}

/// Terms of the first-order Taylor bound of `|K * nu(x0)|` at the grid argmax
/// `x0`: the affine part on the neighbourhoods, `||K''||` times the near second
/// moment and `||K||` times the far mass.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Decomposition {
    pub x0: f64,
    pub value: f64,
    pub affine: f64,
    pub second_moment_term: f64,
    pub far_term: f64,
    pub sum: f64,
}

pub fn proof_decomposition(
    kernel: &Kernel,
    nu: &DiscreteMeasure,
    nbhd: &NeighborhoodSystem,
) -> Result<Decomposition> {
    let grid = smoothing_grid(kernel, nbhd.m);
    let norms = kernel_norms(kernel, grid)?;
    let (_, x0) = smoothed_sup(kernel, nu, grid)?;
    let value = crate::kernels::convolve_at(kernel, nu, x0).norm();
    let mut affine = Complex64::new(0.0, 0.0);
    for s in nu.spikes() {
        if let Some(j) = nbhd.classify(s.position) {
            let c = nbhd.centers[j];
            let t = s.position.offset_from(c);
            let u = x0 - c.value();
            affine += s.amplitude * (kernel.eval(u, 0) - kernel.eval(u, 1) * t);
        }
    }
    let affine = affine.norm();
    let second_moment_term = norms[2] * near_second_moment(nu, nbhd);
    let far_term = norms[0] * far_mass(nu, nbhd);
    Ok(Decomposition {
        x0,
        value,
        affine,
        second_moment_term,
        far_term,
        sum: affine + second_moment_term + far_term,
    })
}

/// All error functionals of one recovered measure against one kernel.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorReport {
    pub m: usize,
    pub n: usize,
    pub trial: u64,
    pub epsilon: f64,
    pub far_mass: f64,
    pub near_second_moment: f64,
    pub smoothed_sup: f64,
    /// Right-hand side of the smoothed bound with unit constant.
    pub rhs: f64,
    /// `smoothed_sup / rhs`, the empirical constant.
    pub ratio: f64,
}

impl ErrorReport {
    pub const CSV_HEADER: [&'static str; 9] = [
        "M",
        "N",
        "trial",
        "epsilon",
        "far_mass",
        "near_second_moment",
        "smoothed_sup",
        "rhs",
        "ratio",
    ];

    pub fn csv_fields(&self) -> [String; 9] {
        [
            self.m.to_string(),
            self.n.to_string(),
            self.trial.to_string(),
            format!("{:e}", self.epsilon),
            format!("{:e}", self.far_mass),
            format!("{:e}", self.near_second_moment),
            format!("{:e}", self.smoothed_sup),
            format!("{:e}", self.rhs),
            format!("{:e}", self.ratio),
        ]
    }
}

pub fn error_report(
    kernel: &Kernel,
    mu: &DiscreteMeasure,
    mu0: &DiscreteMeasure,
    m: usize,
    eps: f64,
    trial: u64,
) -> Result<ErrorReport> {
    let nbhd = neighborhoods(&mu0.positions(), m);
    let nu = difference(mu, mu0);
    let grid = smoothing_grid(kernel, m);
    let (smoothed, _) = smoothed_sup(kernel, &nu, grid)?;
    let rhs = rhs_from_norms(kernel_norms(kernel, grid)?, m, eps, 1.0);
    Ok(ErrorReport {
        m,
        n: kernel.scale(),
        trial,
        epsilon: eps,
        far_mass: far_mass(&nu, &nbhd),
        near_second_moment: near_second_moment(&nu, &nbhd),
        smoothed_sup: smoothed,
        rhs,
        ratio: if rhs > 0.0 { smoothed / rhs } else { 0.0 },
    })
}

/// Per-`N` summary of a scaling sweep.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub n_over_m: f64,
    pub mean_error_over_eps: f64,
    pub max_error_over_eps: f64,
    pub max_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingTable {
    pub family: KernelFamily,
    pub m: usize,
    pub rows: Vec<ScalingRow>,
    pub reports: Vec<ErrorReport>,
    /// Least-squares slope of `log max_error_over_eps` against `log(N/M)`;
    /// `None` when the errors are at solver-tolerance level or `eps = 0`.
    pub slope: Option<f64>,
}

/// Least-squares slope of `ys` against `xs`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Recovered measures of a noisy sweep, one per trial.
pub fn recover_trials(
    mu0: &DiscreteMeasure,
    m: usize,
    noise: &NoiseSpec,
    trials: usize,
    cfg: &SolverConfig,
) -> Result<Vec<(DiscreteMeasure, f64)>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let (obs, _, eps) = make_observation_trial(mu0, m, noise, t)?;
            let r = solve_constrained(&obs, eps.max(f64::MIN_POSITIVE), cfg)?;
            Ok((r.measure, eps))
        })
        .collect()
}

/// Smoothed errors at scales `1/N` for `N` in `n_list`, over `trials` noisy
/// recoveries of `mu0` with `delta = eps`.
#[allow(clippy::too_many_arguments)]
pub fn scaling_experiment(
    mu0: &DiscreteMeasure,
    m: usize,
    noise: &NoiseSpec,
    family: KernelFamily,
    n_list: &[usize],
    trials: usize,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<ScalingTable> {
    if trials == 0 || n_list.is_empty() {
        return param("scaling_experiment needs trials and at least one N");
    }
    let noise = NoiseSpec { seed, ..noise.clone() };
    let recovered = recover_trials(mu0, m, &noise, trials, cfg)?;
    scaling_from_recoveries(mu0, m, family, n_list, &recovered)
}

/// As [`scaling_experiment`] from precomputed `(mu, eps)` pairs.
pub fn scaling_from_recoveries(
    mu0: &DiscreteMeasure,
    m: usize,
    family: KernelFamily,
    n_list: &[usize],
    recovered: &[(DiscreteMeasure, f64)],
) -> Result<ScalingTable> {
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &n in n_list {
        let kernel = kernel_family(family, n)?;
        let batch: Vec<ErrorReport> = recovered
            .par_iter()
            .enumerate()
            .map(|(t, (mu, eps))| error_report(&kernel, mu, mu0, m, *eps, t as u64))
            .collect::<Result<_>>()?;
        let per_eps: Vec<f64> = batch
            .iter()
            .map(|r| if r.epsilon > 0.0 { r.smoothed_sup / r.epsilon } else { 0.0 })
            .collect();
        rows.push(ScalingRow {
            n,
            n_over_m: n as f64 / m as f64,
            mean_error_over_eps: per_eps.iter().sum::<f64>() / per_eps.len() as f64,
            max_error_over_eps: per_eps.iter().cloned().fold(0.0, f64::max),
            max_ratio: batch.iter().map(|r| r.ratio).fold(0.0, f64::max),
        });
        reports.extend(batch);
    }
    let noiseless = recovered.iter().all(|(_, e)| *e == 0.0);
    let slope = if noiseless {
        None
    } else {
        let xs: Vec<f64> = rows.iter().map(|r| r.n_over_m).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.max_error_over_eps).collect();
        loglog_slope(&xs, &ys)
    };
    Ok(ScalingTable { family, m, rows, reports, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{fejer_kernel, periodized_bump};

    fn two_point() -> NeighborhoodSystem {
        neighborhoods(&[TorusPoint::new(0.0), TorusPoint::new(0.5)], 128)
    }

    #[test]
    fn classify_examples() {
        let nb = two_point();
        assert_eq!(nb.radius, 0.16 / 128.0);
        assert_eq!(nb.classify(TorusPoint::new(0.001)), Some(0));
        assert_eq!(nb.classify(TorusPoint::new(0.999)), Some(0));
        assert_eq!(nb.classify(TorusPoint::new(0.25)), None);
        assert_eq!(nb.classify(TorusPoint::new(0.5 + 0.16 / 128.0)), Some(1));
        assert!(nb.disjoint());
    }

    #[test]
    fn functional_examples() {
        let nb = two_point();
        let c = Complex64::new(0.0, -3.0);
        let far = DiscreteMeasure::from_parts(&[0.25], &[c]);
        assert_eq!(far_mass(&far, &nb), 3.0);
        assert_eq!(near_second_moment(&far, &nb), 0.0);
        let t = 0.001;
        let near = DiscreteMeasure::from_parts(&[0.5 - t], &[c]);
        assert_eq!(far_mass(&near, &nb), 0.0);
        assert!((near_second_moment(&near, &nb) - 3.0 * t * t).abs() < 1e-15);
        let on = DiscreteMeasure::from_parts(&[0.0, 0.5], &[c, c]);
        assert_eq!(near_second_moment(&on, &nb), 0.0);
    }

    #[test]
    fn smoothed_error_examples() {
        let mu0 = DiscreteMeasure::dirac(0.0);
        let k = fejer_kernel(256).unwrap();
        let grid = smoothing_grid(&k, 128);
        assert_eq!(smoothed_error(&k, &mu0, &mu0, grid).unwrap(), 0.0);
        let t = 1e-4;
        let mu = DiscreteMeasure::dirac(t);
        let lip = crate::kernels::sup_norm_kernel(&k, 1, grid).unwrap().upper_bound;
        let e = smoothed_error(&k, &mu, &mu0, grid).unwrap();
        assert!(e > 0.0 && e <= lip * t);
        let b = periodized_bump(256, 4.0).unwrap();
        let e = smoothed_error(&b, &mu, &mu0, smoothing_grid(&b, 128)).unwrap();
        let lip = b.profile_sup_norms().unwrap()[1] * 256.0;
        assert!(e > 0.0 && e <= lip * t * (1.0 + 1e-12));
    }

    #[test]
    fn rhs_examples() {
        let k = fejer_kernel(512).unwrap();
        assert_eq!(smoothing_error_bound(&k, 128, 0.0, 1.0).unwrap(), 0.0);
        let rhs = smoothing_error_bound(&k, 128, 0.1, 1.0).unwrap();
        let r = 512.0 / 128.0;
        let sup = 513.0;
        assert!(rhs <= sup * (1.0 + 2.0 * std::f64::consts::PI * r + (2.0 * std::f64::consts::PI * r).powi(2)) * 0.1);
        assert!(rhs >= sup * 0.1);
    }

    #[test]
    fn decomposition_bounds_value() {
        let nb = two_point();
        let k = fejer_kernel(256).unwrap();
        let zero = proof_decomposition(&k, &DiscreteMeasure::zero(), &nb).unwrap();
        assert_eq!(zero.sum, 0.0);
        let far = DiscreteMeasure::from_parts(&[0.25], &[Complex64::new(1.0, 0.0)]);
        let d = proof_decomposition(&k, &far, &nb).unwrap();
        assert!(d.far_term >= d.value * (1.0 - 1e-12) && d.affine == 0.0);
        let mixed = DiscreteMeasure::from_parts(
            &[0.0005, 0.0, 0.3, 0.5],
            &[Complex64::new(1.0, 0.1), Complex64::new(-1.0, 0.0), Complex64::new(0.01, 0.0), Complex64::new(0.0, 0.02)],
        );
        let d = proof_decomposition(&k, &mixed, &nb).unwrap();
        assert!(d.sum >= d.value * (1.0 - 1e-12));
    }

    #[test]
    fn slope_fit() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.7)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() - 1.7).abs() < 1e-12);
        assert!(loglog_slope(&xs, &[0.0, 1.0, 1.0, 1.0]).is_none());
    }
}
