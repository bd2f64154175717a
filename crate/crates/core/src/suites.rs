//! Verification sweeps. Each suite returns named checks (value against a
//! threshold) and a table of per-instance rows for CSV output.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::{
    affine_remainder_check, build_matrices, data_scale, norm_bound_report, solve_coefficients,
    verify_interpolation,
};
use crate::error::{param, Result};
use crate::error_analysis::{
    difference, far_mass, near_second_moment, neighborhoods, recover_trials, scaling_from_recoveries,
    ScalingTable,
};
use crate::instances::{random_measure, random_support, sample_amplitude, AmplitudeLaw};
use crate::kernels::{
    bernstein_check, dirichlet_kernel, fejer_kernel, g_kernel, sup_norm_poly, KernelFamily,
    SUP_GRID_FACTOR,
};
use crate::noise::{
    chi2_montecarlo, epsilon_from_gaussian, failure_probability_bound, make_observation_trial,
    rigorous_epsilon, tail_montecarlo, NoiseSpec,
};
use crate::solvers::{
    dual_sup, grid_lasso_oracle, is_approximation, solve_constrained, solve_noiseless,
    solve_tikhonov, tikhonov_objective, SolverConfig,
};
use crate::torus::{torus_distance, DiscreteMeasure, TorusPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    CertificateExactness,
    CertificateScaling,
    Noiseless,
    Approximation,
    NoiseTail,
    ErrorMoments,
    Scaling,
    Oracle,
    Kernels,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::CertificateExactness,
        Suite::CertificateScaling,
        Suite::Noiseless,
        Suite::Approximation,
        Suite::NoiseTail,
        Suite::ErrorMoments,
        Suite::Scaling,
        Suite::Oracle,
        Suite::Kernels,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::CertificateExactness => "certificate-exactness",
            Suite::CertificateScaling => "certificate-scaling",
            Suite::Noiseless => "noiseless",
            Suite::Approximation => "approximation",
            Suite::NoiseTail => "noise-tail",
            Suite::ErrorMoments => "error-moments",
            Suite::Scaling => "scaling",
            Suite::Oracle => "oracle",
            Suite::Kernels => "kernels",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Suite::ALL.iter().map(|k| k.name()).collect();
                format!("unknown suite `{s}` (one of: {})", names.join(", "))
            })
    }
}

/// A measured quantity against its threshold.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `"<="`, `">="` or `"report"` (informational, always passes).
    pub relation: &'static str,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            relation: "<=",
            pass: value <= threshold,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            relation: ">=",
            pass: value >= threshold,
        }
    }

    pub fn report(name: impl Into<String>, value: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold: f64::NAN,
            relation: "report",
            pass: value.is_finite(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        if self.relation == "report" {
            write!(f, "{status} {} = {:.6e}", self.name, self.value)
        } else {
            write!(
                f,
                "{status} {} = {:.6e} ({} {:.6e})",
                self.name, self.value, self.relation, self.threshold
            )
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteOutput {
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub table: Table,
    pub seconds: f64,
}

impl SuiteOutput {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Replaces the suite's default instance/trial count when set.
    pub trials: Option<usize>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: 2024, trials: None }
    }
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<SuiteOutput> {
    let start = Instant::now();
    let (mut checks, table, budget) = match suite {
        Suite::CertificateExactness => certificate_exactness(opts)?,
        Suite::CertificateScaling => certificate_scaling(opts)?,
        Suite::Noiseless => noiseless(opts)?,
        Suite::Approximation => approximation(opts)?,
        Suite::NoiseTail => noise_tail(opts)?,
        Suite::ErrorMoments => error_moments(opts)?,
        Suite::Scaling => scaling(opts)?,
        Suite::Oracle => oracle(opts)?,
        Suite::Kernels => kernels(opts)?,
    };
    let seconds = start.elapsed().as_secs_f64();
    if let Some(limit) = budget {
        checks.push(Check::at_most("runtime_seconds", seconds, limit * budget_scale()));
    }
    Ok(SuiteOutput { suite, checks, table, seconds })
}

/// Cores the runtime budgets are stated for.
pub const REFERENCE_CORES: usize = 4;

/// Budget multiplier when fewer than [`REFERENCE_CORES`] worker threads exist.
pub fn budget_scale() -> f64 {
    let cores = rayon::current_num_threads().clamp(1, REFERENCE_CORES);
    REFERENCE_CORES as f64 / cores as f64
}

type SuiteResult = Result<(Vec<Check>, Table, Option<f64>)>;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn e(v: f64) -> String {
    format!("{v:e}")
}

fn max_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, f64::max)
}

/// `max / min` of positive values.
fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        hi / lo
    } else if hi > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

const CERT_DEGREES: [usize; 3] = [128, 256, 512];

fn certificate_exactness(opts: &SuiteOptions) -> SuiteResult {
    let count = opts.trials.unwrap_or(100);
    let tol = 1e-8;
    let rows: Vec<Result<(usize, usize, f64, f64, f64)>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(opts.seed, i as u64);
            let m = CERT_DEGREES[i % 3];
            let j = 1 + i % 16;
            let support = random_support(j, m, 1.0, &mut rng)?;
            let a: Vec<Complex64> = (0..j).map(|_| sample_amplitude(AmplitudeLaw::ComplexGaussian, &mut rng)).collect();
            let b: Vec<Complex64> = (0..j)
                .map(|_| sample_amplitude(AmplitudeLaw::ComplexGaussian, &mut rng) * m as f64)
                .collect();
            let mats = build_matrices(&support, m)?;
            let cert = solve_coefficients(&mats, &a, &b)?;
            let rep = verify_interpolation(&cert, &a, &b, tol);
            let scale = data_scale(&a, &b, m);
            Ok((m, j, rep.value_error / scale, rep.derivative_error / scale, cert.schur_condition))
        })
        .collect();
    let mut table = Table::new(&["instance", "M", "J", "value_residual", "derivative_residual", "schur_condition"]);
    let mut worst: f64 = 0.0;
    for (i, r) in rows.into_iter().enumerate() {
        let (m, j, v, d, cond) = r?;
        worst = worst.max(v).max(d);
        table.push(vec![i.to_string(), m.to_string(), j.to_string(), e(v), e(d), e(cond)]);
    }
    let checks = vec![
        Check::at_most("max_relative_interpolation_residual", worst, tol),
        Check::at_least("instances", count as f64, 100.0f64.min(count as f64)),
    ];
    Ok((checks, table, Some(30.0)))
}

/// One normalized configuration: gaps and data in units of `1/M`.
struct NormalizedConfig {
    start: f64,
    gaps: Vec<f64>,
    a: Vec<Complex64>,
    b_scaled: Vec<Complex64>,
}

fn certificate_scaling(opts: &SuiteOptions) -> SuiteResult {
    let count = opts.trials.unwrap_or(12);
    let configs: Vec<NormalizedConfig> = (0..count)
        .map(|i| {
            let mut rng = rng_for(opts.seed, 10_000 + i as u64);
            let j = 1 + (i * 5) % 16;
            use rand::Rng;
            NormalizedConfig {
                start: rng.random(),
                gaps: (0..j).map(|_| 2.0 + 2.0 * rng.random::<f64>()).collect(),
                a: (0..j).map(|_| sample_amplitude(AmplitudeLaw::UnitPhase, &mut rng)).collect(),
                b_scaled: (0..j).map(|_| sample_amplitude(AmplitudeLaw::ComplexGaussian, &mut rng)).collect(),
            }
        })
        .collect();

    let names = ["sup_f", "affine_remainder", "d0_inv", "d1_scaled", "schur_inv_scaled"];
    let mut per_m: Vec<[f64; 5]> = Vec::new();
    let mut table = Table::new(&["M", "config", "J", "sup_f", "affine_remainder", "d0_inv", "d1_scaled", "schur_inv_scaled"]);
    for &m in &CERT_DEGREES {
        let rows: Vec<Result<[f64; 5]>> = configs
            .par_iter()
            .map(|c| {
                let mut x = c.start;
                let support: Vec<TorusPoint> = c
                    .gaps
                    .iter()
                    .map(|g| {
                        let p = TorusPoint::new(x);
                        x += g / m as f64;
                        p
                    })
                    .collect();
                let b: Vec<Complex64> = c.b_scaled.iter().map(|v| v * m as f64).collect();
                let mats = build_matrices(&support, m)?;
                let cert = solve_coefficients(&mats, &c.a, &b)?;
                let sup = sup_norm_poly(&cert.spectral(), SUP_GRID_FACTOR * m)?.upper_bound;
                let rem = affine_remainder_check(&cert, &c.a, &b).constant;
                let nb = norm_bound_report(&mats)?;
                Ok([
                    sup / data_scale(&c.a, &b, m),
                    rem,
                    nb.d0_inv,
                    nb.d1_scaled,
                    nb.schur_inv_scaled,
                ])
            })
            .collect();
        let mut worst = [0.0f64; 5];
        for (k, r) in rows.into_iter().enumerate() {
            let r = r?;
            let mut row = vec![m.to_string(), k.to_string(), configs[k].gaps.len().to_string()];
            for q in 0..5 {
                worst[q] = worst[q].max(r[q]);
                row.push(e(r[q]));
            }
            table.push(row);
        }
        per_m.push(worst);
    }
    let mut checks = Vec::new();
    for (q, name) in names.iter().enumerate() {
        let v: Vec<f64> = per_m.iter().map(|w| w[q]).collect();
        for (k, &m) in CERT_DEGREES.iter().enumerate() {
            checks.push(Check::report(format!("{name}_max_M{m}"), v[k]));
        }
        checks.push(Check::at_most(format!("{name}_spread_across_M"), spread(&v), 2.0));
    }
    Ok((checks, table, Some(120.0)))
}

/// Matches every true spike to the nearest recovered one.
fn match_recovery(mu: &DiscreteMeasure, mu0: &DiscreteMeasure) -> (f64, f64, usize) {
    let mut pos_err: f64 = 0.0;
    let mut amp_err: f64 = 0.0;
    for s in mu0.spikes() {
        let best = mu
            .spikes()
            .iter()
            .min_by(|a, b| {
                torus_distance(a.position, s.position).total_cmp(&torus_distance(b.position, s.position))
            });
        match best {
            Some(r) => {
                pos_err = pos_err.max(torus_distance(r.position, s.position));
                amp_err = amp_err.max((r.amplitude - s.amplitude).norm() / s.amplitude.norm());
            }
            None => {
                pos_err = f64::INFINITY;
                amp_err = f64::INFINITY;
            }
        }
    }
    // recovered spikes that match no true spike
    let scale = max_of(mu.amplitudes().iter().map(|a| a.norm()));
    let spurious = mu
        .spikes()
        .iter()
        .filter(|r| r.amplitude.norm() > 1e-6 * scale)
        .filter(|r| {
            mu0.spikes()
                .iter()
                .all(|s| torus_distance(r.position, s.position) > 1e-4)
        })
        .count();
    (pos_err, amp_err, spurious)
}

fn noiseless(opts: &SuiteOptions) -> SuiteResult {
    let count = opts.trials.unwrap_or(20);
    let m = 128;
    let cfg = SolverConfig::default();
    let rows: Vec<Result<(usize, f64, f64, usize, usize, bool)>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let j = 1 + i % 8;
            let mu0 = random_measure(j, m, 1.0, opts.seed.wrapping_add(i as u64), AmplitudeLaw::UnitPhase)?;
            let obs = crate::solvers::Observation::new(mu0.project(m));
            let r = solve_noiseless(&obs, &cfg)?;
            let (p, a, spurious) = match_recovery(&r.measure, &mu0);
            Ok((j, p, a, spurious, r.measure.len(), r.converged))
        })
        .collect();
    let mut table = Table::new(&["instance", "J", "recovered", "position_error", "amplitude_rel_error", "spurious", "converged"]);
    let (mut wp, mut wa, mut spur, mut unconverged): (f64, f64, usize, usize) = (0.0, 0.0, 0, 0);
    for (i, r) in rows.into_iter().enumerate() {
        let (j, p, a, s, n, conv) = r?;
        wp = wp.max(p);
        wa = wa.max(a);
        spur += s;
        unconverged += !conv as usize;
        table.push(vec![i.to_string(), j.to_string(), n.to_string(), e(p), e(a), s.to_string(), conv.to_string()]);
    }
    let checks = vec![
        Check::at_most("max_position_error", wp, 1e-4),
        Check::at_most("max_amplitude_rel_error", wa, 1e-3),
        Check::at_most("spurious_spikes", spur as f64, 0.0),
        Check::at_most("unconverged_solves", unconverged as f64, 0.0),
    ];
    Ok((checks, table, Some(300.0)))
}

/// Per-coefficient noise scale of the bounded-noise suites.
const BOUNDED_SIGMA: f64 = 0.02;
const BOUNDED_GAMMA: f64 = 0.1;

fn approximation(opts: &SuiteOptions) -> SuiteResult {
    let count = opts.trials.unwrap_or(50);
    let m = 128;
    let eps = epsilon_from_gaussian(m, BOUNDED_SIGMA, BOUNDED_GAMMA);
    let cfg = SolverConfig::default();
    let rows: Vec<Result<[f64; 8]>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let j = 1 + i % 8;
            let mu0 = random_measure(j, m, 1.0, opts.seed.wrapping_add(i as u64), AmplitudeLaw::UnitPhase)?;
            let noise = NoiseSpec::bounded(eps, opts.seed ^ 0x5eed);
            let (obs, _, eps) = make_observation_trial(&mu0, m, &noise, i as u64)?;
            let con = solve_constrained(&obs, eps, &cfg)?;
            let tik = solve_tikhonov(&obs, eps, &cfg)?;
            let rc = is_approximation(&con.measure, &mu0, m, eps);
            let rt = is_approximation(&tik.measure, &mu0, m, eps);
            let tv0 = mu0.total_variation();
            Ok([
                rc.pass() as u8 as f64,
                rt.pass() as u8 as f64,
                rc.spectral_l2 / eps,
                rt.spectral_l2 / eps,
                con.measure.total_variation() - tv0,
                tik.measure.total_variation() - tv0 - eps / 2.0,
                rt.spectral_linf / eps,
                (con.converged && tik.converged) as u8 as f64,
            ])
        })
        .collect();
    let mut table = Table::new(&[
        "instance",
        "constrained_pass",
        "tikhonov_pass",
        "constrained_l2_over_eps",
        "tikhonov_l2_over_eps",
        "constrained_tv_excess",
        "tikhonov_tv_excess_over_half_eps",
        "tikhonov_linf_over_eps",
        "converged",
    ]);
    let mut fails = 0.0;
    let mut tv_con: f64 = f64::NEG_INFINITY;
    let mut tv_tik: f64 = f64::NEG_INFINITY;
    let mut l2: f64 = 0.0;
    let mut linf: f64 = 0.0;
    let mut unconverged = 0.0;
    for (i, r) in rows.into_iter().enumerate() {
        let r = r?;
        fails += (1.0 - r[0]) + (1.0 - r[1]);
        l2 = l2.max(r[2]).max(r[3]);
        tv_con = tv_con.max(r[4]);
        tv_tik = tv_tik.max(r[5]);
        linf = linf.max(r[6]);
        unconverged += 1.0 - r[7];
        let mut row = vec![i.to_string()];
        row.extend(r.iter().map(|v| e(*v)));
        table.push(row);
    }
    let checks = vec![
        Check::at_most("approximation_failures", fails, 0.0),
        Check::at_most("max_spectral_l2_over_eps", l2, 2.0),
        Check::at_most("max_tikhonov_tv_excess_over_half_eps", tv_tik, 1e-6),
        Check::report("max_constrained_tv_excess", tv_con),
        Check::report("max_tikhonov_linf_over_eps", linf),
        Check::report("unconverged_solves", unconverged),
    ];
    Ok((checks, table, None))
}

const TAIL_POINTS: [(usize, f64); 3] = [(4, 0.3), (64, 0.05), (128, 0.1)];

fn noise_tail(opts: &SuiteOptions) -> SuiteResult {
    let trials = opts.trials.unwrap_or(10_000).max(1000);
    let mut table = Table::new(&[
        "M",
        "gamma",
        "trials",
        "exceedances",
        "frequency",
        "bound",
        "std_error",
        "epsilon",
        "rigorous_epsilon",
        "pass",
    ]);
    let mut checks = Vec::new();
    for (k, &(m, gamma)) in TAIL_POINTS.iter().enumerate() {
        let t = tail_montecarlo(m, 1.0, gamma, trials, opts.seed.wrapping_add(k as u64))?;
        table.push(vec![
            m.to_string(),
            gamma.to_string(),
            t.trials.to_string(),
            t.exceedances.to_string(),
            e(t.frequency),
            e(t.bound),
            e(t.std_error),
            e(epsilon_from_gaussian(m, 1.0, gamma)),
            e(rigorous_epsilon(m, 1.0, gamma)),
            t.pass().to_string(),
        ]);
        checks.push(Check::at_most(
            format!("tail_frequency_M{m}_gamma{gamma}"),
            t.frequency,
            t.bound + 3.0 * t.std_error,
        ));
        debug_assert_eq!(t.bound, failure_probability_bound(m, gamma));
    }
    let c = chi2_montecarlo(10, 2.0, 10 * trials, opts.seed ^ 0xc412);
    checks.push(Check::at_most("chi2_tail_dof10_x2", c.frequency, c.bound + 3.0 * c.std_error));
    Ok((checks, table, Some(60.0)))
}

fn error_moments(opts: &SuiteOptions) -> SuiteResult {
    let count = opts.trials.unwrap_or(50);
    let degrees = [128usize, 256];
    let cfg = SolverConfig::default();
    let mut table = Table::new(&["M", "instance", "solver", "epsilon", "far_over_eps", "m2_near_over_eps"]);
    let mut far_max = Vec::new();
    let mut near_max = Vec::new();
    for &m in &degrees {
        let eps = epsilon_from_gaussian(m, BOUNDED_SIGMA, BOUNDED_GAMMA);
        let rows: Vec<Result<[f64; 4]>> = (0..count)
            .into_par_iter()
            .map(|i| {
                let j = 1 + i % 8;
                let seed = opts.seed.wrapping_add(1000 * m as u64 + i as u64);
                let mu0 = random_measure(j, m, 1.0, seed, AmplitudeLaw::UnitPhase)?;
                let noise = NoiseSpec::bounded(eps, seed);
                let (obs, _, eps) = make_observation_trial(&mu0, m, &noise, i as u64)?;
                let nb = neighborhoods(&mu0.positions(), m);
                let mut out = [0.0; 4];
                let con = solve_constrained(&obs, eps, &cfg)?;
                let tik = solve_tikhonov(&obs, eps, &cfg)?;
                for (k, mu) in [&con.measure, &tik.measure].into_iter().enumerate() {
                    let nu = difference(mu, &mu0);
                    out[2 * k] = far_mass(&nu, &nb) / eps;
                    out[2 * k + 1] = (m * m) as f64 * near_second_moment(&nu, &nb) / eps;
                }
                Ok(out)
            })
            .collect();
        let (mut fm, mut nm): (f64, f64) = (0.0, 0.0);
        for (i, r) in rows.into_iter().enumerate() {
            let r = r?;
            for (k, solver) in ["constrained", "tikhonov"].iter().enumerate() {
                fm = fm.max(r[2 * k]);
                nm = nm.max(r[2 * k + 1]);
                table.push(vec![m.to_string(), i.to_string(), solver.to_string(), e(eps), e(r[2 * k]), e(r[2 * k + 1])]);
            }
        }
        far_max.push(fm);
        near_max.push(nm);
    }
    let mut checks = Vec::new();
    for (k, &m) in degrees.iter().enumerate() {
        checks.push(Check::report(format!("far_over_eps_max_M{m}"), far_max[k]));
        checks.push(Check::report(format!("m2_near_over_eps_max_M{m}"), near_max[k]));
    }
    checks.push(Check::at_most("far_over_eps_spread_across_M", spread(&far_max), 2.0));
    checks.push(Check::at_most("m2_near_over_eps_spread_across_M", spread(&near_max), 2.0));
    Ok((checks, table, Some(900.0)))
}

/// Remark-1 sweep parameters.
pub const SCALING_M: usize = 128;
pub const SCALING_RATIOS: [usize; 4] = [1, 2, 4, 8];
pub const SCALING_SIGMA: f64 = 0.02;
pub const SCALING_GAMMA: f64 = 0.1;
pub const SCALING_J: usize = 6;
pub const SLOPE_LIMIT: f64 = 2.3;

/// Both kernel families of the scaling sweep over shared recoveries.
pub fn scaling_tables(seed: u64, trials: usize) -> Result<Vec<ScalingTable>> {
    let m = SCALING_M;
    let mu0 = random_measure(SCALING_J, m, 1.0, seed, AmplitudeLaw::UnitPhase)?;
    let noise = NoiseSpec::gaussian(SCALING_SIGMA, SCALING_GAMMA, seed ^ 0x7a11);
    let recovered = recover_trials(&mu0, m, &noise, trials, &SolverConfig::default())?;
    let n_list: Vec<usize> = SCALING_RATIOS.iter().map(|r| r * m).collect();
    [KernelFamily::Fejer, KernelFamily::Bump]
        .into_iter()
        .map(|f| scaling_from_recoveries(&mu0, m, f, &n_list, &recovered))
        .collect()
}

fn scaling(opts: &SuiteOptions) -> SuiteResult {
    let trials = opts.trials.unwrap_or(20);
    let tables = scaling_tables(opts.seed, trials)?;
    let mut table = Table::new(&["family", "N", "N_over_M", "mean_error_over_eps", "max_error_over_eps", "max_ratio_to_rhs"]);
    let mut checks = Vec::new();
    let mut ratio: f64 = 0.0;
    for t in &tables {
        let fam = match t.family {
            KernelFamily::Fejer => "fejer",
            KernelFamily::Bump => "bump",
            KernelFamily::Dirichlet => "dirichlet",
            KernelFamily::G => "g",
        };
        for r in &t.rows {
            ratio = ratio.max(r.max_ratio);
            table.push(vec![
                fam.to_string(),
                r.n.to_string(),
                r.n_over_m.to_string(),
                e(r.mean_error_over_eps),
                e(r.max_error_over_eps),
                e(r.max_ratio),
            ]);
        }
        checks.push(Check::at_most(
            format!("{fam}_loglog_slope"),
            t.slope.unwrap_or(f64::NAN),
            SLOPE_LIMIT,
        ));
    }
    checks.push(Check::report("max_ratio_to_rhs", ratio));
    Ok((checks, table, Some(1200.0)))
}

fn oracle(opts: &SuiteOptions) -> SuiteResult {
    let count = opts.trials.unwrap_or(20);
    let degrees = [16usize, 24, 32];
    let cfg = SolverConfig { refine_positions: false, ..Default::default() };
    let rows: Vec<Result<(usize, usize, f64, f64, f64, bool)>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let m = degrees[i % 3];
            let j = 1 + i % 4;
            let seed = opts.seed.wrapping_add(77 * i as u64);
            let mu0 = random_measure(j, m, 1.0, seed, AmplitudeLaw::ComplexGaussian)?;
            let noise = NoiseSpec::gaussian(0.05, 0.1, seed);
            let (obs, _, _) = make_observation_trial(&mu0, m, &noise, 0)?;
            let tau = 0.05 * dual_sup(&obs.y, cfg.grid_size(m), true).value;
            let cg = solve_tikhonov(&obs, tau, &cfg)?;
            let or = grid_lasso_oracle(&obs, tau, cfg.grid_size(m))?;
            let obj_cg = tikhonov_objective(&obs, tau, &cg.measure);
            let rel = (obj_cg - or.objective).abs() / or.objective.abs().max(f64::MIN_POSITIVE);
            let y_sq = obs.y_norm().powi(2);
            Ok((m, j, rel, cg.duality_gap / y_sq, or.gap / y_sq, cg.converged && or.converged))
        })
        .collect();
    let mut table = Table::new(&["instance", "M", "J", "objective_rel_diff", "cg_gap_rel", "oracle_gap_rel", "converged"]);
    let (mut worst, mut gap, mut unconv): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (i, r) in rows.into_iter().enumerate() {
        let (m, j, rel, g, og, conv) = r?;
        worst = worst.max(rel);
        if conv {
            gap = gap.max(g);
        } else {
            unconv += 1.0;
        }
        table.push(vec![i.to_string(), m.to_string(), j.to_string(), e(rel), e(g), e(og), conv.to_string()]);
    }
    let checks = vec![
        Check::at_most("max_objective_rel_diff", worst, 1e-8),
        Check::at_most("max_converged_gap_over_y2", gap, 1e-8),
        Check::report("unconverged_runs", unconv),
    ];
    Ok((checks, table, None))
}

/// Midpoint rule on the closed form of `G`; exact for trigonometric
/// polynomials of degree below the node count.
fn g_mean_by_quadrature(m: usize, nodes: usize) -> Result<f64> {
    let g = g_kernel(m)?;
    let h = 1.0 / nodes as f64;
    let mut acc = 0.0;
    for k in 0..nodes {
        let x = (k as f64 + 0.5) * h;
        acc += g.eval_spatial(x, 0).expect("closed form");
    }
    Ok(acc * h)
}

fn kernels(_opts: &SuiteOptions) -> SuiteResult {
    let mut table = Table::new(&["kernel", "N", "quantity", "value"]);
    let mut spatial_gap: f64 = 0.0;
    let mut origin_gap: f64 = 0.0;
    let mut mean_gap: f64 = 0.0;
    let mut closed_gap: f64 = 0.0;
    for m in [128usize, 129, 256, 512] {
        let g = g_kernel(m)?;
        let n = (m / 2 + 1) as f64;
        for k in 1..2000 {
            let x = k as f64 / 2000.0 + 1.234e-5;
            let x = x.rem_euclid(1.0);
            if TorusPoint::new(x).distance(TorusPoint::new(0.0)) < 1e-3 {
                continue;
            }
            let d = (g.eval(x, 0) - g.eval_spatial(x, 0).expect("closed form")).abs();
            spatial_gap = spatial_gap.max(d);
        }
        let coeffs = g.spectral().expect("spectral");
        let sum: f64 = coeffs.coeffs().iter().map(|c| c.re).sum();
        origin_gap = origin_gap.max((sum - 1.0).abs());
        let quad = g_mean_by_quadrature(m, 4 * m + 7)?;
        let g0 = coeffs.coeff(0).re;
        mean_gap = mean_gap.max((g0 - quad).abs());
        closed_gap = closed_gap.max((g0 - (2.0 * n * n + 1.0) / (3.0 * n * n * n)).abs());
        table.push(vec!["g".into(), m.to_string(), "g_hat_0".into(), e(g0)]);
        table.push(vec!["g".into(), m.to_string(), "quadrature_mean".into(), e(quad)]);
    }
    let mut bern_fail = 0.0;
    let mut polys = Vec::new();
    for n in [4usize, 16, 64, 128, 256] {
        polys.push(("dirichlet", n, dirichlet_kernel(n)?.spectral().cloned().expect("spectral")));
        polys.push(("fejer", n, fejer_kernel(n)?.spectral().cloned().expect("spectral")));
    }
    for m in [128usize, 256] {
        polys.push(("g", m, g_kernel(m)?.spectral().cloned().expect("spectral")));
    }
    for (name, n, p) in &polys {
        let rep = bernstein_check(p)?;
        if !rep.corrected_pass {
            bern_fail += 1.0;
        }
        table.push(vec![name.to_string(), n.to_string(), "bernstein_corrected_pass".into(), rep.corrected_pass.to_string()]);
        table.push(vec![name.to_string(), n.to_string(), "bernstein_literal_pass".into(), rep.literal_pass.to_string()]);
    }
    let checks = vec![
        Check::at_most("g_spectral_vs_closed_form", spatial_gap, 1e-9),
        Check::at_most("g_coefficient_sum_minus_one", origin_gap, 1e-12),
        Check::at_most("g_hat0_vs_quadrature", mean_gap, 1e-9),
        Check::at_most("g_hat0_vs_closed_expression", closed_gap, 1e-12),
        Check::at_most("bernstein_corrected_failures", bern_fail, 0.0),
    ];
    Ok((checks, table, None))
}

/// Validates a suite name list, `all` meaning every suite.
pub fn parse_suites(spec: &str) -> Result<Vec<Suite>> {
    if spec == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    spec.split(',')
        .map(|s| s.trim().parse::<Suite>().or_else(param))
        .collect()
}
