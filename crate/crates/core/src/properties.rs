//! Statistical and algebraic checks of the estimator, run as one suite.
//!
//! Each check is also exposed on its own so callers can run it with their
//! own parameters. Moment checks compare a Monte Carlo mean against its
//! target with a 3-standard-error band.

use std::io::Write;

use num_complex::Complex64;
use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimator::{
    psi_weight, upsilon, CoefficientPlan, IndexSets, PhaseConvention,
};
use crate::fourier::{corner_tail_bound, ThetaOracle};
use crate::obsmodel::{index_context, stream_rng, NoiseFamily, NoiseKeying, NoiseModel, SinogramDesign};
use crate::phantoms::Phantom;
use crate::riskharness::{Experiment, ExperimentConfig, SigmaMode};
use crate::selector::{penalty, select};
use crate::stats::{median, ComplexMeanSe, MeanSe};
use crate::{Index, Result};

/// Width of the Monte Carlo tolerance band, in standard errors.
pub const SE_BAND: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// Worst observed value of the checked quantity.
    pub statistic: f64,
    /// Limit the statistic is compared against.
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, statistic: f64, threshold: f64, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), statistic, threshold, passed, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Flat CSV: `check, statistic, threshold, passed, detail`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["check", "statistic", "threshold", "passed", "detail"])?;
        for c in &self.checks {
            out.write_record([
                c.name.clone(),
                format!("{:?}", c.statistic),
                format!("{:?}", c.threshold),
                c.passed.to_string(),
                c.detail.clone(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Colinear planar families on the axes and diagonals with `|j| <= radius`.
pub fn colinear_families(radius: f64) -> Vec<Vec<Index>> {
    let mut out = Vec::new();
    for dir in [[1i64, 0], [0, 1], [1, 1], [1, -1]] {
        let step = ((dir[0] * dir[0] + dir[1] * dir[1]) as f64).sqrt();
        let cmax = (radius / step + 1e-12).floor() as i64;
        let mut fam: Vec<Index> = (-cmax..=cmax).filter(|&c| c != 0).map(|c| vec![c * dir[0], c * dir[1]]).collect();
        if dir == [1, 0] {
            // zero frequency shares the first axis
            fam.push(vec![0, 0]);
        }
        out.push(fam);
    }
    out
}

/// Cell-weight orthogonality within colinear families: off-diagonal sums
/// against `1e-10 q Δ²`, diagonal sums against `q |Υ|²` at `1e-12` relative.
pub fn orthogonality_check(families: &[Vec<Index>], x_star: f64, q: usize, convention: PhaseConvention) -> Result<CheckResult> {
    let mut worst_off: f64 = 0.0;
    let mut worst_diag: f64 = 0.0;
    let mut pairs = 0usize;
    for fam in families {
        let weights: Vec<(f64, Complex64, Vec<Complex64>)> = fam
            .iter()
            .map(|j| {
                let ctx = index_context(j, x_star);
                let w = (1..=q).map(|l| psi_weight(&ctx, q, l, convention)).collect::<Result<Vec<_>>>()?;
                Ok((ctx.spacing(q), upsilon(&ctx, q, convention), w))
            })
            .collect::<Result<_>>()?;
        for (a, (delta, ups, wa)) in weights.iter().enumerate() {
            for (b, (_, _, wb)) in weights.iter().enumerate() {
                let s: Complex64 = wa.iter().zip(wb).map(|(x, y)| x * y.conj()).sum();
                pairs += 1;
                if a == b {
                    let target = q as f64 * ups.norm_sqr();
                    worst_diag = worst_diag.max((s.re - target).abs().max(s.im.abs()) / target);
                } else {
                    worst_off = worst_off.max(s.norm() / (q as f64 * delta * delta));
                }
            }
        }
    }
    let passed = worst_off <= 1e-10 && worst_diag <= 1e-12;
    Ok(CheckResult::new(
        "orthogonality",
        worst_off,
        1e-10,
        passed,
        format!("{pairs} pairs at q = {q}; worst diagonal relative error {worst_diag:.3e} (limit 1e-12)"),
    ))
}

/// Draws `η` for `indices` over `replications` noise tables.
fn eta_samples(
    design: &SinogramDesign,
    plan: &CoefficientPlan,
    noise: &NoiseModel,
    keying: NoiseKeying,
    replications: usize,
    seed: u64,
) -> Vec<Vec<Complex64>> {
    (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r);
            plan.eta(&design.draw_noise(noise, keying, &mut rng))
        })
        .collect()
}

/// Default covariance panel: diagonal, colinear and cross-direction pairs.
pub fn covariance_panel() -> (Vec<Index>, Vec<(usize, usize)>) {
    let idx = vec![vec![1, 0], vec![2, 0], vec![-1, 0], vec![1, 1], vec![1, 2], vec![0, 3]];
    let pairs = vec![(0, 0), (3, 3), (4, 4), (0, 1), (0, 2), (1, 2), (0, 3), (0, 4), (1, 3), (3, 4), (2, 5), (0, 5)];
    (idx, pairs)
}

/// Empirical `E η_j conj(η_k)` against `σ ϖ_j 1{j = k}`.
pub fn eta_covariance_check(
    indices: &[Index],
    pairs: &[(usize, usize)],
    q: usize,
    noise: &NoiseModel,
    keying: NoiseKeying,
    convention: PhaseConvention,
    replications: usize,
    seed: u64,
) -> Result<CheckResult> {
    let phantom = Phantom::zero(1.0, indices[0].len())?;
    let design = SinogramDesign::new(&phantom, indices, q)?;
    let plan = CoefficientPlan::new(&design, indices, convention)?;
    let samples = eta_samples(&design, &plan, noise, keying, replications, seed);
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for &(a, b) in pairs {
        let prods: Vec<Complex64> = samples.iter().map(|e| e[a] * e[b].conj()).collect();
        let ms = ComplexMeanSe::from_samples(&prods);
        let target = if a == b { noise.sigma * plan.table().varpi()[a] } else { 0.0 };
        let z = (ms.mean - target).norm() / ms.se.max(1e-300);
        worst = worst.max(z);
        if z > SE_BAND {
            failures.push(format!("{:?}x{:?}", indices[a], indices[b]));
        }
    }
    Ok(CheckResult::new(
        "eta_covariance",
        worst,
        SE_BAND,
        failures.is_empty(),
        format!(
            "{} pairs, {replications} replications, {} noise; outside band: [{}]",
            pairs.len(),
            noise.kind.name(),
            failures.join(" ")
        ),
    ))
}

fn random_unit_complex<R: rand::Rng>(n: usize, rng: &mut R) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Unit real vector with a random support of size `1..=max_support`.
fn random_sparse_unit<R: rand::Rng>(n: usize, max_support: usize, rng: &mut R) -> Vec<f64> {
    let k = rng.random_range(1..=max_support.min(n));
    let mut positions: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        positions.swap(i, j);
    }
    let mut x = vec![0.0; n];
    for &p in &positions[..k] {
        x[p] = StandardNormal.sample(rng);
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter().map(|v| v / norm).collect()
}

/// Parameters shared by the linear and quadratic form checks.
#[derive(Debug, Clone, Copy)]
pub struct FormCheck {
    pub q: usize,
    pub m: usize,
    pub dimension: usize,
    pub x_star: f64,
    pub vectors: usize,
    pub replications: usize,
    pub seed: u64,
    pub keying: NoiseKeying,
    pub convention: PhaseConvention,
}

fn form_setup(fc: &FormCheck) -> Result<(SinogramDesign, CoefficientPlan)> {
    let sets = IndexSets::new(fc.dimension, fc.m)?;
    let phantom = Phantom::zero(fc.x_star, fc.dimension)?;
    let design = SinogramDesign::new(&phantom, &sets.s_n, fc.q)?;
    let plan = CoefficientPlan::new(&design, &sets.s_n, fc.convention)?;
    Ok((design, plan))
}

/// `E |Σ z_j η_j|² <= 16 σ x_star` for random unit complex `z` on the truncation set.
pub fn linear_form_check(fc: &FormCheck, noise: &NoiseModel) -> Result<CheckResult> {
    let (design, plan) = form_setup(fc)?;
    let n = plan.table().len();
    let mut rng = stream_rng(fc.seed ^ 0x5eed, u64::MAX);
    let zs: Vec<Vec<Complex64>> = (0..fc.vectors).map(|_| random_unit_complex(n, &mut rng)).collect();
    let samples = eta_samples(&design, &plan, noise, fc.keying, fc.replications, fc.seed);
    let bound = 16.0 * noise.sigma * fc.x_star;
    let mut worst = f64::NEG_INFINITY;
    let mut passed = true;
    for z in &zs {
        let vals: Vec<f64> = samples
            .iter()
            .map(|eta| z.iter().zip(eta).map(|(a, b)| a * b).sum::<Complex64>().norm_sqr())
            .collect();
        let ms = MeanSe::from_samples(&vals);
        passed &= ms.mean <= bound + SE_BAND * ms.se;
        worst = worst.max(ms.mean);
    }
    Ok(CheckResult::new(
        "linear_form_bound",
        worst,
        bound,
        passed,
        format!("{} vectors, {} replications, {} noise", fc.vectors, fc.replications, noise.kind.name()),
    ))
}

/// `E U(x)² <= 5 · 2⁹ x_star² E ξ⁴` with `U(x) = Σ x_j (|η_j|² - σ ϖ_j)`
/// for random unit real `x` supported on at most `q` indices.
pub fn quadratic_form_check(fc: &FormCheck, noise: &NoiseModel) -> Result<CheckResult> {
    let (design, plan) = form_setup(fc)?;
    let n = plan.table().len();
    let varpi = plan.table().varpi().to_vec();
    let mut rng = stream_rng(fc.seed ^ 0x0f0f, u64::MAX);
    let xs: Vec<Vec<f64>> = (0..fc.vectors).map(|_| random_sparse_unit(n, fc.q, &mut rng)).collect();
    let samples = eta_samples(&design, &plan, noise, fc.keying, fc.replications, fc.seed);
    let c_star = 5.0 * fc.x_star * fc.x_star * 512.0;
    let bound = c_star * noise.fourth_moment();
    let mut worst = f64::NEG_INFINITY;
    let mut passed = true;
    for x in &xs {
        let vals: Vec<f64> = samples
            .iter()
            .map(|eta| {
                let u: f64 = x
                    .iter()
                    .zip(eta)
                    .zip(&varpi)
                    .filter(|((xj, _), _)| **xj != 0.0)
                    .map(|((xj, e), w)| xj * (e.norm_sqr() - noise.sigma * w))
                    .sum();
                u * u
            })
            .collect();
        let ms = MeanSe::from_samples(&vals);
        passed &= ms.mean <= bound + SE_BAND * ms.se;
        worst = worst.max(ms.mean);
    }
    Ok(CheckResult::new(
        "quadratic_form_bound",
        worst,
        bound,
        passed,
        format!("{} vectors, {} replications, {} noise", fc.vectors, fc.replications, noise.kind.name()),
    ))
}

fn random_direction<R: rand::Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// `|R(ν, s1) - R(ν, s2)| <= ř x_star^(d-1) |s1 - s2| + 1e-9` on random triples.
pub fn radon_lipschitz_check(phantom: &Phantom, triples: usize, seed: u64) -> Result<CheckResult> {
    let lip = phantom.regularity().lipschitz;
    let x = phantom.x_star();
    let d = phantom.dimension();
    let scale = lip * x.powi(d as i32 - 1);
    let mut rng = stream_rng(seed, 0);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..triples {
        let nu = random_direction(d, &mut rng);
        let s1 = rng.random_range(-1.2 * x..1.2 * x);
        // half the pairs are close, where the ratio is near the local slope
        let s2 = if rng.random_bool(0.5) { s1 + rng.random_range(-1e-3..1e-3) } else { rng.random_range(-1.2 * x..1.2 * x) };
        let diff = (phantom.exact_radon(&nu, s1)? - phantom.exact_radon(&nu, s2)?).abs();
        worst = worst.max(diff - scale * (s1 - s2).abs());
    }
    Ok(CheckResult::new(
        "radon_lipschitz",
        worst,
        1e-9,
        worst <= 1e-9,
        format!("{triples} random triples, Lipschitz bound {lip:.6}"),
    ))
}

/// Energy of coefficients with every `|j_l| > floor(sqrt(m))` against the
/// mixed-derivative bound, for each `m`.
pub fn fourier_tail_check(phantom: &Phantom, radii: &[usize], oracle: &ThetaOracle) -> Result<CheckResult> {
    let tau = phantom.regularity().mixed_deriv_norm;
    let d = phantom.dimension();
    let mut worst = f64::NEG_INFINITY;
    let mut detail = Vec::new();
    for &m in radii {
        let lo = crate::estimator::high_band_start(m);
        let mut energies: Vec<f64> = oracle
            .iter()
            .filter(|(j, _)| j.iter().all(|v| v.abs() >= lo))
            .map(|(_, t)| t.norm_sqr())
            .collect();
        energies.sort_by(|a, b| a.total_cmp(b));
        let energy = crate::stats::pairwise_sum(&energies);
        let bound = corner_tail_bound(phantom.x_star(), d, m, tau);
        worst = worst.max(energy / bound);
        detail.push(format!("m={m}: {energy:.3e} <= {bound:.3e}"));
    }
    Ok(CheckResult::new(
        "fourier_tail",
        worst,
        1.0,
        worst <= 1.0,
        format!("ratio energy/bound; cutoff {}; {}", oracle.cutoff(), detail.join("; ")),
    ))
}

/// Known-variance penalty against the Monte Carlo risk of every family member.
pub fn penalty_vs_risk_check(experiment: &Experiment, noise: &NoiseModel, replications: usize, seed: u64) -> Result<CheckResult> {
    let reps = experiment.run(noise, replications, seed)?;
    let fam = experiment.family();
    let est = experiment.plan().noiseless();
    let mut worst = f64::NEG_INFINITY;
    let mut passed = true;
    for (i, w) in fam.weights.iter().enumerate() {
        let errs: Vec<f64> = reps.iter().map(|r| r.errors[i]).collect();
        let ms = MeanSe::from_samples(&errs);
        let p = penalty(w, &est, noise.sigma);
        passed &= p <= ms.mean + SE_BAND * ms.se;
        worst = worst.max(p - ms.mean);
    }
    Ok(CheckResult::new(
        "penalty_vs_risk",
        worst,
        0.0,
        passed,
        format!("{} weights, {replications} replications, {} noise; statistic is max(P - mean risk)", fam.len(), noise.kind.name()),
    ))
}

/// Median `|σ̂ - σ|` for each truncation radius at `q = q_ratio m^d`.
pub fn sigma_error_medians(
    phantom: &Phantom,
    radii: &[usize],
    q_ratio: usize,
    noise: &NoiseModel,
    replications: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let d = phantom.dimension();
    radii
        .iter()
        .map(|&m| {
            let sets = IndexSets::new(d, m)?;
            let q = q_ratio * m.pow(d as u32);
            crate::estimator::check_sinc_range(&sets.t_n, phantom.x_star(), q)?;
            let design = SinogramDesign::new(phantom, &sets.t_n, q)?;
            let plan = CoefficientPlan::new(&design, &sets.t_n, PhaseConvention::Conjugate)?;
            let errs: Vec<f64> = (0..replications as u64)
                .into_par_iter()
                .map(|r| {
                    let mut rng = stream_rng(seed, r);
                    let est = plan.estimate(&design.draw_noise(noise, NoiseKeying::PerDirection, &mut rng));
                    crate::estimator::sigma_hat(&est, &sets).map(|s| (s - noise.sigma).abs())
                })
                .collect::<Result<_>>()?;
            Ok(median(&errs))
        })
        .collect()
}

pub fn sigma_quality_check(medians: &[f64], radii: &[usize]) -> CheckResult {
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let worst = medians.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    CheckResult::new(
        "sigma_hat_quality",
        worst,
        1.0,
        decreasing,
        format!("median |sigma_hat - sigma| at m = {radii:?}: {medians:?}"),
    )
}

/// Knobs for [`property_suite`].
#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub seed: u64,
    pub moment_replications: usize,
    pub risk_replications: usize,
    pub keying: NoiseKeying,
    pub convention: PhaseConvention,
    /// Skip the checks whose cost is dominated by risk replications.
    pub skip_risk: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 20240611,
            moment_replications: 10_000,
            risk_replications: 500,
            keying: NoiseKeying::PerDirection,
            convention: PhaseConvention::Conjugate,
            skip_risk: false,
        }
    }
}

/// Runs every check on one configuration.
pub fn property_suite(config: &ExperimentConfig, family: &NoiseFamily, opts: &SuiteOptions) -> Result<PropertyReport> {
    let phantom = &config.phantom;
    let d = phantom.dimension();
    let x_star = phantom.x_star();
    let primary = family.models()[0];
    let mut checks = Vec::new();

    checks.push(support_check(phantom, 10_000, opts.seed)?);
    if d == 2 {
        checks.push(radon_oracle_check(phantom, 100, opts.seed)?);
        let radius = config.m as f64;
        checks.push(orthogonality_check(&colinear_families(radius), x_star, config.q, opts.convention)?);
        let (idx, pairs) = covariance_panel();
        checks.push(eta_covariance_check(
            &idx,
            &pairs,
            config.q,
            &primary,
            opts.keying,
            opts.convention,
            opts.moment_replications,
            opts.seed,
        )?);
    }
    checks.push(direction_sharing_check(phantom, config.m, config.q, &primary, opts.seed)?);
    let fc = FormCheck {
        q: config.q,
        m: config.m,
        dimension: d,
        x_star,
        vectors: 20,
        replications: opts.moment_replications,
        seed: opts.seed,
        keying: opts.keying,
        convention: opts.convention,
    };
    for model in family.models() {
        let mut c = linear_form_check(&fc, model)?;
        c.name = format!("{}:{}", c.name, model.kind.name());
        checks.push(c);
        let mut c = quadratic_form_check(&fc, model)?;
        c.name = format!("{}:{}", c.name, model.kind.name());
        checks.push(c);
    }
    checks.push(radon_lipschitz_check(phantom, 1000, opts.seed)?);
    let oracle = ThetaOracle::build(phantom, 64);
    checks.push(fourier_tail_check(phantom, &[4, 8, 16], &oracle)?);
    checks.push(se_split_half_check(opts.seed));
    if !opts.skip_risk {
        let known = ExperimentConfig { sigma_mode: SigmaMode::Known, ..config.clone() };
        let exp = Experiment::with_convention(known, opts.convention)?;
        checks.push(penalty_vs_risk_check(&exp, &primary, opts.risk_replications, opts.seed)?);
        let exp = Experiment::with_convention(config.clone(), opts.convention)?;
        checks.push(selection_optimality_check(&exp, &primary, 50, opts.seed)?);
        checks.push(determinism_check(&exp, &primary, opts.seed)?);
    }
    Ok(PropertyReport { seed: opts.seed, checks })
}

fn support_check(phantom: &Phantom, points: usize, seed: u64) -> Result<CheckResult> {
    let d = phantom.dimension();
    let x = phantom.x_star();
    let mut rng = stream_rng(seed, 1);
    let mut worst: f64 = 0.0;
    let mut tested = 0;
    while tested < points {
        let p: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0 * x..2.0 * x)).collect();
        if p.iter().map(|v| v * v).sum::<f64>().sqrt() >= x {
            worst = worst.max(phantom.eval(&p).abs());
            tested += 1;
        }
    }
    let mut radon_worst: f64 = 0.0;
    for _ in 0..points / 10 {
        let nu = random_direction(d, &mut rng);
        let s = x * (1.0 + rng.random_range(0.0..1.0)) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        radon_worst = radon_worst.max(phantom.exact_radon(&nu, s)?.abs());
    }
    Ok(CheckResult::new(
        "support",
        worst.max(radon_worst),
        0.0,
        worst == 0.0 && radon_worst == 0.0,
        format!("{points} points outside the support ball, {} projections beyond x_star", points / 10),
    ))
}

fn radon_oracle_check(phantom: &Phantom, trials: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = stream_rng(seed, 2);
    let x = phantom.x_star();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let nu = random_direction(2, &mut rng);
        let s = rng.random_range(-x..x);
        let exact = phantom.exact_radon(&nu, s)?;
        let quad = phantom.radon_quadrature_oracle(&nu, s, 4096)?;
        worst = worst.max((exact - quad).abs() / exact.abs().max(1e-3));
    }
    Ok(CheckResult::new(
        "radon_oracle_agreement",
        worst,
        1e-6,
        worst <= 1e-6,
        format!("{trials} random lines, 4096 cells per chord segment; relative to max(|R|, 1e-3)"),
    ))
}

fn direction_sharing_check(phantom: &Phantom, m: usize, q: usize, noise: &NoiseModel, seed: u64) -> Result<CheckResult> {
    let sets = IndexSets::new(phantom.dimension(), m)?;
    let samples = crate::obsmodel::draw_samples(phantom, &sets.s_n, q, noise, seed)?;
    let mut mismatches = 0usize;
    let mut pairs = 0usize;
    for j in &sets.s_n {
        let key = crate::obsmodel::direction_key(j);
        let reference = samples.noise_of(&key).expect("key present");
        let own = samples.noise_of(j).expect("index present");
        pairs += 1;
        if own.iter().zip(reference).any(|(a, b)| a.to_bits() != b.to_bits()) {
            mismatches += 1;
        }
    }
    Ok(CheckResult::new(
        "direction_sharing",
        mismatches as f64,
        0.0,
        mismatches == 0,
        format!("{pairs} indices compared bitwise with their direction key"),
    ))
}

fn se_split_half_check(seed: u64) -> CheckResult {
    let mut rng = stream_rng(seed, 3);
    let values: Vec<f64> = (0..10_000).map(|_| rng.random_range(0.0..1.0f64).powi(3)).collect();
    let full = MeanSe::from_samples(&values);
    let (a, b) = values.split_at(values.len() / 2);
    let (ha, hb) = (MeanSe::from_samples(a), MeanSe::from_samples(b));
    let split = (ha.se * ha.se + hb.se * hb.se).sqrt() / 2.0;
    let rel = (full.se - split).abs() / full.se;
    CheckResult::new("se_split_half", rel, 0.2, rel <= 0.2, format!("full {:.4e}, split-half {:.4e}", full.se, split))
}

fn selection_optimality_check(exp: &Experiment, noise: &NoiseModel, replications: usize, seed: u64) -> Result<CheckResult> {
    let mut violations = 0usize;
    for r in 0..replications as u64 {
        let mut rng = stream_rng(seed, r);
        let est = exp.plan().estimate(&exp.design().draw_noise(noise, NoiseKeying::PerDirection, &mut rng));
        let sigma = match exp.config().sigma_mode {
            SigmaMode::Known => noise.sigma,
            SigmaMode::Estimated => crate::estimator::sigma_hat(&est, exp.sets())?,
        };
        let sel = select(exp.family(), &est, exp.config().delta, sigma)?;
        if sel.costs.iter().any(|c| c.total < sel.cost.total) {
            violations += 1;
        }
    }
    Ok(CheckResult::new(
        "selection_optimality",
        violations as f64,
        0.0,
        violations == 0,
        format!("{replications} replications"),
    ))
}

fn determinism_check(exp: &Experiment, noise: &NoiseModel, seed: u64) -> Result<CheckResult> {
    let a = exp.run(noise, 64, seed)?;
    let b = exp.run(noise, 64, seed)?;
    let same = a == b;
    Ok(CheckResult::new(
        "determinism",
        if same { 0.0 } else { 1.0 },
        0.0,
        same,
        "two runs of 64 replications with one seed".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obsmodel::NoiseKind;

    #[test]
    fn colinear_families_cover_axes_and_diagonals() {
        let f = colinear_families(8.0);
        assert_eq!(f[0].len(), 17);
        assert_eq!(f[1].len(), 16);
        assert_eq!(f[2].len(), 10);
        assert!(f[2].contains(&vec![-5, -5]));
    }

    #[test]
    fn orthogonality_holds_at_desk_scale() {
        let c = orthogonality_check(&colinear_families(8.0), 1.0, 34, PhaseConvention::Conjugate).unwrap();
        assert!(c.passed, "{c:?}");
    }

    #[test]
    fn shared_noise_across_directions_breaks_cross_covariance() {
        let (idx, pairs) = covariance_panel();
        let noise = NoiseModel::new(NoiseKind::Gaussian, 0.05).unwrap();
        let good = eta_covariance_check(&idx, &pairs, 34, &noise, NoiseKeying::PerDirection, PhaseConvention::Conjugate, 4000, 1).unwrap();
        assert!(good.passed, "{good:?}");
        let bad = eta_covariance_check(
            &idx,
            &pairs,
            34,
            &noise,
            NoiseKeying::SharedAcrossDirections,
            PhaseConvention::Conjugate,
            4000,
            1,
        )
        .unwrap();
        assert!(!bad.passed, "{bad:?}");
    }

    #[test]
    fn modulus_checks_ignore_the_phase_convention() {
        let noise = NoiseModel::new(NoiseKind::Laplace, 0.05).unwrap();
        let c = orthogonality_check(&colinear_families(8.0), 1.0, 34, PhaseConvention::Direct).unwrap();
        assert!(c.passed, "{c:?}");
        let (idx, pairs) = covariance_panel();
        let c = eta_covariance_check(&idx, &pairs, 34, &noise, NoiseKeying::PerDirection, PhaseConvention::Direct, 4000, 5)
            .unwrap();
        assert!(c.passed, "{c:?}");
        let fc = FormCheck {
            q: 34,
            m: 8,
            dimension: 2,
            x_star: 1.0,
            vectors: 5,
            replications: 2000,
            seed: 5,
            keying: NoiseKeying::PerDirection,
            convention: PhaseConvention::Direct,
        };
        assert!(linear_form_check(&fc, &noise).unwrap().passed);
        assert!(quadratic_form_check(&fc, &noise).unwrap().passed);
    }

    #[test]
    fn suite_report_csv_has_one_row_per_check() {
        let report = PropertyReport {
            seed: 1,
            checks: vec![
                CheckResult::new("a", 1.0, 2.0, true, String::new()),
                CheckResult::new("b", 3.0, 2.0, false, "x, y".into()),
            ],
        };
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("\"x, y\""));
        assert!(!report.all_passed());
    }

    #[test]
    fn sigma_quality_verdict() {
        assert!(sigma_quality_check(&[0.03, 0.01, 0.005], &[4, 8, 16]).passed);
        assert!(!sigma_quality_check(&[0.03, 0.03, 0.005], &[4, 8, 16]).passed);
    }
}
