//! Monte Carlo risk engine.
//!
//! The coefficient estimates are affine in the noise, so an [`Experiment`]
//! precomputes the noiseless part once and every replication only draws a
//! noise table. Replication `r` of a run seeded with `seed` always uses
//! ChaCha stream `r`, so results do not depend on thread scheduling.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimator::{
    bias_book, check_sinc_range, sigma_hat, CoeffEstimates, CoefficientPlan, IndexSets, PhaseConvention,
};
use crate::fourier::{corner_tail_bound, ThetaOracle};
use crate::obsmodel::{stream_rng, NoiseFamily, NoiseKeying, NoiseKind, NoiseModel, SinogramDesign};
use crate::phantoms::Phantom;
use crate::selector::{build_family, check_delta, select, GridPoint, GridSpec, WeightFamily, WeightVector};
use crate::stats::{pairwise_sum, MeanSe};
use crate::{Error, Result};

/// Source of the noise level plugged into the cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaMode {
    /// Use the true variance of the noise model.
    Known,
    /// Use the high-frequency estimate.
    #[default]
    Estimated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub phantom: Phantom,
    pub m: usize,
    pub q: usize,
    pub delta: f64,
    pub sigma_mode: SigmaMode,
    /// `None` selects the sample-size defaults.
    pub grid: Option<GridSpec>,
    /// Upper variance bound of the noise family.
    pub sigma_hi: f64,
}

impl ExperimentConfig {
    /// Planar default: `m = 8`, `q = 34`, `δ = 0.1`, estimated noise level.
    pub fn desk_default() -> Self {
        Self {
            phantom: Phantom::desk_default(),
            m: 8,
            q: 34,
            delta: 0.1,
            sigma_mode: SigmaMode::Estimated,
            grid: None,
            sigma_hi: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        let d = self.phantom.dimension();
        let min_q = 2 * d * self.m + 2;
        if self.q < min_q {
            return Err(Error::Config(format!("q = {} is below 2 d m + 2 = {min_q}", self.q)));
        }
        if self.sigma_mode == SigmaMode::Estimated && self.m < 4 {
            return Err(Error::Config(format!("estimated noise level needs m >= 4, got {}", self.m)));
        }
        Ok(())
    }
}

/// Output of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub sigma_used: f64,
    pub sigma_hat: Option<f64>,
    /// Position of the selected weight in the family.
    pub selected: usize,
    pub selected_error: f64,
    /// Empirical error of every family member.
    pub errors: Vec<f64>,
}

/// Fixed design, weight family and reference coefficients for repeated runs.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    sets: IndexSets,
    design: SinogramDesign,
    plan: CoefficientPlan,
    family: WeightFamily,
    oracle: ThetaOracle,
    theta_ref: Vec<Complex64>,
    outside_energy: f64,
    grid: GridSpec,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        Self::with_convention(config, PhaseConvention::Conjugate)
    }

    pub fn with_convention(config: ExperimentConfig, convention: PhaseConvention) -> Result<Self> {
        config.validate()?;
        let d = config.phantom.dimension();
        let sets = IndexSets::new(d, config.m)?;
        check_sinc_range(&sets.s_n, config.phantom.x_star(), config.q)?;
        let design = SinogramDesign::new(&config.phantom, &sets.s_n, config.q)?;
        let plan = CoefficientPlan::new(&design, &sets.s_n, convention)?;
        let grid = match config.grid {
            Some(g) => g,
            None => GridSpec::from_sample_size(design.n_total())?,
        };
        let family = build_family(&sets, grid, config.sigma_hi, plan.table().varpi())?;
        let oracle = ThetaOracle::build(&config.phantom, 2 * config.m as i64);
        let theta_ref: Vec<Complex64> = sets.s_n.iter().map(|j| oracle.require(j)).collect::<Result<_>>()?;
        let m = config.m as i64;
        let outside: Vec<f64> = oracle
            .iter()
            .filter(|(j, _)| j.iter().any(|v| v.abs() > m))
            .map(|(_, t)| t.norm_sqr())
            .collect();
        let mut outside = outside;
        outside.sort_by(|a, b| a.total_cmp(b));
        Ok(Self {
            outside_energy: pairwise_sum(&outside),
            config,
            sets,
            design,
            plan,
            family,
            oracle,
            theta_ref,
            grid,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn sets(&self) -> &IndexSets {
        &self.sets
    }

    pub fn design(&self) -> &SinogramDesign {
        &self.design
    }

    pub fn plan(&self) -> &CoefficientPlan {
        &self.plan
    }

    pub fn family(&self) -> &WeightFamily {
        &self.family
    }

    pub fn oracle(&self) -> &ThetaOracle {
        &self.oracle
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Reference `θ_j` aligned with the truncation set.
    pub fn theta_ref(&self) -> &[Complex64] {
        &self.theta_ref
    }

    /// `Σ |θ_j|²` over the oracle box minus the truncation set.
    pub fn outside_energy(&self) -> f64 {
        self.outside_energy
    }

    /// Energy beyond the oracle box, by Parseval against spatial quadrature.
    pub fn residual_energy(&self) -> f64 {
        self.oracle.residual_energy()
    }

    /// Corner-tail bound evaluated at the oracle cutoff.
    pub fn residual_bound(&self) -> f64 {
        let tau = self.config.phantom.regularity().mixed_deriv_norm;
        corner_tail_bound(self.config.phantom.x_star(), self.sets.dimension, self.oracle.cutoff() as usize, tau)
    }

    /// `Σ_S |λ θ̂ - θ|² + Σ_{box \ S} |θ|²`.
    pub fn error_of(&self, lambda: &WeightVector, estimates: &CoeffEstimates) -> f64 {
        let mut acc = 0.0;
        for ((l, t), r) in lambda.values.iter().zip(estimates.theta_hat()).zip(&self.theta_ref) {
            acc += (t * *l - r).norm_sqr();
        }
        acc + self.outside_energy
    }

    fn sigma_for(&self, est: &CoeffEstimates, noise: &NoiseModel) -> Result<(f64, Option<f64>)> {
        match self.config.sigma_mode {
            SigmaMode::Known => Ok((noise.sigma, None)),
            SigmaMode::Estimated => {
                let s = sigma_hat(est, &self.sets)?;
                Ok((s, Some(s)))
            }
        }
    }

    /// Draw, estimate, select and score one replication.
    pub fn replicate(&self, noise: &NoiseModel, keying: NoiseKeying, seed: u64, stream: u64) -> Result<Replication> {
        let mut rng = stream_rng(seed, stream);
        let table = self.design.draw_noise(noise, keying, &mut rng);
        let est = self.plan.estimate(&table);
        self.score(&est, noise)
    }

    pub fn score(&self, est: &CoeffEstimates, noise: &NoiseModel) -> Result<Replication> {
        let (sigma_used, sigma_hat) = self.sigma_for(est, noise)?;
        let sel = select(&self.family, est, self.config.delta, sigma_used)?;
        let errors: Vec<f64> = self.family.weights.iter().map(|w| self.error_of(w, est)).collect();
        Ok(Replication {
            sigma_used,
            sigma_hat,
            selected: sel.position,
            selected_error: errors[sel.position],
            errors,
        })
    }

    /// Replications `0..replications` in order.
    pub fn run(&self, noise: &NoiseModel, replications: usize, seed: u64) -> Result<Vec<Replication>> {
        (0..replications as u64)
            .into_par_iter()
            .map(|r| self.replicate(noise, NoiseKeying::PerDirection, seed, r))
            .collect()
    }
}

/// `Er(λ) = Σ_S |λ(j) θ̂_j - θ_j|² + Σ_{box \ S} |θ_j|²` for an arbitrary
/// oracle. The energy beyond the oracle box is not included; see
/// [`ThetaOracle::residual_energy`].
pub fn empirical_error(lambda: &WeightVector, estimates: &CoeffEstimates, oracle: &ThetaOracle) -> Result<f64> {
    if lambda.values.len() != estimates.theta_hat().len() {
        return Err(Error::Input("weights and estimates are not aligned".into()));
    }
    let mut inside = std::collections::HashSet::new();
    let mut acc = 0.0;
    for ((l, t), j) in lambda.values.iter().zip(estimates.theta_hat()).zip(estimates.indices()) {
        acc += (t * *l - oracle.require(j)?).norm_sqr();
        inside.insert(j.clone());
    }
    let mut outside: Vec<f64> =
        oracle.iter().filter(|(j, _)| !inside.contains(*j)).map(|(_, t)| t.norm_sqr()).collect();
    outside.sort_by(|a, b| a.total_cmp(b));
    Ok(acc + pairwise_sum(&outside))
}

/// What `mc_risk` scores in each replication.
#[derive(Debug, Clone)]
pub enum RiskTarget {
    Fixed(WeightVector),
    Selector,
}

pub fn mc_risk(
    experiment: &Experiment,
    target: &RiskTarget,
    noise: &NoiseModel,
    replications: usize,
    seed: u64,
) -> Result<MeanSe> {
    if replications < 100 {
        return Err(Error::Config(format!("at least 100 replications are required, got {replications}")));
    }
    let errors: Vec<f64> = (0..replications as u64)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            match target {
                RiskTarget::Selector => {
                    Ok(experiment.replicate(noise, NoiseKeying::PerDirection, seed, r)?.selected_error)
                }
                RiskTarget::Fixed(w) => {
                    let mut rng = stream_rng(seed, r);
                    let table = experiment.design.draw_noise(noise, NoiseKeying::PerDirection, &mut rng);
                    Ok(experiment.error_of(w, &experiment.plan.estimate(&table)))
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(MeanSe::from_samples(&errors))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaRisk {
    pub beta: u32,
    pub ell: f64,
    pub mean: f64,
    pub se: f64,
}

/// Risk summary for one noise law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRisk {
    pub kind: NoiseKind,
    pub sigma: f64,
    pub fourth_moment: f64,
    pub per_lambda: Vec<LambdaRisk>,
    pub selected: MeanSe,
    pub oracle_risk: f64,
    pub oracle_point: GridPoint,
    pub oracle_ratio: f64,
    /// `max(0, selected - factor * oracle)`.
    pub slack: f64,
    /// `slack * q * δ`.
    pub slack_scaled: f64,
    /// Standard error of `selected - factor * oracle` (pessimistic: treats
    /// the two means as independent).
    pub slack_se: f64,
    /// `E |σ̂ - σ|`, present when the noise level is estimated.
    pub sigma_abs_error: Option<MeanSe>,
    /// `(1 + σ + 1/σ) E ξ⁴ ι̌`.
    pub psi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustRisk {
    pub per_model: Vec<(NoiseKind, MeanSe)>,
    /// Largest selected risk over the family.
    pub sup: f64,
    pub worst: NoiseKind,
    /// `min_λ max_p` of the per-weight mean risks.
    pub oracle_risk: f64,
    pub slack: f64,
    pub slack_scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderBudget {
    pub b_tilde: f64,
    pub lambda_star: f64,
    pub lambda_star_bound: f64,
    pub lambda_star_within_bound: bool,
    pub iota: usize,
    pub distinct_weights: usize,
    /// `min_S ϖ_j`.
    pub varpi_min: f64,
    /// The same infimum of squared weights.
    pub varpi_min_sq: f64,
    pub outside_energy: f64,
    pub residual_energy: f64,
    pub residual_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub seed: u64,
    pub replications: usize,
    pub q: usize,
    pub m: usize,
    pub delta: f64,
    pub sigma_mode: SigmaMode,
    pub epsilon: f64,
    pub k_star: u32,
    /// `(1 + 2δ) / (1 - 4δ)`.
    pub factor: f64,
    pub models: Vec<ModelRisk>,
    pub robust: RobustRisk,
    pub remainder: RemainderBudget,
    /// Oracle risk does not exceed any selected mean by more than 3 SE.
    pub oracle_sane: bool,
}

pub fn oracle_factor(delta: f64) -> f64 {
    (1.0 + 2.0 * delta) / (1.0 - 4.0 * delta)
}

/// Seed of the `k`-th noise law in a family run.
pub fn model_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn model_risk(experiment: &Experiment, noise: &NoiseModel, replications: usize, seed: u64) -> Result<ModelRisk> {
    let reps = experiment.run(noise, replications, seed)?;
    let fam = experiment.family();
    let per_lambda: Vec<LambdaRisk> = fam
        .weights
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let errs: Vec<f64> = reps.iter().map(|r| r.errors[i]).collect();
            let ms = MeanSe::from_samples(&errs);
            let gp = w.grid_point().expect("grid family");
            LambdaRisk { beta: gp.beta, ell: gp.ell, mean: ms.mean, se: ms.se }
        })
        .collect();
    let selected_errs: Vec<f64> = reps.iter().map(|r| r.selected_error).collect();
    let selected = MeanSe::from_samples(&selected_errs);
    let (best, oracle) = per_lambda
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, l)| if l.mean < bv { (i, l.mean) } else { (bi, bv) });
    let factor = oracle_factor(experiment.config.delta);
    let slack = (selected.mean - factor * oracle).max(0.0);
    let oracle_se = per_lambda[best].se;
    let sigma_abs_error = match experiment.config.sigma_mode {
        SigmaMode::Known => None,
        SigmaMode::Estimated => {
            let v: Vec<f64> = reps.iter().map(|r| (r.sigma_hat.unwrap_or(0.0) - noise.sigma).abs()).collect();
            Some(MeanSe::from_samples(&v))
        }
    };
    let psi = if noise.sigma > 0.0 {
        (1.0 + noise.sigma + 1.0 / noise.sigma) * noise.fourth_moment() * fam.iota as f64
    } else {
        0.0
    };
    let q = experiment.config.q as f64;
    Ok(ModelRisk {
        kind: noise.kind,
        sigma: noise.sigma,
        fourth_moment: noise.fourth_moment(),
        oracle_point: fam.weights[best].grid_point().expect("grid family"),
        oracle_ratio: if oracle > 0.0 { selected.mean / oracle } else { f64::NAN },
        per_lambda,
        selected,
        oracle_risk: oracle,
        slack,
        slack_scaled: slack * q * experiment.config.delta,
        slack_se: (selected.se.powi(2) + (factor * oracle_se).powi(2)).sqrt(),
        sigma_abs_error,
        psi,
    })
}

/// Selected-estimator risk under every law of the family and the worst case.
pub fn robust_risk(
    experiment: &Experiment,
    family: &NoiseFamily,
    replications: usize,
    seed: u64,
) -> Result<(Vec<ModelRisk>, RobustRisk)> {
    if family.models().is_empty() {
        return Err(Error::Config("noise family is empty".into()));
    }
    if replications < 100 {
        return Err(Error::Config(format!("at least 100 replications are required, got {replications}")));
    }
    let models: Vec<ModelRisk> = family
        .models()
        .iter()
        .enumerate()
        .map(|(k, m)| model_risk(experiment, m, replications, model_seed(seed, k)))
        .collect::<Result<_>>()?;
    let (worst, sup) = models
        .iter()
        .fold((models[0].kind, f64::NEG_INFINITY), |(wk, wv), m| {
            if m.selected.mean > wv {
                (m.kind, m.selected.mean)
            } else {
                (wk, wv)
            }
        });
    let n_lambda = models[0].per_lambda.len();
    let oracle_risk = (0..n_lambda)
        .map(|i| models.iter().map(|m| m.per_lambda[i].mean).fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min);
    let slack = (sup - oracle_factor(experiment.config.delta) * oracle_risk).max(0.0);
    let robust = RobustRisk {
        per_model: models.iter().map(|m| (m.kind, m.selected)).collect(),
        sup,
        worst,
        oracle_risk,
        slack,
        slack_scaled: slack * experiment.config.q as f64 * experiment.config.delta,
    };
    Ok((models, robust))
}

/// Full risk report over a noise family.
pub fn oracle_report(experiment: &Experiment, family: &NoiseFamily, replications: usize, seed: u64) -> Result<RiskReport> {
    let cfg = experiment.config();
    let (models, robust) = robust_risk(experiment, family, replications, seed)?;
    let book = bias_book(&cfg.phantom, experiment.sets(), cfg.q, experiment.oracle())?;
    let varpi = experiment.plan().table().varpi();
    let varpi_min = varpi.iter().copied().fold(f64::INFINITY, f64::min);
    let fam = experiment.family();
    let oracle_sane = models.iter().all(|m| m.oracle_risk <= m.selected.mean + 3.0 * m.selected.se);
    Ok(RiskReport {
        seed,
        replications,
        q: cfg.q,
        m: cfg.m,
        delta: cfg.delta,
        sigma_mode: cfg.sigma_mode,
        epsilon: experiment.grid().epsilon,
        k_star: experiment.grid().k_star,
        factor: oracle_factor(cfg.delta),
        models,
        robust,
        remainder: RemainderBudget {
            b_tilde: book.b_tilde,
            lambda_star: fam.lambda_star,
            lambda_star_bound: fam.lambda_star_bound,
            lambda_star_within_bound: fam.lambda_star_within_bound(),
            iota: fam.iota,
            distinct_weights: fam.distinct,
            varpi_min,
            varpi_min_sq: varpi_min * varpi_min,
            outside_energy: experiment.outside_energy(),
            residual_energy: experiment.residual_energy(),
            residual_bound: experiment.residual_bound(),
        },
        oracle_sane,
    })
}
