//! Pinsker-weight family, penalized cost and model selection.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::estimator::{CoeffEstimates, IndexSets};
use crate::{Error, Index, Result};

/// One point `(β, ℓ)` of the tuning grid; `ell = ell_step * epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub beta: u32,
    pub ell: f64,
    pub ell_step: u32,
}

impl GridPoint {
    fn order(&self, other: &Self) -> Ordering {
        (self.beta, self.ell_step).cmp(&(other.beta, other.ell_step))
    }
}

/// Grid size parameters: `beta ∈ 1..=k_star`, `ell ∈ {ε, 2ε, …, floor(1/ε²) ε}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub k_star: u32,
    pub epsilon: f64,
}

impl GridSpec {
    /// `ε = 1/ln n`, `k* = floor(1 + sqrt(ln n))`, where `n` is the number of
    /// scalar observations.
    pub fn from_sample_size(n: usize) -> Result<Self> {
        let ln = (n as f64).ln();
        if !(ln > 1.0) {
            return Err(Error::Config(format!("sample size {n} is too small for the default grid")));
        }
        Ok(Self { k_star: ((1.0 + ln.sqrt()).floor() as u32).max(1), epsilon: 1.0 / ln })
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_star < 1 {
            return Err(Error::Config("k_star must be >= 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        Ok(())
    }

    /// `floor(1/ε²)`.
    pub fn ell_steps(&self) -> u32 {
        (1.0 / (self.epsilon * self.epsilon)).floor() as u32
    }

    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for beta in 1..=self.k_star {
            for k in 1..=self.ell_steps() {
                out.push(GridPoint { beta, ell: k as f64 * self.epsilon, ell_step: k });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightSource {
    Grid(GridPoint),
    Custom,
}

/// Weights `λ(j) ∈ [0, 1]` aligned with an index list.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub values: Vec<f64>,
    pub source: WeightSource,
}

impl WeightVector {
    pub fn custom(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Input("weights must lie in [0, 1]".into()));
        }
        Ok(Self { values, source: WeightSource::Custom })
    }

    pub fn constant(len: usize, value: f64) -> Result<Self> {
        Self::custom(vec![value; len])
    }

    pub fn grid_point(&self) -> Option<GridPoint> {
        match self.source {
            WeightSource::Grid(g) => Some(g),
            WeightSource::Custom => None,
        }
    }

    /// `Σ λ(j) ϖ_j`.
    pub fn varpi_mass(&self, varpi: &[f64]) -> f64 {
        self.values.iter().zip(varpi).map(|(l, w)| l * w).sum()
    }

    /// Number of nonzero entries.
    pub fn support_size(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }
}

/// `ď_β = (β+1)(2β+1) / (π^(2β) β)`.
pub fn pinsker_constant(beta: u32) -> f64 {
    let b = beta as f64;
    (b + 1.0) * (2.0 * b + 1.0) / (PI.powf(2.0 * b) * b)
}

/// Shape parameters shared by all weights of one family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileScale {
    /// `υ = m / ς*`.
    pub upsilon: f64,
    /// `t_* = 1 + floor(ln υ)`.
    pub t_star: i64,
    pub dimension: usize,
}

impl ProfileScale {
    pub fn new(m: usize, sigma_hi: f64, dimension: usize) -> Result<Self> {
        if !(sigma_hi > 0.0) {
            return Err(Error::Config(format!("sigma_hi must be positive, got {sigma_hi}")));
        }
        let upsilon = m as f64 / sigma_hi;
        Ok(Self { upsilon, t_star: 1 + upsilon.ln().floor() as i64, dimension })
    }

    /// `ω = (ď_β ℓ υ)^(1/(2β+d))`.
    pub fn cutoff(&self, gp: &GridPoint) -> f64 {
        let exponent = 1.0 / (2.0 * gp.beta as f64 + self.dimension as f64);
        (pinsker_constant(gp.beta) * gp.ell * self.upsilon).powf(exponent)
    }

    /// One-dimensional profile at `t = |j_l|`: 1 at `t = 0`, 1 on the plateau
    /// `1 <= t < t_*` (cut at `ω`), `1 - (t/ω)^β` on `t_* <= t <= ω`, else 0.
    pub fn profile(&self, gp: &GridPoint, t: i64) -> f64 {
        let omega = self.cutoff(gp);
        let tf = t as f64;
        let v = if t == 0 {
            1.0
        } else if tf > omega {
            0.0
        } else if t < self.t_star {
            1.0
        } else {
            1.0 - (tf / omega).powi(gp.beta as i32)
        };
        v.clamp(0.0, 1.0)
    }
}

/// `λ(j) = Π_l profile(|j_l|)` over `sets.s_n`.
pub fn pinsker_weight(gp: &GridPoint, sets: &IndexSets, sigma_hi: f64) -> Result<WeightVector> {
    let scale = ProfileScale::new(sets.m, sigma_hi, sets.dimension)?;
    Ok(weight_with_scale(gp, &scale, &sets.s_n))
}

fn weight_with_scale(gp: &GridPoint, scale: &ProfileScale, indices: &[Index]) -> WeightVector {
    let values = indices
        .iter()
        .map(|j| j.iter().map(|&t| scale.profile(gp, t.abs())).product())
        .collect();
    WeightVector { values, source: WeightSource::Grid(*gp) }
}

/// The finite weight family indexed by the grid, with its summary statistics.
#[derive(Debug, Clone)]
pub struct WeightFamily {
    indices: Arc<Vec<Index>>,
    pub weights: Vec<WeightVector>,
    /// Family size `k* floor(1/ε²)`.
    pub iota: usize,
    /// Number of pairwise distinct weight vectors.
    pub distinct: usize,
    /// `max_λ (Σ λ ϖ + #{λ ≠ 0})`.
    pub lambda_star: f64,
    /// `(υ/ε)^(d/(2+d))`, reported next to `lambda_star`.
    pub lambda_star_bound: f64,
    pub scale: ProfileScale,
    pub grid: GridSpec,
}

impl WeightFamily {
    pub fn indices(&self) -> &[Index] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn lambda_star_within_bound(&self) -> bool {
        self.lambda_star <= self.lambda_star_bound
    }

    /// Same family with the weights in a different order (for tie-break tests).
    pub fn reordered(&self, order: &[usize]) -> Self {
        let mut out = self.clone();
        out.weights = order.iter().map(|&i| self.weights[i].clone()).collect();
        out
    }
}

/// Builds every grid weight. `varpi` is aligned with `sets.s_n`.
pub fn build_family(sets: &IndexSets, grid: GridSpec, sigma_hi: f64, varpi: &[f64]) -> Result<WeightFamily> {
    grid.validate()?;
    if varpi.len() != sets.s_n.len() {
        return Err(Error::Input("varpi must be aligned with the truncation set".into()));
    }
    let scale = ProfileScale::new(sets.m, sigma_hi, sets.dimension)?;
    let weights: Vec<WeightVector> =
        grid.points().iter().map(|gp| weight_with_scale(gp, &scale, &sets.s_n)).collect();
    let lambda_star = weights
        .iter()
        .map(|w| w.varpi_mass(varpi) + w.support_size() as f64)
        .fold(0.0, f64::max);
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    for w in &weights {
        if !distinct.iter().any(|v| **v == w.values) {
            distinct.push(&w.values);
        }
    }
    let d = sets.dimension as f64;
    Ok(WeightFamily {
        indices: Arc::new(sets.s_n.clone()),
        iota: weights.len(),
        distinct: distinct.len(),
        weights,
        lambda_star,
        lambda_star_bound: (scale.upsilon / grid.epsilon).powf(d / (2.0 + d)),
        scale,
        grid,
    })
}

/// `θ̃_j = |θ̂_j|² - σ̂ κ ϖ_j / q`.
pub fn theta_tilde(estimates: &CoeffEstimates, sigma_est: f64) -> Vec<f64> {
    let q = estimates.q() as f64;
    estimates
        .theta_hat()
        .iter()
        .enumerate()
        .map(|(i, t)| t.norm_sqr() - sigma_est / q * estimates.variance_weight(i))
        .collect()
}

/// `P̂(λ) = σ̂ / q · Σ λ²(j) κ ϖ_j`.
pub fn penalty(lambda: &WeightVector, estimates: &CoeffEstimates, sigma_est: f64) -> f64 {
    let q = estimates.q() as f64;
    let mass: f64 = lambda
        .values
        .iter()
        .enumerate()
        .map(|(i, l)| l * l * estimates.variance_weight(i))
        .sum();
    sigma_est / q * mass
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// `Σ λ² |θ̂|²`.
    pub quad: f64,
    /// `2 Σ λ θ̃`.
    pub cross: f64,
    /// `δ P̂(λ)`.
    pub penalty: f64,
    pub total: f64,
}

pub fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 0.125 {
        Ok(())
    } else {
        Err(Error::Config(format!("delta = {delta} must lie in the open interval (0, 1/8)")))
    }
}

fn check_aligned(lambda: &WeightVector, estimates: &CoeffEstimates) -> Result<()> {
    if lambda.values.len() != estimates.theta_hat().len() {
        return Err(Error::Input(format!(
            "weight vector has {} entries but there are {} estimates",
            lambda.values.len(),
            estimates.theta_hat().len()
        )));
    }
    Ok(())
}

/// `J(λ) = Σ λ²|θ̂|² - 2 Σ λ θ̃ + δ P̂(λ)`.
pub fn cost(
    lambda: &WeightVector,
    estimates: &CoeffEstimates,
    tilde: &[f64],
    delta: f64,
    sigma_est: f64,
) -> Result<CostBreakdown> {
    check_delta(delta)?;
    check_aligned(lambda, estimates)?;
    Ok(cost_unchecked(lambda, estimates, tilde, delta, sigma_est))
}

fn cost_unchecked(
    lambda: &WeightVector,
    estimates: &CoeffEstimates,
    tilde: &[f64],
    delta: f64,
    sigma_est: f64,
) -> CostBreakdown {
    let mut quad = 0.0;
    let mut cross = 0.0;
    for ((l, t), tt) in lambda.values.iter().zip(estimates.theta_hat()).zip(tilde) {
        if *l != 0.0 {
            quad += l * l * t.norm_sqr();
            cross += 2.0 * l * tt;
        }
    }
    let penalty = delta * penalty(lambda, estimates, sigma_est);
    CostBreakdown { quad, cross, penalty, total: quad - cross + penalty }
}

/// Result of minimizing the cost over a family.
#[derive(Debug, Clone)]
pub struct Selection {
    /// Position of the winner in `family.weights`.
    pub position: usize,
    pub weights: WeightVector,
    pub cost: CostBreakdown,
    /// Cost of every family member, in family order.
    pub costs: Vec<CostBreakdown>,
    pub theta_tilde: Vec<f64>,
}

impl Selection {
    pub fn grid_point(&self) -> Option<GridPoint> {
        self.weights.grid_point()
    }
}

/// Argmin of the cost over the family; ties go to the smallest `(β, ℓ)`,
/// with custom vectors after grid vectors in family order.
pub fn select(family: &WeightFamily, estimates: &CoeffEstimates, delta: f64, sigma_est: f64) -> Result<Selection> {
    check_delta(delta)?;
    if family.is_empty() {
        return Err(Error::Config("weight family is empty".into()));
    }
    if family.indices() != estimates.indices() {
        return Err(Error::Input("estimates and weight family use different index sets".into()));
    }
    let tilde = theta_tilde(estimates, sigma_est);
    let costs: Vec<CostBreakdown> = family
        .weights
        .iter()
        .map(|w| cost_unchecked(w, estimates, &tilde, delta, sigma_est))
        .collect();
    let mut best = 0;
    for i in 1..costs.len() {
        let c = costs[i].total.total_cmp(&costs[best].total);
        if c == Ordering::Less || (c == Ordering::Equal && precedes(&family.weights[i], &family.weights[best])) {
            best = i;
        }
    }
    Ok(Selection {
        position: best,
        weights: family.weights[best].clone(),
        cost: costs[best],
        costs,
        theta_tilde: tilde,
    })
}

fn precedes(a: &WeightVector, b: &WeightVector) -> bool {
    match (a.grid_point(), b.grid_point()) {
        (Some(x), Some(y)) => x.order(&y) == Ordering::Less,
        (Some(_), None) => true,
        _ => false,
    }
}

/// `Ŝ_λ(x) = Σ λ(j) θ̂_j Φ_j(x)`.
pub fn evaluate_at(lambda: &WeightVector, estimates: &CoeffEstimates, x_star: f64, x: &[f64]) -> Complex64 {
    let d = x.len();
    let norm = (2.0 * x_star).powf(-(d as f64) / 2.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for ((l, t), j) in lambda.values.iter().zip(estimates.theta_hat()).zip(estimates.indices()) {
        if *l == 0.0 {
            continue;
        }
        let phase: f64 = j.iter().zip(x).map(|(&jl, xl)| jl as f64 * xl).sum::<f64>() * PI / x_star;
        acc += t * Complex64::from_polar(*l, phase);
    }
    acc * norm
}

/// Reconstruction sampled at cell centers of a `resolution^d` grid over
/// `[-x_star, x_star]^d`, first axis varying slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub resolution: usize,
    pub dimension: usize,
    pub x_star: f64,
    pub values: Vec<f64>,
    /// Largest discarded imaginary part.
    pub imag_residue: f64,
}

impl Raster {
    pub fn node(&self, i: usize) -> f64 {
        -self.x_star + (i as f64 + 0.5) * 2.0 * self.x_star / self.resolution as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Binary PGM (P5), 8-bit, min-max scaled. Rows run from the largest
    /// second coordinate down so the image appears upright. `d = 2` only.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<PgmScale> {
        if self.dimension != 2 {
            return Err(Error::Unsupported(format!("PGM output needs d = 2 (got d = {})", self.dimension)));
        }
        let n = self.resolution;
        let (min, max) = self.min_max();
        let span = max - min;
        write!(w, "P5\n{n} {n}\n255\n")?;
        let mut bytes = Vec::with_capacity(n * n);
        for row in (0..n).rev() {
            for col in 0..n {
                let v = self.values[col * n + row];
                let level = if span > 0.0 { ((v - min) / span * 255.0).round() } else { 0.0 };
                bytes.push(level as u8);
            }
        }
        w.write_all(&bytes)?;
        Ok(PgmScale { min, max, resolution: n })
    }
}

/// Sidecar describing how PGM gray levels map back to values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgmScale {
    pub min: f64,
    pub max: f64,
    pub resolution: usize,
}

pub fn reconstruct(lambda: &WeightVector, estimates: &CoeffEstimates, x_star: f64, resolution: usize) -> Result<Raster> {
    if resolution < 8 {
        return Err(Error::Input(format!("grid resolution must be >= 8, got {resolution}")));
    }
    check_aligned(lambda, estimates)?;
    let d = estimates.indices().first().map_or(2, Vec::len);
    let mut raster = Raster { resolution, dimension: d, x_star, values: Vec::new(), imag_residue: 0.0 };
    let nodes: Vec<f64> = (0..resolution).map(|i| raster.node(i)).collect();
    let m = estimates.indices().iter().flatten().map(|v| v.abs()).max().unwrap_or(0);
    // per-axis tables of exp(i π k x / x_star) for k in -m..=m
    let table: Vec<Vec<Complex64>> = nodes
        .iter()
        .map(|x| (-m..=m).map(|k| Complex64::from_polar(1.0, PI * k as f64 * x / x_star)).collect())
        .collect();
    let active: Vec<(Complex64, &Index)> = lambda
        .values
        .iter()
        .zip(estimates.theta_hat())
        .zip(estimates.indices())
        .filter(|((l, _), _)| **l != 0.0)
        .map(|((l, t), j)| (t * *l, j))
        .collect();
    let norm = (2.0 * x_star).powf(-(d as f64) / 2.0);
    let total = resolution.pow(d as u32);
    let mut values = Vec::with_capacity(total);
    let mut residue: f64 = 0.0;
    let mut counter = vec![0usize; d];
    loop {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, j) in &active {
            let mut basis = *c;
            for (axis, &jl) in j.iter().enumerate() {
                basis *= table[counter[axis]][(jl + m) as usize];
            }
            acc += basis;
        }
        acc *= norm;
        residue = residue.max(acc.im.abs());
        values.push(acc.re);
        if !crate::phantoms::advance(&mut counter, resolution) {
            break;
        }
    }
    raster.values = values;
    raster.imag_residue = residue;
    Ok(raster)
}
