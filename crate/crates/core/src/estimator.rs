//! Fourier-coefficient estimates from a sinogram.
//!
//! For index `j` with signed frequency `ω` along its key direction, the cell
//! weight is `ψ_{j,l} = ∫_{s_{l-1}}^{s_l} exp(-i ω t) dt = exp(-i ω s_l) Υ`,
//! with `Υ = ∫_0^Δ exp(i ω x) dx`, and the estimate is
//! `θ̂_j = (2 x_star)^(-d/2) Σ_l y_{j,l} ψ_{j,l}`.
//!
//! Noise in `θ̂_j` has variance `κ σ ϖ_j / q` with `κ = (2 x_star)^(-d)` and
//! `ϖ_j = q² |Υ|²`. Everything downstream that converts a noise level into a
//! coefficient variance multiplies by `κ ϖ_j`; see [`CoeffEstimates::variance_weight`].

use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fourier::{lattice_box, ThetaOracle};
use crate::obsmodel::{direction_key, format_float, index_context, IndexContext, SampleSet, SinogramDesign};
use crate::phantoms::Phantom;
use crate::{Error, Index, Result};

/// Truncation set `S` (all `|j_l| <= m`) and the high-frequency set `T`
/// (`floor(sqrt(m)) < j_l <= m` for every `l`) used to estimate the noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSets {
    pub m: usize,
    pub dimension: usize,
    pub s_n: Vec<Index>,
    pub t_n: Vec<Index>,
}

impl IndexSets {
    pub fn new(dimension: usize, m: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::Config("truncation radius m must be >= 1".into()));
        }
        if dimension < 2 {
            return Err(Error::Config(format!("dimension must be >= 2, got {dimension}")));
        }
        let s_n = lattice_box(dimension, m as i64);
        let lo = high_band_start(m);
        let t_n = s_n.iter().filter(|j| j.iter().all(|&v| v >= lo)).cloned().collect();
        Ok(Self { m, dimension, s_n, t_n })
    }

    /// `(2m + 1)^d`.
    pub fn r_n(&self) -> usize {
        self.s_n.len()
    }
}

/// `floor(sqrt(m)) + 1`, in integer arithmetic.
pub fn high_band_start(m: usize) -> i64 {
    let mut r = (m as f64).sqrt() as i64;
    while (r + 1) * (r + 1) <= m as i64 {
        r += 1;
    }
    while r * r > m as i64 {
        r -= 1;
    }
    r + 1
}

/// Sign of the exponent in the cell weights. Only `Conjugate` matches the
/// coefficient definition `θ_j = ∫ S conj(Φ_j)`; `Direct` exists to show that
/// modulus-based quantities do not depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseConvention {
    #[default]
    Conjugate,
    Direct,
}

impl PhaseConvention {
    fn sign(self) -> f64 {
        match self {
            PhaseConvention::Conjugate => 1.0,
            PhaseConvention::Direct => -1.0,
        }
    }
}

/// `Υ = ∫_0^Δ exp(i ω x) dx = Δ exp(i ω Δ/2) sinc(ω Δ/2)`.
pub fn upsilon(ctx: &IndexContext, q: usize, convention: PhaseConvention) -> Complex64 {
    let delta = ctx.spacing(q);
    let w = convention.sign() * ctx.frequency();
    let half = 0.5 * w * delta;
    let sinc = if half == 0.0 { 1.0 } else { half.sin() / half };
    Complex64::from_polar(delta * sinc, half)
}

/// `ψ_{j,l}` for `1 <= l <= q`.
pub fn psi_weight(ctx: &IndexContext, q: usize, l: usize, convention: PhaseConvention) -> Result<Complex64> {
    if l == 0 || l > q {
        return Err(Error::Input(format!("cell index l = {l} outside 1..={q}")));
    }
    let s = -ctx.half_width + l as f64 * ctx.spacing(q);
    let w = convention.sign() * ctx.frequency();
    Ok(Complex64::from_polar(1.0, -w * s) * upsilon(ctx, q, convention))
}

/// `ϖ_j = 4 L² sin²(β̌)/β̌²`, equal to `4 L²` at `β̌ = 0`.
pub fn varpi(ctx: &IndexContext, q: usize) -> f64 {
    let b = ctx.beta_check(q);
    let l2 = 4.0 * ctx.half_width * ctx.half_width;
    if b == 0.0 {
        l2
    } else {
        l2 * (b.sin() / b).powi(2)
    }
}

/// `(2 x_star)^(-d)`, the factor converting `σ ϖ_j / q` into the variance of `θ̂_j`.
pub fn variance_scale(x_star: f64, dimension: usize) -> f64 {
    (2.0 * x_star).powi(-(dimension as i32))
}

/// Checks `β̌_j < π` on every index, which keeps all `ϖ_j` positive.
pub fn check_sinc_range(indices: &[Index], x_star: f64, q: usize) -> Result<()> {
    for j in indices {
        let ctx = index_context(j, x_star);
        if ctx.beta_check(q) >= std::f64::consts::PI {
            return Err(Error::Config(format!(
                "q = {q} is too small for index {j:?}: the cell-weight variance would vanish \
                 (need q >= 2 d m + 2)"
            )));
        }
    }
    Ok(())
}

/// Per-index metadata shared by every estimate computed on one design.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexTable {
    indices: Vec<Index>,
    lookup: HashMap<Index, usize>,
    varpi: Vec<f64>,
    kappa: f64,
    q: usize,
}

impl IndexTable {
    pub fn new(indices: Vec<Index>, varpi: Vec<f64>, kappa: f64, q: usize) -> Self {
        let lookup = indices.iter().cloned().enumerate().map(|(i, j)| (j, i)).collect();
        Self { indices, lookup, varpi, kappa, q }
    }

    pub fn indices(&self) -> &[Index] {
        &self.indices
    }

    pub fn position(&self, j: &[i64]) -> Option<usize> {
        self.lookup.get(j).copied()
    }

    pub fn varpi(&self) -> &[f64] {
        &self.varpi
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Coefficient estimates `θ̂_j` aligned with an [`IndexTable`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffEstimates {
    table: Arc<IndexTable>,
    theta_hat: Vec<Complex64>,
}

impl CoeffEstimates {
    pub fn new(table: Arc<IndexTable>, theta_hat: Vec<Complex64>) -> Result<Self> {
        if theta_hat.len() != table.len() {
            return Err(Error::Input("estimate count does not match the index table".into()));
        }
        Ok(Self { table, theta_hat })
    }

    pub fn table(&self) -> &Arc<IndexTable> {
        &self.table
    }

    pub fn q(&self) -> usize {
        self.table.q
    }

    pub fn indices(&self) -> &[Index] {
        &self.table.indices
    }

    pub fn theta_hat(&self) -> &[Complex64] {
        &self.theta_hat
    }

    pub fn get(&self, j: &[i64]) -> Option<Complex64> {
        self.table.position(j).map(|i| self.theta_hat[i])
    }

    pub fn varpi_of(&self, j: &[i64]) -> Option<f64> {
        self.table.position(j).map(|i| self.table.varpi[i])
    }

    /// `κ ϖ_j`: the variance of `θ̂_j` is `σ κ ϖ_j / q`.
    pub fn variance_weight(&self, i: usize) -> f64 {
        self.table.kappa * self.table.varpi[i]
    }

    /// Smallest `ϖ_j` over the table.
    pub fn varpi_min(&self) -> f64 {
        self.table.varpi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// CSV with columns `j1..jd, re, im, varpi`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let d = self.indices().first().map_or(0, Vec::len);
        let mut header: Vec<String> = (1..=d).map(|i| format!("j{i}")).collect();
        header.extend(["re", "im", "varpi"].map(String::from));
        w.write_record(&header)?;
        for (i, j) in self.indices().iter().enumerate() {
            let mut rec: Vec<String> = j.iter().map(|v| v.to_string()).collect();
            rec.push(format_float(self.theta_hat[i].re));
            rec.push(format_float(self.theta_hat[i].im));
            rec.push(format_float(self.table.varpi[i]));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, q: usize, x_star: f64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let d = headers.iter().filter(|h| h.starts_with('j')).count();
        if headers.len() != d + 3 {
            return Err(Error::Input(format!("unexpected coefficient CSV header: {headers:?}")));
        }
        let mut indices = Vec::new();
        let mut varpis = Vec::new();
        let mut theta = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec[k].trim().parse::<f64>().map_err(|e| {
                    Error::Input(format!("coefficient CSV row {}: column {k}: {e}", row + 2))
                })
            };
            indices.push((0..d).map(|k| parse(k).map(|v| v as i64)).collect::<Result<Index>>()?);
            theta.push(Complex64::new(parse(d)?, parse(d + 1)?));
            varpis.push(parse(d + 2)?);
        }
        let table = IndexTable::new(indices, varpis, variance_scale(x_star, d), q);
        Self::new(Arc::new(table), theta)
    }
}

/// Precomputed linear map from a noise table to `θ̂` on a fixed design:
/// `θ̂_j = a_j + Σ_l ξ_{key(j),l} w_{j,l}` with `w = (2 x_star)^(-d/2) ψ`.
#[derive(Debug, Clone)]
pub struct CoefficientPlan {
    table: Arc<IndexTable>,
    line_of: Vec<usize>,
    weights: Vec<Vec<Complex64>>,
    signal: Vec<Complex64>,
    prefactor: f64,
}

impl CoefficientPlan {
    pub fn new(design: &SinogramDesign, indices: &[Index], convention: PhaseConvention) -> Result<Self> {
        let q = design.q();
        let x_star = design.x_star();
        let d = design.dimension();
        let prefactor = (2.0 * x_star).powf(-(d as f64) / 2.0);
        let mut line_of = Vec::with_capacity(indices.len());
        let mut weights = Vec::with_capacity(indices.len());
        let mut signal = Vec::with_capacity(indices.len());
        let mut varpis = Vec::with_capacity(indices.len());
        for j in indices {
            let ctx = index_context(j, x_star);
            let line = design
                .line_of(&direction_key(j))
                .ok_or_else(|| Error::MissingObservation { index: j.clone(), l: 1 })?;
            let w: Vec<Complex64> = (1..=q)
                .map(|l| psi_weight(&ctx, q, l, convention).map(|p| p * prefactor))
                .collect::<Result<_>>()?;
            let radon = &design.lines()[line].radon;
            signal.push(radon.iter().zip(&w).map(|(y, wl)| wl * y).sum());
            line_of.push(line);
            weights.push(w);
            varpis.push(varpi(&ctx, q));
        }
        let table = IndexTable::new(indices.to_vec(), varpis, variance_scale(x_star, d), q);
        Ok(Self { table: Arc::new(table), line_of, weights, signal, prefactor })
    }

    pub fn table(&self) -> &Arc<IndexTable> {
        &self.table
    }

    /// Noiseless estimates `a_j`.
    pub fn signal(&self) -> &[Complex64] {
        &self.signal
    }

    /// `θ̂` for one noise table (rows ordered as the design's lines).
    pub fn estimate(&self, noise: &[Vec<f64>]) -> CoeffEstimates {
        let theta = self
            .weights
            .iter()
            .zip(&self.line_of)
            .zip(&self.signal)
            .map(|((w, &line), a)| a + weighted_sum(&noise[line], w))
            .collect();
        CoeffEstimates { table: self.table.clone(), theta_hat: theta }
    }

    pub fn noiseless(&self) -> CoeffEstimates {
        CoeffEstimates { table: self.table.clone(), theta_hat: self.signal.clone() }
    }

    /// `η_j = sqrt(q) Σ_l ξ_{j,l} ψ_{j,l}` for every index.
    pub fn eta(&self, noise: &[Vec<f64>]) -> Vec<Complex64> {
        let scale = (self.table.q as f64).sqrt() / self.prefactor;
        self.weights
            .iter()
            .zip(&self.line_of)
            .map(|(w, &line)| weighted_sum(&noise[line], w) * scale)
            .collect()
    }
}

fn weighted_sum(values: &[f64], weights: &[Complex64]) -> Complex64 {
    values.iter().zip(weights).map(|(v, w)| w * v).sum()
}

/// `θ̂_j` for a single index.
pub fn theta_hat(samples: &SampleSet, ctx: &IndexContext) -> Result<Complex64> {
    let q = samples.q();
    let y = samples.observations(&ctx.j)?;
    let d = ctx.j.len();
    let prefactor = (2.0 * samples.design().x_star()).powf(-(d as f64) / 2.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (l, yl) in y.iter().enumerate() {
        acc += psi_weight(ctx, q, l + 1, PhaseConvention::Conjugate)? * yl;
    }
    Ok(acc * prefactor)
}

/// `θ̂_j` for every index, computed in parallel and returned in input order.
pub fn estimate_all(samples: &SampleSet, indices: &[Index]) -> Result<CoeffEstimates> {
    let x_star = samples.design().x_star();
    let q = samples.q();
    let ctxs: Vec<IndexContext> = indices.iter().map(|j| index_context(j, x_star)).collect();
    let theta: Vec<Complex64> = ctxs.par_iter().map(|c| theta_hat(samples, c)).collect::<Result<_>>()?;
    let varpis = ctxs.iter().map(|c| varpi(c, q)).collect();
    let d = samples.design().dimension();
    let table = IndexTable::new(indices.to_vec(), varpis, variance_scale(x_star, d), q);
    CoeffEstimates::new(Arc::new(table), theta)
}

/// Noise-level estimate `σ̂ = Σ_T |θ̂_j|² / q̃` with `q̃ = κ Σ_T ϖ_j / q`.
pub fn sigma_hat(estimates: &CoeffEstimates, sets: &IndexSets) -> Result<f64> {
    if sets.t_n.is_empty() {
        return Err(Error::Config(format!(
            "the high-frequency set is empty for m = {}; noise estimation needs m >= 2",
            sets.m
        )));
    }
    let mut energy = 0.0;
    let mut weight = 0.0;
    for j in &sets.t_n {
        let i = estimates.table.position(j).ok_or_else(|| Error::MissingCoefficient(j.clone()))?;
        energy += estimates.theta_hat[i].norm_sqr();
        weight += estimates.variance_weight(i);
    }
    Ok(energy / (weight / estimates.q() as f64))
}

/// Discretization bias `b_j = a_j - θ_j` of the noiseless estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasBook {
    pub indices: Vec<Index>,
    pub b: Vec<(f64, f64)>,
    /// `sup_j |b_j|²`.
    pub b_star: f64,
    /// `q² b_star`.
    pub b_tilde: f64,
}

pub fn bias_book(phantom: &Phantom, sets: &IndexSets, q: usize, oracle: &ThetaOracle) -> Result<BiasBook> {
    let design = SinogramDesign::new(phantom, &sets.s_n, q)?;
    let plan = CoefficientPlan::new(&design, &sets.s_n, PhaseConvention::Conjugate)?;
    let mut b = Vec::with_capacity(sets.s_n.len());
    let mut b_star: f64 = 0.0;
    for (j, a) in sets.s_n.iter().zip(plan.signal()) {
        let diff = a - oracle.require(j)?;
        b_star = b_star.max(diff.norm_sqr());
        b.push((diff.re, diff.im));
    }
    Ok(BiasBook {
        indices: sets.s_n.clone(),
        b,
        b_star,
        b_tilde: (q * q) as f64 * b_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obsmodel::{draw_samples, NoiseKind, NoiseModel};
    use crate::quadrature::Rule;
    use std::f64::consts::PI;

    #[test]
    fn index_set_sizes() {
        let s = IndexSets::new(2, 8).unwrap();
        assert_eq!(s.r_n(), 289);
        // floor(sqrt 8) + 1 = 3, so T = {3..8}^2
        assert_eq!(s.t_n.len(), 36);
        assert!(s.t_n.iter().all(|j| s.s_n.contains(j)));
        assert_eq!(high_band_start(16), 5);
        assert_eq!(high_band_start(15), 4);
        assert!(IndexSets::new(2, 1).unwrap().t_n.is_empty());
    }

    #[test]
    fn zero_frequency_weight_is_cell_width() {
        let ctx = index_context(&[0, 0], 1.0);
        for l in 1..=8 {
            let p = psi_weight(&ctx, 8, l, PhaseConvention::Conjugate).unwrap();
            assert_eq!(p, Complex64::new(0.5, 0.0));
        }
        assert_eq!(varpi(&ctx, 34), 16.0);
    }

    #[test]
    fn weight_modulus_is_constant_across_cells() {
        let ctx = index_context(&[3, -2], 1.0);
        let m0 = psi_weight(&ctx, 34, 1, PhaseConvention::Conjugate).unwrap().norm();
        for l in 2..=34 {
            let m = psi_weight(&ctx, 34, l, PhaseConvention::Conjugate).unwrap().norm();
            assert!((m - m0).abs() < 1e-15);
        }
        assert!(psi_weight(&ctx, 34, 0, PhaseConvention::Conjugate).is_err());
    }

    #[test]
    fn weight_matches_cell_quadrature() {
        for j in [[1, 0], [2, 3], [-4, 1], [5, 5]] {
            let ctx = index_context(&j, 1.0);
            let q = 34;
            let grid = crate::obsmodel::partition(&ctx, q).unwrap();
            let w = ctx.frequency();
            for l in [1, 7, 34] {
                let rule = Rule::gauss_legendre(64, grid[l - 1], grid[l]);
                let re = rule.integrate(|t| (w * t).cos());
                let im = rule.integrate(|t| -(w * t).sin());
                let p = psi_weight(&ctx, q, l, PhaseConvention::Conjugate).unwrap();
                assert!((p - Complex64::new(re, im)).norm() < 1e-12, "{j:?} l={l}");
            }
        }
    }

    #[test]
    fn varpi_two_formulas_agree() {
        for j in [[1, 0], [1, 1], [3, 8], [8, 8], [-7, 2]] {
            let ctx = index_context(&j, 1.0);
            let q = 34;
            let a = varpi(&ctx, q);
            let b = (q * q) as f64 * upsilon(&ctx, q, PhaseConvention::Conjugate).norm_sqr();
            assert!((a - b).abs() <= 1e-12 * a);
            assert!(a > 0.0 && a <= 4.0 * ctx.half_width * ctx.half_width * (1.0 + 1e-15));
        }
    }

    #[test]
    fn sinc_range_guard() {
        let sets = IndexSets::new(2, 8).unwrap();
        assert!(check_sinc_range(&sets.s_n, 1.0, 34).is_ok());
        assert!(check_sinc_range(&sets.s_n, 1.0, 16).is_err());
    }

    #[test]
    fn zero_phantom_noiseless_estimates_vanish() {
        let s = Phantom::zero(1.0, 2).unwrap();
        let sets = IndexSets::new(2, 4).unwrap();
        let samples = draw_samples(&s, &sets.s_n, 18, &NoiseModel::new(NoiseKind::Gaussian, 0.0).unwrap(), 0).unwrap();
        let est = estimate_all(&samples, &sets.s_n).unwrap();
        assert!(est.theta_hat().iter().all(|t| t.norm() == 0.0));
        assert_eq!(sigma_hat(&est, &sets).unwrap(), 0.0);
    }

    #[test]
    fn conjugate_symmetry_of_estimates() {
        let s = Phantom::desk_default();
        let sets = IndexSets::new(2, 5).unwrap();
        let samples = draw_samples(&s, &sets.s_n, 22, &NoiseModel::new(NoiseKind::Laplace, 0.05).unwrap(), 2).unwrap();
        let est = estimate_all(&samples, &sets.s_n).unwrap();
        for j in &sets.s_n {
            let neg: Index = j.iter().map(|v| -v).collect();
            let d = est.get(j).unwrap() - est.get(&neg).unwrap().conj();
            assert!(d.norm() < 1e-13, "{j:?}");
        }
    }

    #[test]
    fn plan_matches_direct_estimates() {
        let s = Phantom::desk_default();
        let sets = IndexSets::new(2, 4).unwrap();
        let samples = draw_samples(&s, &sets.s_n, 18, &NoiseModel::new(NoiseKind::Gaussian, 0.05).unwrap(), 5).unwrap();
        let direct = estimate_all(&samples, &sets.s_n).unwrap();
        let plan = CoefficientPlan::new(samples.design(), &sets.s_n, PhaseConvention::Conjugate).unwrap();
        let fast = plan.estimate(samples.noise_table());
        for (a, b) in direct.theta_hat().iter().zip(fast.theta_hat()) {
            assert!((a - b).norm() < 1e-13);
        }
        assert_eq!(direct.table().varpi(), fast.table().varpi());
    }

    #[test]
    fn coefficients_converge_to_oracle() {
        let s = Phantom::desk_default();
        let sets = IndexSets::new(2, 4).unwrap();
        let oracle = ThetaOracle::build(&s, 4);
        let mut prev = f64::INFINITY;
        for q in [64, 128, 256, 1024] {
            let design = SinogramDesign::new(&s, &sets.s_n, q).unwrap();
            let plan = CoefficientPlan::new(&design, &sets.s_n, PhaseConvention::Conjugate).unwrap();
            let err = sets
                .s_n
                .iter()
                .zip(plan.signal())
                .map(|(j, a)| (a - oracle.get(j).unwrap()).norm())
                .fold(0.0, f64::max);
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-3, "{prev}");
    }

    #[test]
    fn noiseless_bias_is_a_cell_phase_shift() {
        // sampling at right cell endpoints multiplies θ_j by exp(±iβ̌) sin(β̌)/β̌
        let s = Phantom::desk_default();
        let sets = IndexSets::new(2, 4).unwrap();
        let oracle = ThetaOracle::build(&s, 4);
        let q = 256;
        let design = SinogramDesign::new(&s, &sets.s_n, q).unwrap();
        let plan = CoefficientPlan::new(&design, &sets.s_n, PhaseConvention::Conjugate).unwrap();
        for (j, a) in sets.s_n.iter().zip(plan.signal()) {
            let ctx = index_context(j, 1.0);
            let b = ctx.beta_check(q);
            let sinc = if b == 0.0 { 1.0 } else { b.sin() / b };
            let predicted = oracle.get(j).unwrap() * Complex64::from_polar(sinc, ctx.orientation * b);
            assert!((a - predicted).norm() < 1e-7, "{j:?}: {}", (a - predicted).norm());
        }
    }

    #[test]
    fn bias_book_zero_phantom() {
        let s = Phantom::zero(1.0, 2).unwrap();
        let sets = IndexSets::new(2, 3).unwrap();
        let oracle = ThetaOracle::build(&s, 3);
        let book = bias_book(&s, &sets, 14, &oracle).unwrap();
        assert_eq!(book.b_star, 0.0);
        assert!(book.b.iter().all(|b| *b == (0.0, 0.0)));
    }

    #[test]
    fn bias_bound_and_scaling() {
        let s = Phantom::desk_default();
        let sets = IndexSets::new(2, 8).unwrap();
        let oracle = ThetaOracle::build(&s, 8);
        let lip = s.regularity().lipschitz;
        let mut tildes = Vec::new();
        for q in [64, 128, 256] {
            let book = bias_book(&s, &sets, q, &oracle).unwrap();
            // 16 ř (2 x_star)^(2 - d/2) / q with d = 2, x_star = 1
            let bound = 16.0 * lip * 2.0 / q as f64;
            assert!(book.b_star.sqrt() <= bound + 1e-12, "q = {q}");
            tildes.push(book.b_tilde);
        }
        assert!(tildes[2] <= 2.0 * tildes[0], "{tildes:?}");
    }

    #[test]
    fn csv_round_trip() {
        let s = Phantom::desk_default();
        let sets = IndexSets::new(2, 3).unwrap();
        let samples = draw_samples(&s, &sets.s_n, 14, &NoiseModel::new(NoiseKind::Gaussian, 0.05).unwrap(), 1).unwrap();
        let est = estimate_all(&samples, &sets.s_n).unwrap();
        let mut buf = Vec::new();
        est.write_csv(&mut buf).unwrap();
        let back = CoeffEstimates::read_csv(buf.as_slice(), 14, 1.0).unwrap();
        assert_eq!(back, est);
    }

    #[test]
    fn beta_check_formula() {
        let ctx = index_context(&[2, 2], 1.0);
        // π (1 + 1) (1/√2) |j| / q with |j| = 2√2
        assert!((ctx.beta_check(34) - PI * 2.0 * 2.0 / 34.0).abs() < 1e-15);
    }
}
