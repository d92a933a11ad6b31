//! Reference Fourier coefficients of a phantom in the basis
//! `Φ_j(x) = (2 x_star)^(-d/2) exp(i π j·x / x_star)` on `[-x_star, x_star]^d`.
//!
//! Coefficients are taken against the conjugate basis, `θ_j = ∫ S conj(Φ_j)`,
//! so that `S = Σ θ_j Φ_j`. Two independent routes are provided: a radial
//! reduction to a one-dimensional integral (fast, any `d`) and a direct polar
//! quadrature over each bump's disc (`d = 2` only).

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::phantoms::{advance, moment_constant, Bump, Phantom};
use crate::quadrature::Rule;
use crate::{Error, Index, Result};

/// All `j` with `|j_l| <= radius` in lexicographic order.
pub fn lattice_box(dimension: usize, radius: i64) -> Vec<Index> {
    let side = (2 * radius + 1) as usize;
    let mut counter = vec![0usize; dimension];
    let mut out = Vec::with_capacity(side.pow(dimension as u32));
    loop {
        out.push(counter.iter().map(|&c| c as i64 - radius).collect());
        if !advance(&mut counter, side) {
            break;
        }
    }
    out
}

fn wave_vector(j: &[i64], x_star: f64) -> Vec<f64> {
    j.iter().map(|&v| v as f64 * PI / x_star).collect()
}

fn normalizer(x_star: f64, d: usize) -> f64 {
    (2.0 * x_star).powf(-(d as f64) / 2.0)
}

/// Angular rule for the radial reduction. Six 32-point panels resolve the
/// oscillation `cos(ρ sin φ)` to round-off for `ρ` up to a few hundred.
fn slice_rule() -> Rule {
    Rule::composite(6, 32, -FRAC_PI_2, FRAC_PI_2)
}

/// `∫ bump(x) exp(-i k·x) dx`, reduced along `k` to
/// `a r^d c(p,d) exp(-i k·c) ∫ cos^(2p+d) φ cos(r|k| sin φ) dφ`.
fn bump_transform(b: &Bump, d: usize, k: &[f64], rule: &Rule) -> Complex64 {
    let knorm = k.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rho = b.radius * knorm;
    let power = (2 * b.exponent as usize + d) as i32;
    let radial = rule.integrate(|phi| phi.cos().powi(power) * (rho * phi.sin()).cos());
    let phase: f64 = k.iter().zip(&b.center).map(|(kv, c)| kv * c).sum();
    b.amplitude
        * b.radius.powi(d as i32)
        * moment_constant(b.exponent, d)
        * radial
        * Complex64::from_polar(1.0, -phase)
}

/// `θ_j` through the radial reduction.
pub fn reference_theta(phantom: &Phantom, j: &[i64]) -> Complex64 {
    reference_theta_with(phantom, j, &slice_rule())
}

fn reference_theta_with(phantom: &Phantom, j: &[i64], rule: &Rule) -> Complex64 {
    let d = phantom.dimension();
    let k = wave_vector(j, phantom.x_star());
    let sum: Complex64 = phantom.bumps().iter().map(|b| bump_transform(b, d, &k, rule)).sum();
    sum * normalizer(phantom.x_star(), d)
}

/// `θ_j` by direct quadrature over each bump's disc: `radial` Gauss–Legendre
/// nodes in the radius times `angular` trapezoid nodes in the angle.
pub fn polar_theta(phantom: &Phantom, j: &[i64], radial: usize, angular: usize) -> Result<Complex64> {
    if phantom.dimension() != 2 {
        return Err(Error::Unsupported(format!(
            "polar coefficient quadrature needs d = 2 (got d = {})",
            phantom.dimension()
        )));
    }
    let k = wave_vector(j, phantom.x_star());
    let mut total = Complex64::new(0.0, 0.0);
    for b in phantom.bumps() {
        let rule = Rule::gauss_legendre(radial, 0.0, b.radius);
        let dphi = 2.0 * PI / angular as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (&rho, &w) in rule.nodes.iter().zip(&rule.weights) {
            let profile = (1.0 - rho * rho / (b.radius * b.radius)).powi(b.exponent as i32);
            let mut ring = Complex64::new(0.0, 0.0);
            for a in 0..angular {
                let phi = a as f64 * dphi;
                let x = b.center[0] + rho * phi.cos();
                let y = b.center[1] + rho * phi.sin();
                ring += Complex64::from_polar(1.0, -(k[0] * x + k[1] * y));
            }
            acc += ring * (w * rho * profile * dphi);
        }
        total += acc * b.amplitude;
    }
    Ok(total * normalizer(phantom.x_star(), 2))
}

/// `‖S‖²` over the cube by composite tensor Gauss–Legendre quadrature.
pub fn norm_sq(phantom: &Phantom) -> f64 {
    let d = phantom.dimension();
    if phantom.bumps().is_empty() {
        return 0.0;
    }
    // about 2.6e5 nodes in total, at least 32 per axis
    let per_axis = ((262_144f64).powf(1.0 / d as f64).floor() as usize).max(32);
    let panels = (per_axis / 8).max(1);
    let x = phantom.x_star();
    let rule = Rule::composite(panels, 8, -x, x);
    cube_integral(&rule, d, |p| {
        let v = phantom.eval(p);
        v * v
    })
}

/// Tensor-product integral of `f` using `rule` on every axis.
pub(crate) fn cube_integral(rule: &Rule, d: usize, f: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
    let n = rule.len();
    // parallel over the first axis, fixed order within each slab
    let slabs: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut counter = vec![0usize; d - 1];
            let mut point = vec![0.0; d];
            point[0] = rule.nodes[first];
            let mut acc = 0.0;
            loop {
                let mut w = rule.weights[first];
                for (axis, &c) in counter.iter().enumerate() {
                    point[axis + 1] = rule.nodes[c];
                    w *= rule.weights[c];
                }
                acc += w * f(&point);
                if !advance(&mut counter, n) {
                    break;
                }
            }
            acc
        })
        .collect();
    crate::stats::pairwise_sum(&slabs)
}

/// Upper bound `x_star^(2d) τ / (π^(2d) m^(d/2))` on the energy of the
/// coefficients with every `|j_l| > floor(sqrt(m))`, where `τ` is the squared
/// norm of the mixed partial derivative.
pub fn corner_tail_bound(x_star: f64, dimension: usize, m: usize, mixed_deriv_norm: f64) -> f64 {
    let d = dimension as i32;
    x_star.powi(2 * d) / (PI.powi(2 * d) * (m as f64).powf(d as f64 / 2.0)) * mixed_deriv_norm
}

/// `θ_j` for every `j` in the box `|j_l| <= cutoff`, together with the
/// energy the box leaves out.
#[derive(Debug, Clone)]
pub struct ThetaOracle {
    cutoff: i64,
    dimension: usize,
    values: HashMap<Index, Complex64>,
    norm_sq: f64,
    captured: f64,
}

impl ThetaOracle {
    pub fn build(phantom: &Phantom, cutoff: i64) -> Self {
        let d = phantom.dimension();
        let indices = lattice_box(d, cutoff);
        let rule = slice_rule();
        let thetas: Vec<Complex64> =
            indices.par_iter().map(|j| reference_theta_with(phantom, j, &rule)).collect();
        let energies: Vec<f64> = thetas.iter().map(|t| t.norm_sqr()).collect();
        let captured = crate::stats::pairwise_sum(&energies);
        Self {
            cutoff,
            dimension: d,
            values: indices.into_iter().zip(thetas).collect(),
            norm_sq: norm_sq(phantom),
            captured,
        }
    }

    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn get(&self, j: &[i64]) -> Option<Complex64> {
        self.values.get(j).copied()
    }

    pub fn require(&self, j: &[i64]) -> Result<Complex64> {
        self.get(j).ok_or_else(|| Error::MissingCoefficient(j.to_vec()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Index, &Complex64)> {
        self.values.iter()
    }

    /// `‖S‖²` by spatial quadrature.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// `Σ |θ_j|²` over the box.
    pub fn captured_energy(&self) -> f64 {
        self.captured
    }

    /// Energy outside the box, `‖S‖² - Σ_box |θ_j|²`, clamped at zero.
    pub fn residual_energy(&self) -> f64 {
        (self.norm_sq - self.captured).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(p: u32, c: [f64; 2], r: f64) -> Phantom {
        Phantom::new(vec![Bump { center: c.to_vec(), radius: r, amplitude: 1.0, exponent: p }], 1.0, 2).unwrap()
    }

    #[test]
    fn lattice_box_size_and_order() {
        let b = lattice_box(2, 2);
        assert_eq!(b.len(), 25);
        assert_eq!(b[0], vec![-2, -2]);
        assert_eq!(b[24], vec![2, 2]);
        assert_eq!(lattice_box(3, 1).len(), 27);
    }

    #[test]
    fn zero_frequency_is_the_mean() {
        // ∫ (1 - |x|^2/r^2)^p over a disc = π r^2 / (p + 1)
        let s = single(3, [0.1, -0.2], 0.5);
        let expected = PI * 0.25 / 4.0 / 2.0;
        assert!((reference_theta(&s, &[0, 0]).re - expected).abs() < 1e-14);
        assert!(reference_theta(&s, &[0, 0]).im.abs() < 1e-15);
    }

    #[test]
    fn reduction_matches_polar_quadrature() {
        let s = Phantom::desk_default();
        for j in lattice_box(2, 4) {
            let a = reference_theta(&s, &j);
            let b = polar_theta(&s, &j, 128, 128).unwrap();
            assert!((a - b).norm() < 1e-12, "{j:?}: {a} vs {b}");
        }
    }

    #[test]
    fn conjugate_symmetry_for_real_phantom() {
        let s = Phantom::desk_default();
        for j in [[1, 2], [3, -1], [0, 5]] {
            let a = reference_theta(&s, &j);
            let b = reference_theta(&s, &[-j[0], -j[1]]);
            assert!((a - b.conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn norm_of_single_bump() {
        // ∫ (1-ρ^2/r^2)^(2p) over the disc = π r^2/(2p+1)
        let s = single(3, [0.0, 0.0], 0.6);
        let expected = PI * 0.36 / 7.0;
        assert!((norm_sq(&s) - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn parseval_on_a_large_box() {
        let s = Phantom::desk_default();
        let oracle = ThetaOracle::build(&s, 24);
        let rel = oracle.residual_energy() / oracle.norm_sq();
        assert!(rel < 1e-4, "{rel}");
        assert!(oracle.captured_energy() <= oracle.norm_sq() * (1.0 + 1e-9));
    }

    #[test]
    fn corner_tail_bound_holds() {
        let s = Phantom::desk_default();
        let tau = s.regularity().mixed_deriv_norm;
        let oracle = ThetaOracle::build(&s, 32);
        for m in [4usize, 8, 16] {
            let lo = (m as f64).sqrt().floor() as i64 + 1;
            let energy: f64 = oracle
                .iter()
                .filter(|(j, _)| j.iter().all(|v| v.abs() >= lo))
                .map(|(_, t)| t.norm_sqr())
                .sum();
            assert!(energy <= corner_tail_bound(1.0, 2, m, tau), "m = {m}");
        }
    }

    #[test]
    fn polar_rejects_three_dimensions() {
        let s = Phantom::zero(1.0, 3).unwrap();
        assert!(matches!(polar_theta(&s, &[0, 0, 0], 8, 8), Err(Error::Unsupported(_))));
    }

    #[test]
    fn three_dimensional_zero_frequency() {
        // ∫ (1-|x|^2)^2 over the unit ball in R^3 = 4π * (1/3 - 2/5 + 1/7)
        let s = Phantom::new(
            vec![Bump { center: vec![0.0, 0.0, 0.0], radius: 1.0, amplitude: 1.0, exponent: 2 }],
            1.0,
            3,
        )
        .unwrap();
        let expected = 4.0 * PI * (1.0 / 3.0 - 2.0 / 5.0 + 1.0 / 7.0) * 8f64.powf(-0.5);
        assert!((reference_theta(&s, &[0, 0, 0]).re - expected).abs() < 1e-13);
    }
}
