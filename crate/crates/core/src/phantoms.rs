//! Test images with closed-form Radon transforms.
//!
//! A phantom is a finite sum of radial polynomial bumps
//! `a * (1 - |x - c|^2 / r^2)^p` supported on the ball `|x - c| <= r`. The
//! hyperplane integral of one bump at signed distance `s` from its center is
//! `a * r^(d-1) * c(p, d) * (1 - s^2/r^2)^(p + (d-1)/2)`, where `c(p, d)` is
//! the integral of `(1 - |u|^2)^p` over the unit ball of dimension `d - 1`.

use serde::{Deserialize, Serialize};

use crate::quadrature::Rule;
use crate::{Error, Result};

/// Tolerance on `|direction| = 1`.
const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
    pub exponent: u32,
}

impl Bump {
    fn profile(&self, dist_sq: f64) -> f64 {
        let u = 1.0 - dist_sq / (self.radius * self.radius);
        if u <= 0.0 {
            0.0
        } else {
            self.amplitude * u.powi(self.exponent as i32)
        }
    }

    fn dist_sq(&self, x: &[f64]) -> f64 {
        self.center.iter().zip(x).map(|(c, v)| (v - c) * (v - c)).sum()
    }

    /// Largest gradient norm of the radial profile. With `u = rho/r` the
    /// gradient magnitude is `2|a|p/r * u (1-u^2)^(p-1)`, maximal at
    /// `u^2 = 1/(2p-1)`.
    pub fn max_gradient(&self) -> f64 {
        let p = self.exponent as f64;
        let u2 = 1.0 / (2.0 * p - 1.0);
        2.0 * self.amplitude.abs() * p / self.radius * u2.sqrt() * (1.0 - u2).powf(p - 1.0)
    }
}

/// Lipschitz bound and squared L2 norm of the mixed partial derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityConstants {
    pub lipschitz: f64,
    pub mixed_deriv_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phantom {
    bumps: Vec<Bump>,
    x_star: f64,
    dimension: usize,
}

impl Phantom {
    pub fn new(bumps: Vec<Bump>, x_star: f64, dimension: usize) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::Input(format!("dimension must be >= 2, got {dimension}")));
        }
        if !(x_star > 0.0 && x_star.is_finite()) {
            return Err(Error::Input(format!("x_star must be positive, got {x_star}")));
        }
        for (i, b) in bumps.iter().enumerate() {
            if b.center.len() != dimension {
                return Err(Error::Input(format!(
                    "bump {i}: center has {} components, expected {dimension}",
                    b.center.len()
                )));
            }
            if !(b.radius > 0.0) {
                return Err(Error::Input(format!("bump {i}: radius must be positive")));
            }
            if b.exponent < 2 {
                return Err(Error::Input(format!("bump {i}: exponent must be >= 2")));
            }
            if !b.amplitude.is_finite() {
                return Err(Error::Input(format!("bump {i}: amplitude must be finite")));
            }
            let c = b.center.iter().map(|v| v * v).sum::<f64>().sqrt();
            if c + b.radius > x_star {
                return Err(Error::Input(format!(
                    "bump {i}: |center| + radius = {} exceeds x_star = {x_star}",
                    c + b.radius
                )));
            }
        }
        Ok(Self { bumps, x_star, dimension })
    }

    /// Two-bump planar phantom used by the default run configuration.
    pub fn desk_default() -> Self {
        Self::new(
            vec![
                Bump { center: vec![0.2, 0.1], radius: 0.5, amplitude: 1.0, exponent: 3 },
                Bump { center: vec![-0.4, -0.2], radius: 0.3, amplitude: -0.6, exponent: 3 },
            ],
            1.0,
            2,
        )
        .expect("default phantom is valid")
    }

    pub fn zero(x_star: f64, dimension: usize) -> Result<Self> {
        Self::new(Vec::new(), x_star, dimension)
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }

    pub fn x_star(&self) -> f64 {
        self.x_star
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for b in &mut out.bumps {
            b.amplitude *= factor;
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.bumps.iter().map(|b| b.profile(b.dist_sq(x))).sum()
    }

    /// Radon transform `R(S)(direction, offset)`; `direction` must be a unit
    /// vector.
    pub fn exact_radon(&self, direction: &[f64], offset: f64) -> Result<f64> {
        self.check_direction(direction)?;
        Ok(self.radon_unchecked(direction, offset))
    }

    pub(crate) fn radon_unchecked(&self, direction: &[f64], offset: f64) -> f64 {
        if offset.abs() >= self.x_star {
            return 0.0;
        }
        let half_dim = (self.dimension as f64 - 1.0) / 2.0;
        self.bumps
            .iter()
            .map(|b| {
                let proj: f64 = direction.iter().zip(&b.center).map(|(n, c)| n * c).sum();
                let s = offset - proj;
                let u = 1.0 - s * s / (b.radius * b.radius);
                if u <= 0.0 {
                    return 0.0;
                }
                let c = moment_constant(b.exponent, self.dimension);
                b.amplitude
                    * b.radius.powi(self.dimension as i32 - 1)
                    * c
                    * u.powf(b.exponent as f64 + half_dim)
            })
            .sum()
    }

    /// Brute-force line integral for `d = 2`: composite midpoint rule along
    /// the chord of the support disc, split at every bump-chord endpoint so
    /// each segment has a smooth integrand. `cells` cells per segment.
    pub fn radon_quadrature_oracle(&self, direction: &[f64], offset: f64, cells: usize) -> Result<f64> {
        if self.dimension != 2 {
            return Err(Error::Unsupported(format!(
                "quadrature oracle is implemented for d = 2 only (got d = {})",
                self.dimension
            )));
        }
        if cells < 16 {
            return Err(Error::Input(format!("cells must be >= 16, got {cells}")));
        }
        self.check_direction(direction)?;
        let half_chord_sq = self.x_star * self.x_star - offset * offset;
        if half_chord_sq <= 0.0 {
            return Ok(0.0);
        }
        let half_chord = half_chord_sq.sqrt();
        let normal = [-direction[1], direction[0]];
        let mut breaks = vec![-half_chord, half_chord];
        for b in &self.bumps {
            let s = offset - (direction[0] * b.center[0] + direction[1] * b.center[1]);
            let w2 = b.radius * b.radius - s * s;
            if w2 > 0.0 {
                let tc = normal[0] * b.center[0] + normal[1] * b.center[1];
                let w = w2.sqrt();
                for t in [tc - w, tc + w] {
                    if t > -half_chord && t < half_chord {
                        breaks.push(t);
                    }
                }
            }
        }
        breaks.sort_by(|a, b| a.total_cmp(b));
        let mut total = 0.0;
        for seg in breaks.windows(2) {
            let (lo, hi) = (seg[0], seg[1]);
            let h = (hi - lo) / cells as f64;
            if h <= 0.0 {
                continue;
            }
            let mut acc = 0.0;
            for k in 0..cells {
                let t = lo + (k as f64 + 0.5) * h;
                let x = [
                    offset * direction[0] + t * normal[0],
                    offset * direction[1] + t * normal[1],
                ];
                acc += self.eval(&x);
            }
            total += acc * h;
        }
        Ok(total)
    }

    /// Regularity metadata. `lipschitz` sums per-bump gradient maxima (an
    /// upper bound). `mixed_deriv_norm` is a 64^d tensor Gauss–Legendre
    /// estimate over the cube `[-x_star, x_star]^d`.
    pub fn regularity(&self) -> RegularityConstants {
        let lipschitz = self.bumps.iter().map(Bump::max_gradient).sum();
        if self.bumps.is_empty() {
            return RegularityConstants { lipschitz, mixed_deriv_norm: 0.0 };
        }
        let rule = Rule::gauss_legendre(64, -self.x_star, self.x_star);
        let d = self.dimension;
        let mut counter = vec![0usize; d];
        let mut point = vec![0.0; d];
        let mut total = 0.0;
        loop {
            let mut w = 1.0;
            for (axis, &k) in counter.iter().enumerate() {
                point[axis] = rule.nodes[k];
                w *= rule.weights[k];
            }
            let v = self.mixed_partial(&point);
            total += w * v * v;
            if !advance(&mut counter, rule.len()) {
                break;
            }
        }
        RegularityConstants { lipschitz, mixed_deriv_norm: total }
    }

    /// `∂^d S / ∂x_1 … ∂x_d` at `x`. For `u = 1 - |x-c|^2/r^2` each partial
    /// contributes a factor `-2 (x_l - c_l) / r^2` and lowers the power of `u`.
    pub fn mixed_partial(&self, x: &[f64]) -> f64 {
        let d = self.dimension as u32;
        self.bumps
            .iter()
            .map(|b| {
                let r2 = b.radius * b.radius;
                let u = 1.0 - b.dist_sq(x) / r2;
                if u <= 0.0 || b.exponent < d {
                    return 0.0;
                }
                let falling: f64 = (0..d).map(|i| (b.exponent - i) as f64).product();
                let factors: f64 = x
                    .iter()
                    .zip(&b.center)
                    .map(|(v, c)| -2.0 * (v - c) / r2)
                    .product();
                b.amplitude * falling * u.powi((b.exponent - d) as i32) * factors
            })
            .sum()
    }

    fn check_direction(&self, direction: &[f64]) -> Result<()> {
        if direction.len() != self.dimension {
            return Err(Error::Input(format!(
                "direction has {} components, expected {}",
                direction.len(),
                self.dimension
            )));
        }
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::Input(format!("direction is not a unit vector (|v| = {norm})")));
        }
        Ok(())
    }
}

/// Odometer step over `{0..n}^d`; returns `false` after the last tuple.
pub(crate) fn advance(counter: &mut [usize], n: usize) -> bool {
    for c in counter.iter_mut().rev() {
        *c += 1;
        if *c < n {
            return true;
        }
        *c = 0;
    }
    false
}

/// `∫_{|u| <= 1} (1 - |u|^2)^p du` over the unit ball of dimension `d - 1`.
///
/// In polar form this is `A_k * ∫_0^1 (1-ρ^2)^p ρ^(k-1) dρ
/// = A_k / 2 * B(k/2, p+1)` with `k = d - 1` and `A_k` the area of the unit
/// sphere in `R^k`; for integer `p`, `B(a, p+1) = p! / (a (a+1) … (a+p))`.
pub fn moment_constant(exponent: u32, dimension: usize) -> f64 {
    let k = dimension - 1;
    let a = k as f64 / 2.0;
    let mut beta = 1.0;
    for i in 0..=exponent {
        beta /= a + i as f64;
    }
    for i in 1..=exponent {
        beta *= i as f64;
    }
    sphere_area(k) / 2.0 * beta
}

/// Surface area of the unit sphere `S^(k-1)` in `R^k`.
fn sphere_area(k: usize) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 2.0) * sphere_area(k - 2),
    }
}
