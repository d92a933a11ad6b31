//! Order-stable reductions for Monte Carlo output.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Pairwise (cascade) summation. The result depends only on the order of
/// `values`, never on how work was scheduled upstream.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, se: f64::NAN };
        }
        let mean = pairwise_sum(values) / n as f64;
        if n == 1 {
            return Self { mean, se: 0.0 };
        }
        let centered: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = pairwise_sum(&centered) / (n - 1) as f64;
        Self { mean, se: (var / n as f64).sqrt() }
    }

    /// `|mean - target| <= k * se`, with a tiny absolute floor for the
    /// degenerate zero-variance case.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se + 1e-12 * (1.0 + target.abs())
    }
}

/// Mean of complex samples; `se` is `sqrt(E|X - EX|^2 / n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMeanSe {
    pub mean: Complex64,
    pub se: f64,
}

impl ComplexMeanSe {
    pub fn from_samples(values: &[Complex64]) -> Self {
        let re: Vec<f64> = values.iter().map(|z| z.re).collect();
        let im: Vec<f64> = values.iter().map(|z| z.im).collect();
        let re = MeanSe::from_samples(&re);
        let im = MeanSe::from_samples(&im);
        Self {
            mean: Complex64::new(re.mean, im.mean),
            se: (re.se * re.se + im.se * im.se).sqrt(),
        }
    }
}

/// Median of a slice (average of the two middle values for even length).
pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => sorted[n / 2],
        _ => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pairwise_matches_naive_sum_closely() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..10_000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-9);
    }

    #[test]
    fn constant_samples_have_zero_se() {
        let m = MeanSe::from_samples(&[2.0; 50]);
        assert_eq!(m.mean, 2.0);
        assert_eq!(m.se, 0.0);
        assert!(m.within(2.0, 3.0));
    }

    #[test]
    fn se_agrees_with_split_half_estimate() {
        // SE from the full sample vs. the spread of two half-sample means.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut ratios = Vec::new();
        for _ in 0..200 {
            let v: Vec<f64> = (0..400).map(|_| rng.random_range(0.0..1.0)).collect();
            let full = MeanSe::from_samples(&v);
            let a = MeanSe::from_samples(&v[..200]).mean;
            let b = MeanSe::from_samples(&v[200..]).mean;
            // Var(a - b) = 4 * SE^2 for halves of equal size.
            ratios.push(((a - b) * (a - b) / 4.0, full.se * full.se));
        }
        let split: f64 = ratios.iter().map(|r| r.0).sum::<f64>() / ratios.len() as f64;
        let full: f64 = ratios.iter().map(|r| r.1).sum::<f64>() / ratios.len() as f64;
        assert!((split.sqrt() / full.sqrt() - 1.0).abs() < 0.2);
    }

    #[test]
    fn median_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
