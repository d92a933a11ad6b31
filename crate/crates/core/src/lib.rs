//! Adaptive model selection for a function observed through its noisy Radon
//! transform.
//!
//! The pipeline is: a compactly supported [`phantoms::Phantom`] is sampled along
//! projection lines ([`obsmodel`]), its trigonometric Fourier coefficients are
//! estimated from the sinogram ([`estimator`]), a Pinsker weight is chosen from a
//! finite family by minimizing a penalized cost ([`selector`]), and a Monte Carlo
//! engine measures the quadratic risk of every candidate against the selected one
//! ([`riskharness`]). The [`cli`] module wires these into reproducible runs driven
//! by a single JSON config.

pub mod cli;
pub mod error;
pub mod estimator;
pub mod fourier;
pub mod obsmodel;
pub mod phantoms;
pub mod properties;
pub mod quadrature;
pub mod riskharness;
pub mod selector;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Integer frequency index `j` in `Z^d`.
pub type Index = Vec<i64>;
