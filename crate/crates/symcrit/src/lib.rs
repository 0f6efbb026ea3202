//! Numerical tooling around the symbol-based invariance criterion for Itô
//! processes: the criterion tests a candidate probability law μ against the
//! identity ∫ e^{ix'ξ} p(x,ξ) μ(dx) = 0 built from the probabilistic symbol
//! p of the process.
//!
//! The crate provides
//! - Lévy triplets and Lévy–Khintchine exponents ([`levy`]),
//! - symbol construction from differential characteristics or SDE
//!   coefficients ([`symbol`]),
//! - candidate measures with weighted Fourier transforms ([`measure`]),
//! - the criterion residual engine and specialized corollary checks
//!   ([`criterion`]),
//! - Euler–Maruyama simulation of the underlying SDEs, with Monte Carlo
//!   estimation of the symbol from its small-time definition ([`simulate`]),
//! - scale/speed-density machinery for one-dimensional diffusions
//!   ([`diffusion`]),
//! - a derivative-free fitting solver for parametric invariant-law
//!   candidates ([`fit`]),
//! - the TOML process-spec format and coefficient expression grammar used by
//!   the CLI ([`spec`], [`expr`]).

// `!(x > 0.0)`-style guards double as NaN rejection; Arc<dyn Fn> coefficient
// fields are the crate's coefficient-passing idiom
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::type_complexity)]

pub mod criterion;
pub mod diffusion;
pub mod error;
pub mod expr;
pub mod fit;
pub mod levy;
pub mod measure;
pub mod quad;
pub mod simulate;
pub mod spec;
pub mod symbol;

pub use criterion::{
    check_invariance, residual, residual1, residual_profile, CriterionConfig, CriterionReport,
    Verdict,
};
pub use error::{Error, Result};
pub use levy::{stable_constant, JumpMeasure, LevyTriplet};
pub use measure::{Measure, TransformValue, WeightFn};
pub use quad::QuadConfig;
pub use symbol::{Coeff1, Convention, DifferentialCharacteristics, MatrixMap, Symbol, SymbolForm};
