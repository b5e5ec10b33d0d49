//! Spectral analysis on the Boolean cube `{-1, 1}^n`: Walsh-Fourier tools,
//! heat and fractional heat semigroups, one-sided stable subordination, a
//! positivity-preserving kernel modification, and numerical checks of the
//! associated L1 and Lp inequalities together with their counterexamples.

pub mod counterexamples;
pub mod cube;
pub mod error;
pub mod families;
pub mod inequalities;
pub mod kernel;
pub mod quad;
pub mod report;
pub mod search;
pub mod subordination;
pub mod suites;

pub use cube::{CubeFunction, DegreeMultiplier, Spectrum};
pub use error::{Error, Result};
pub use report::{Comparison, Status, VerificationReport};
pub use subordination::StableDensityEvaluator;
