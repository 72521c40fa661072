//! Multivariate matrix-exponential and phase-type distribution toolkit.
//!
//! The crate turns proper rational multivariate Laplace transforms into
//! reward-form (Kulkarni-type) matrix representations, decides whether a
//! denominator is compatible with a Markovian reward representation, and
//! verifies everything against exact algebra and Monte Carlo simulation.
//!
//! Module map:
//! - [`ratfun`]: exact multivariate polynomials and rational transforms over Q.
//! - [`exact`]: dense rational matrices (determinants, ranks, principal minors).
//! - [`realize`]: the constructive realization pipeline from a rational
//!   transform to a reward-form representation.
//! - [`kulkarni`]: reward representations, projections, validation, and the
//!   exact symbolic denominator.
//! - [`criterion`]: the leading-part factorization test that excludes
//!   distributions from the Markovian reward class.
//! - [`wishart`]: the bivariate-Wishart trace example with exact transform,
//!   density, support geometry, and sampling.
//! - [`mcsim`]: pathwise CTMC reward simulation and Monte Carlo transform
//!   estimates.

pub mod criterion;
pub mod exact;
pub mod kulkarni;
pub mod mcsim;
pub mod ratfun;
pub mod realize;
mod rngutil;
pub mod wishart;
