//! Gamma-generated distributions built from a baseline cdf `G`.
//!
//! The univariate law has density `(-ln G(x))^{a-1} g(x) / Γ(a)`. On top of it
//! sit order-statistic results, numerical checks of its characterization
//! identities, a bivariate model whose two conditionals belong to the family,
//! and maximum-likelihood fitting of that model.

pub mod baseline;
pub mod bivariate;
pub mod characterize;
pub mod error;
pub mod estimate;
pub mod numerics;
pub mod order_stats;
pub mod rbg;
pub mod sampling;
pub mod stats;

pub use baseline::{make_baseline, Baseline, BaselineModel};
pub use bivariate::{BivariateRbg, MMatrix, ModelConfig};
pub use error::{Error, Result};
pub use estimate::{fit_mle, FitMethod, FitOptions, FitResult, ThetaVector};
pub use rbg::{fit_univariate_a, RbgDistribution};

#[cfg(test)]
mod properties;
