//! Fixtures shared by the benchmarks.

use rbg_core::bivariate::{gibbs_sample, BivariateRbg, MMatrix};
use rbg_core::{Baseline, RbgDistribution};

pub fn exponential() -> Baseline {
    Baseline::exponential(1.0).expect("unit rate is valid")
}

/// Exponential(1) margins with opposite `u·u` and `v·v` interactions.
pub fn coupled_matrix() -> MMatrix {
    MMatrix::from_entries([0.0, 2.0, 1.0, 2.0, 0.3, 0.0, 1.0, 0.0, -0.5])
}

pub fn coupled_model() -> BivariateRbg {
    let b = exponential();
    BivariateRbg::new(b, b, coupled_matrix(), BivariateRbg::<Baseline>::default_quadrature())
        .expect("coupled model is integrable")
}

pub fn coupled_sample(n: usize, seed: u64) -> Vec<(f64, f64)> {
    gibbs_sample(&coupled_model(), n, 200, seed).expect("Gibbs chain runs")
}

pub fn uniform_shape(a: f64) -> RbgDistribution {
    RbgDistribution::new(a, Baseline::uniform()).expect("positive shape")
}
