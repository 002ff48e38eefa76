//! Maximum likelihood for the eight free entries of `M`.
//!
//! The density is an exponential family in the statistics
//! `S = (u_y, v_y, u_x, u_x u_y, u_x v_y, v_x, v_x u_y, v_x v_y)` with natural
//! parameter `θ = (m₀₁, m₀₂, m₁₀, m₁₁, m₁₂, m₂₀, m₂₁, m₂₂)` and log-partition
//! `ln Ψ(θ)`. Hence `∇ ln Ψ = E[S]` and `∇² ln Ψ = Cov[S]`, and the likelihood
//! equations read `E_θ[S] = S̄`.

mod fit;

pub use fit::{default_init, fit_mle, FitMethod, FitOptions, FitResult};

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::baseline::BaselineModel;
use crate::bivariate::{kernel_integrals, statistics, AxisPoint, KernelIntegrals, MMatrix, MomentOrder, STAT_COUNT};
use crate::error::{Error, Result};
use crate::numerics::{Integrator, QuadratureSpec};

/// Number of natural parameters.
pub const THETA_COUNT: usize = STAT_COUNT;

/// Position of each parameter in `M`, in parameter order.
const POSITIONS: [(usize, usize); THETA_COUNT] = [(0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2)];

/// `θ₁ … θ₈` stored zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThetaVector(pub [f64; THETA_COUNT]);

impl ThetaVector {
    pub fn from_matrix(m: &MMatrix) -> Self {
        let mut out = [0.0; THETA_COUNT];
        for (o, &(i, j)) in out.iter_mut().zip(POSITIONS.iter()) {
            *o = m.get(i, j);
        }
        ThetaVector(out)
    }

    /// `M` with `m₀₀ = 0`.
    pub fn to_matrix(&self) -> MMatrix {
        let mut m = MMatrix::from_entries([0.0; 9]);
        for (&v, &(i, j)) in self.0.iter().zip(POSITIONS.iter()) {
            m.set(i, j, v);
        }
        m
    }

    /// `(i, j)` of `θ_k` (one-based `k`) in `M`.
    pub fn position(k: usize) -> (usize, usize) {
        POSITIONS[k - 1]
    }

    fn cache_key(&self) -> [u64; THETA_COUNT] {
        self.0.map(f64::to_bits)
    }
}

/// Sample means of the eight statistics and of `ln r_x + ln r_y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SufficientStats {
    pub means: [f64; THETA_COUNT],
    /// Mean of `-(u_x + u_y)`.
    pub mean_log_r: f64,
    pub n: usize,
}

/// Computes the statistic means; errors name the first offending index.
pub fn sufficient_stats<B1, B2>(data: &[(f64, f64)], bx: &B1, by: &B2) -> Result<SufficientStats>
where
    B1: BaselineModel,
    B2: BaselineModel,
{
    if data.is_empty() {
        return Err(Error::domain("need at least one observation"));
    }
    let mut sums = [0.0; THETA_COUNT];
    let mut log_r = 0.0;
    for (i, &(x, y)) in data.iter().enumerate() {
        let px = AxisPoint::from_point(bx, x)
            .ok_or_else(|| Error::domain(format!("observation {i}: x = {x} is not interior to the baseline support")))?;
        let py = AxisPoint::from_point(by, y)
            .ok_or_else(|| Error::domain(format!("observation {i}: y = {y} is not interior to the baseline support")))?;
        let s = statistics(&px, &py);
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(format!("observation {i}: statistics are not finite at ({x}, {y})")));
        }
        for (acc, v) in sums.iter_mut().zip(s) {
            *acc += v;
        }
        log_r -= px.u + py.u;
    }
    let n = data.len() as f64;
    Ok(SufficientStats {
        means: sums.map(|s| s / n),
        mean_log_r: log_r / n,
        n: data.len(),
    })
}

const CACHE_LIMIT: usize = 512;

/// Log-partition evaluator for fixed baselines, caching integrals per `θ`.
#[derive(Debug)]
pub struct LikelihoodModel<B> {
    baseline_x: B,
    baseline_y: B,
    integrator: Integrator,
    cache: Mutex<HashMap<[u64; THETA_COUNT], (MomentOrder, Arc<KernelIntegrals>)>>,
}

fn order_rank(o: MomentOrder) -> u8 {
    match o {
        MomentOrder::Mass => 0,
        MomentOrder::First => 1,
        MomentOrder::Second => 2,
    }
}

impl<B: BaselineModel + Clone> LikelihoodModel<B> {
    pub fn new(baseline_x: B, baseline_y: B, quad: QuadratureSpec) -> Result<Self> {
        Ok(LikelihoodModel {
            baseline_x,
            baseline_y,
            integrator: Integrator::new(quad)?,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn baseline_x(&self) -> &B {
        &self.baseline_x
    }

    pub fn baseline_y(&self) -> &B {
        &self.baseline_y
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        self.integrator.spec()
    }

    /// Kernel integrals at `θ` of at least the requested order.
    pub fn integrals(&self, theta: &ThetaVector, order: MomentOrder) -> Result<Arc<KernelIntegrals>> {
        let key = theta.cache_key();
        if let Some((o, k)) = self.cache.lock().expect("cache lock").get(&key) {
            if order_rank(*o) >= order_rank(order) {
                return Ok(Arc::clone(k));
            }
        }
        let m = theta.to_matrix();
        let k = Arc::new(kernel_integrals(&m, &self.baseline_x, &self.baseline_y, &self.integrator, order)?);
        let mut cache = self.cache.lock().expect("cache lock");
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, (order, Arc::clone(&k)));
        Ok(k)
    }

    /// `ln Ψ(θ)`.
    pub fn log_psi(&self, theta: &ThetaVector) -> Result<f64> {
        if theta.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("theta entries must be finite"));
        }
        Ok(self.integrals(theta, MomentOrder::Mass)?.log_mass())
    }

    /// `ℓ(θ) = n (−ln Ψ + mean ln r + ⟨θ, S̄⟩)`.
    pub fn log_likelihood(&self, theta: &ThetaVector, stats: &SufficientStats) -> Result<f64> {
        let dot: f64 = theta.0.iter().zip(stats.means.iter()).map(|(a, b)| a * b).sum();
        Ok(stats.n as f64 * (-self.log_psi(theta)? + stats.mean_log_r + dot))
    }

    /// `E_θ[S]`, the gradient of `ln Ψ`.
    pub fn expected_statistics(&self, theta: &ThetaVector) -> Result<[f64; THETA_COUNT]> {
        self.log_psi(theta)?;
        Ok(self.integrals(theta, MomentOrder::First)?.mean())
    }

    /// `E_θ[S] − S̄`; zero at the maximum-likelihood estimate.
    pub fn residuals(&self, theta: &ThetaVector, stats: &SufficientStats) -> Result<[f64; THETA_COUNT]> {
        let e = self.expected_statistics(theta)?;
        let mut out = [0.0; THETA_COUNT];
        for j in 0..THETA_COUNT {
            out[j] = e[j] - stats.means[j];
        }
        Ok(out)
    }

    /// `Cov_θ[S]`, the Hessian of `ln Ψ` and the per-observation information.
    pub fn fisher_information(&self, theta: &ThetaVector) -> Result<[[f64; THETA_COUNT]; THETA_COUNT]> {
        self.log_psi(theta)?;
        Ok(self.integrals(theta, MomentOrder::Second)?.covariance())
    }
}

/// `ln Ψ(θ)` with a fresh evaluator.
pub fn log_psi<B: BaselineModel + Clone>(theta: &ThetaVector, bx: &B, by: &B, quad: QuadratureSpec) -> Result<f64> {
    LikelihoodModel::new(bx.clone(), by.clone(), quad)?.log_psi(theta)
}

/// Log-likelihood of `data` at `θ`.
pub fn log_likelihood<B: BaselineModel + Clone>(
    theta: &ThetaVector,
    data: &[(f64, f64)],
    bx: &B,
    by: &B,
    quad: QuadratureSpec,
) -> Result<f64> {
    let stats = sufficient_stats(data, bx, by)?;
    LikelihoodModel::new(bx.clone(), by.clone(), quad)?.log_likelihood(theta, &stats)
}

/// Likelihood-equation residuals `E_θ[S] − S̄`.
pub fn likelihood_residuals<B: BaselineModel + Clone>(
    theta: &ThetaVector,
    stats: &SufficientStats,
    bx: &B,
    by: &B,
    quad: QuadratureSpec,
) -> Result<[f64; THETA_COUNT]> {
    LikelihoodModel::new(bx.clone(), by.clone(), quad)?.residuals(theta, stats)
}

/// Per-observation Fisher information `Cov_θ[S]`.
pub fn fisher_information<B: BaselineModel + Clone>(
    theta: &ThetaVector,
    bx: &B,
    by: &B,
    quad: QuadratureSpec,
) -> Result<[[f64; THETA_COUNT]; THETA_COUNT]> {
    LikelihoodModel::new(bx.clone(), by.clone(), quad)?.fisher_information(theta)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &[[f64; THETA_COUNT]; THETA_COUNT]) -> f64 {
    let a = DMatrix::from_fn(THETA_COUNT, THETA_COUNT, |i, j| 0.5 * (m[i][j] + m[j][i]));
    SymmetricEigen::new(a).eigenvalues.min()
}

/// `I_free⁻¹ / n` embedded in an 8×8 matrix, or `None` when the free block is
/// not positive definite.
pub fn covariance_from_information(
    info: &[[f64; THETA_COUNT]; THETA_COUNT],
    free: &[bool; THETA_COUNT],
    n: usize,
) -> Option<[[f64; THETA_COUNT]; THETA_COUNT]> {
    let idx: Vec<usize> = (0..THETA_COUNT).filter(|&j| free[j]).collect();
    let k = idx.len();
    let block = DMatrix::from_fn(k, k, |a, b| 0.5 * (info[idx[a]][idx[b]] + info[idx[b]][idx[a]]));
    let inv = block.cholesky()?.inverse();
    let mut out = [[0.0; THETA_COUNT]; THETA_COUNT];
    for a in 0..k {
        for b in 0..k {
            out[idx[a]][idx[b]] = inv[(a, b)] / n as f64;
        }
    }
    Some(out)
}
