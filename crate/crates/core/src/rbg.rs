//! The univariate gamma-generated law.
//!
//! For a baseline `G` with density `g` and shape `a > 0`,
//!
//! ```text
//! f(x) = (-ln G(x))^{a-1} g(x) / Γ(a)
//! F(x) = 1 - P(a, -ln G(x))
//! ```
//!
//! so `T = -ln G(X)` is `Gamma(a, 1)`. The survival is `P(a, T)` taken
//! straight from the incomplete gamma ratio.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baseline::{Baseline, BaselineModel};
use crate::error::{Error, Result};
use crate::numerics::{digamma_unchecked, gamma_pq, inv_digamma, inv_gamma_pq, ln_gamma_unchecked};
use crate::sampling::gamma_variate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbgDistribution<B = Baseline> {
    shape: f64,
    baseline: B,
    log_gamma_shape: f64,
}

fn check_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("argument must be finite, got {x}")))
    }
}

impl<B: BaselineModel> RbgDistribution<B> {
    pub fn new(shape: f64, baseline: B) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0) {
            return Err(Error::config(format!("shape must be positive and finite, got {shape}")));
        }
        Ok(RbgDistribution {
            shape,
            baseline,
            log_gamma_shape: ln_gamma_unchecked(shape),
        })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn baseline(&self) -> &B {
        &self.baseline
    }

    /// `-ln G(x)`.
    pub fn transform(&self, x: f64) -> f64 {
        self.baseline.neg_log_cdf(x)
    }

    pub fn log_pdf(&self, x: f64) -> Result<f64> {
        check_finite(x)?;
        if !self.baseline.in_support(x) {
            return Ok(f64::NEG_INFINITY);
        }
        let power = if self.shape == 1.0 {
            0.0
        } else {
            (self.shape - 1.0) * self.baseline.log_neg_log_cdf(x)
        };
        Ok(power + self.baseline.log_pdf(x) - self.log_gamma_shape)
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        Ok(self.log_pdf(x)?.exp())
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_finite(x)?;
        let t = self.baseline.neg_log_cdf(x);
        if t == f64::INFINITY {
            return Ok(0.0);
        }
        Ok(gamma_pq(self.shape, t).1)
    }

    pub fn survival(&self, x: f64) -> Result<f64> {
        check_finite(x)?;
        let t = self.baseline.neg_log_cdf(x);
        if t == f64::INFINITY {
            return Ok(1.0);
        }
        Ok(gamma_pq(self.shape, t).0)
    }

    /// `f / (1 - F)`.
    pub fn hazard(&self, x: f64) -> Result<f64> {
        let s = self.survival(x)?;
        if s <= 0.0 {
            return Err(Error::Overflow(format!("survival underflows to zero at x = {x}")));
        }
        Ok(self.pdf(x)? / s)
    }

    /// `g(x) (-ln G(x))^{a-1} / γ(a, -ln G(x))` with the unregularized lower
    /// incomplete gamma.
    pub fn hazard_closed_form(&self, x: f64) -> Result<f64> {
        check_finite(x)?;
        if !self.baseline.in_support(x) {
            return Ok(0.0);
        }
        let t = self.baseline.neg_log_cdf(x);
        let lower = gamma_pq(self.shape, t).0 * self.log_gamma_shape.exp();
        if lower <= 0.0 || !lower.is_finite() {
            return Err(Error::Overflow(format!("lower incomplete gamma not representable at x = {x}")));
        }
        Ok(self.baseline.pdf(x) * t.powf(self.shape - 1.0) / lower)
    }

    /// Log density of `ln T` where `T = -ln G(X)`: `a·s - eˢ - ln Γ(a)`.
    ///
    /// Integrals over the support are taken in this variable, where the
    /// Jacobian `T e^{-T} / g(x)` cancels the baseline density exactly.
    pub fn log_density_log_transform(&self, s: f64) -> f64 {
        let t = s.exp();
        if t > 700.0 {
            return f64::NEG_INFINITY;
        }
        self.shape * s - t - self.log_gamma_shape
    }

    pub fn log_gamma_shape(&self) -> f64 {
        self.log_gamma_shape
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("quantile level must lie in (0, 1), got {p}")));
        }
        // F(x) = Q(a, t), so t solves P(a, t) = 1 - p.
        let t = inv_gamma_pq(self.shape, 1.0 - p, p);
        Ok(self.baseline.from_neg_log_cdf(t))
    }

    /// `n` draws as `G⁻¹(exp(-Z))` with `Z ~ Gamma(a, 1)`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, n)
    }

    pub fn sample_with<R: rand::Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n)
            .map(|_| self.baseline.from_neg_log_cdf(gamma_variate(rng, self.shape)))
            .collect()
    }
}

/// Maximum-likelihood shape for a known baseline: `ψ₀⁻¹(mean ln(-ln G(xᵢ)))`.
pub fn fit_univariate_a<B: BaselineModel>(data: &[f64], baseline: &B) -> Result<f64> {
    if data.len() < 2 {
        return Err(Error::domain(format!("need at least two observations, got {}", data.len())));
    }
    let bad: Vec<usize> = data
        .iter()
        .enumerate()
        .filter(|(_, &x)| !(x.is_finite() && baseline.in_support(x)))
        .map(|(i, _)| i)
        .collect();
    if !bad.is_empty() {
        return Err(Error::domain(format!("observations outside the baseline support at indices {bad:?}")));
    }
    if data.iter().all(|&x| x == data[0]) {
        let u = baseline.log_neg_log_cdf(data[0]);
        return Err(Error::non_convergence("shape fit on a degenerate sample", inv_digamma(u)?, f64::INFINITY));
    }
    let mut sum = 0.0;
    for &x in data {
        let u = baseline.log_neg_log_cdf(x);
        if !u.is_finite() {
            return Err(Error::domain(format!("observation {x} sits on the edge of the baseline support")));
        }
        sum += u;
    }
    inv_digamma(sum / data.len() as f64)
}

/// Asymptotic standard error of the shape estimate, `1/√(n ψ₁(a))`.
pub fn shape_standard_error(shape: f64, n: usize) -> f64 {
    1.0 / (n as f64 * crate::numerics::trigamma_unchecked(shape)).sqrt()
}

/// Score of the shape parameter averaged over the sample.
pub fn shape_score<B: BaselineModel>(shape: f64, data: &[f64], baseline: &B) -> f64 {
    let mean = data.iter().map(|&x| baseline.log_neg_log_cdf(x)).sum::<f64>() / data.len() as f64;
    mean - digamma_unchecked(shape)
}
