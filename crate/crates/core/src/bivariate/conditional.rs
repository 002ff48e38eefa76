//! Conditional laws.
//!
//! Given the other coordinate, one coordinate has density proportional to
//!
//! ```text
//! exp(A s + (B - 1) v(s) - eˢ)   per ds,  s = ln(-ln G(x)),
//! ```
//!
//! with `A` and `B` affine in the other coordinate's statistics. When
//! `B = 1` this is the family member with shape `A`: `-ln G(X)` is
//! Gamma(`A`, 1).

use std::fmt;

use rand::Rng;

use crate::baseline::BaselineModel;
use crate::error::{Error, Result};
use crate::numerics::{gamma_pq, ln_gamma_unchecked, Integrator};
use crate::rbg::RbgDistribution;
use crate::sampling::gamma_variate;

/// A pair of shape functions, one per conditional.
pub struct ConditionalSpec<B> {
    pub baseline_x: B,
    pub baseline_y: B,
    shape_x_given_y: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    shape_y_given_x: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl<B: fmt::Debug> fmt::Debug for ConditionalSpec<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConditionalSpec")
            .field("baseline_x", &self.baseline_x)
            .field("baseline_y", &self.baseline_y)
            .finish_non_exhaustive()
    }
}

impl<B> ConditionalSpec<B> {
    pub fn new<F1, F2>(baseline_x: B, baseline_y: B, shape_x_given_y: F1, shape_y_given_x: F2) -> Self
    where
        F1: Fn(f64) -> f64 + Send + Sync + 'static,
        F2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        ConditionalSpec {
            baseline_x,
            baseline_y,
            shape_x_given_y: Box::new(shape_x_given_y),
            shape_y_given_x: Box::new(shape_y_given_x),
        }
    }

    pub fn shape_x_given_y(&self, y: f64) -> f64 {
        (self.shape_x_given_y)(y)
    }

    pub fn shape_y_given_x(&self, x: f64) -> f64 {
        (self.shape_y_given_x)(x)
    }
}

/// `f(x | y)`: the family density with the conditional shape at `y`.
pub fn conditional_density_rbg<B: BaselineModel + Clone>(x: f64, y: f64, spec: &ConditionalSpec<B>) -> Result<f64> {
    if !spec.baseline_x.in_support(x) || !spec.baseline_y.in_support(y) {
        return Err(Error::domain(format!("({x}, {y}) is not interior to the supports")));
    }
    let shape = spec.shape_x_given_y(y);
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(Error::domain(format!("conditional shape {shape} at y = {y} is not positive")));
    }
    RbgDistribution::new(shape, spec.baseline_x.clone())?.pdf(x)
}

/// Probe range in `s` used to locate the mode and test tail decay.
const PROBE_LO: f64 = -40.0;
const PROBE_HI: f64 = 6.5;
const PROBE_STEP: f64 = 0.25;

/// One-dimensional conditional law.
#[derive(Debug, Clone)]
pub struct ConditionalLaw<B> {
    baseline: B,
    shape: f64,
    log_pdf_coefficient: f64,
    log_normalizer: f64,
    shift: f64,
    exact: bool,
    integrator: Integrator,
}

impl<B: BaselineModel> ConditionalLaw<B> {
    /// Law with log density `shape·s + (coef − 1)·v(s) − eˢ` in `s`.
    ///
    /// With `allow_exact`, `coef = 1` takes the Gamma closed forms.
    pub fn build(baseline: B, shape: f64, coef: f64, integrator: &Integrator, allow_exact: bool) -> Result<Self> {
        if !(shape.is_finite() && coef.is_finite()) {
            return Err(Error::ConditionalNonexistence(format!(
                "non-finite coefficients (shape {shape}, log-density coefficient {coef})"
            )));
        }
        let exact = coef == 1.0;
        if exact && shape <= 0.0 {
            return Err(Error::ConditionalNonexistence(format!("conditional shape {shape} is not positive")));
        }
        let mut law = ConditionalLaw {
            baseline,
            shape,
            log_pdf_coefficient: coef,
            log_normalizer: 0.0,
            shift: 0.0,
            exact: exact && allow_exact,
            integrator: integrator.clone(),
        };
        if law.exact {
            law.log_normalizer = ln_gamma_unchecked(shape);
            return Ok(law);
        }
        law.shift = law.probe()?;
        let mass = law
            .integrator
            .integrate(|s| (law.log_kernel(s) - law.shift).exp(), f64::NEG_INFINITY, f64::INFINITY)
            .map_err(|e| match e {
                Error::NonConvergence { .. } => {
                    Error::ConditionalNonexistence(format!("normalizing integral diverges ({e})"))
                }
                other => other,
            })?;
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::ConditionalNonexistence(format!("normalizing integral is {mass}")));
        }
        law.log_normalizer = mass.ln() + law.shift;
        Ok(law)
    }

    /// Unnormalized log density in `s`.
    fn log_kernel(&self, s: f64) -> f64 {
        let t = s.exp();
        if t > 700.0 || s < -600.0 {
            return f64::NEG_INFINITY;
        }
        let extra = if self.log_pdf_coefficient == 1.0 {
            0.0
        } else {
            (self.log_pdf_coefficient - 1.0) * self.baseline.log_pdf_at_neg_log_cdf(t)
        };
        self.shape * s + extra - t
    }

    /// Maximum of the kernel on the probe grid, after checking both tails decay.
    fn probe(&self) -> Result<f64> {
        let left = self.log_kernel(PROBE_LO);
        let slope = (left - self.log_kernel(PROBE_LO - 10.0)) / 10.0;
        if !(slope > 0.0) {
            return Err(Error::ConditionalNonexistence(format!(
                "density does not decay in the upper tail of the baseline (log-slope {slope:e})"
            )));
        }
        let n = ((PROBE_HI - PROBE_LO) / PROBE_STEP).round() as usize + 1;
        let mut best = f64::NEG_INFINITY;
        let mut best_i = 0;
        for i in 0..n {
            let l = self.log_kernel(PROBE_LO + PROBE_STEP * i as f64);
            if l > best {
                best = l;
                best_i = i;
            }
        }
        if !best.is_finite() || best_i + 1 == n {
            return Err(Error::ConditionalNonexistence(
                "density does not decay in the lower tail of the baseline".into(),
            ));
        }
        Ok(best)
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// Shape coefficient `A`.
    pub fn shape(&self) -> f64 {
        self.shape
    }

    /// Coefficient `B` of `ln g`.
    pub fn log_pdf_coefficient(&self) -> f64 {
        self.log_pdf_coefficient
    }

    /// `ln ∫ exp(A s + (B − 1) v(s) − eˢ) ds`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn baseline(&self) -> &B {
        &self.baseline
    }

    /// Log density of `s = ln(-ln G(X))`.
    pub fn log_density_log_transform(&self, s: f64) -> f64 {
        self.log_kernel(s) - self.log_normalizer
    }

    /// Log density in `x`.
    pub fn log_pdf(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::domain(format!("argument must be finite, got {x}")));
        }
        if !self.baseline.in_support(x) {
            return Ok(f64::NEG_INFINITY);
        }
        let u = self.baseline.log_neg_log_cdf(x);
        if !u.is_finite() {
            return Ok(f64::NEG_INFINITY);
        }
        let v = self.baseline.log_pdf(x);
        Ok(self.shape * u + self.log_pdf_coefficient * v - u - self.log_normalizer)
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        Ok(self.log_pdf(x)?.exp())
    }

    /// `P(X ≤ x)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::domain(format!("argument must be finite, got {x}")));
        }
        let (lo, hi) = self.baseline.support();
        if x <= lo {
            return Ok(0.0);
        }
        if x >= hi {
            return Ok(1.0);
        }
        if self.exact {
            return Ok(gamma_pq(self.shape, self.baseline.neg_log_cdf(x)).1);
        }
        // X ≤ x exactly when S ≥ ln t.
        let lower = self.baseline.log_neg_log_cdf(x);
        let p = self.integrator.integrate(|r| self.log_density_log_transform(r).exp(), lower, f64::INFINITY)?;
        Ok(p.clamp(0.0, 1.0))
    }

    /// `E[g(S)]` for `S = ln(-ln G(X))`.
    fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        self.integrator.integrate(
            |s| {
                let l = self.log_density_log_transform(s);
                if l == f64::NEG_INFINITY {
                    0.0
                } else {
                    f(s) * l.exp()
                }
            },
            f64::NEG_INFINITY,
            f64::INFINITY,
        )
    }

    fn moment_error(&self, what: &str, k: u32, e: Error) -> Error {
        match e {
            Error::NonConvergence { .. } | Error::Domain(_) => {
                Error::Overflow(format!("conditional moment E[{what}^{k}] appears infinite ({e})"))
            }
            other => other,
        }
    }

    /// `E[Xᵏ]` by quadrature.
    pub fn moment(&self, k: u32) -> Result<f64> {
        if k == 0 {
            return Ok(1.0);
        }
        self.expectation(|s| self.baseline.from_neg_log_cdf(s.exp()).powi(k as i32))
            .map_err(|e| self.moment_error("X", k, e))
    }

    /// `E[Tᵏ]` for `T = -ln G(X)` by quadrature.
    pub fn moment_transform(&self, k: u32) -> Result<f64> {
        self.expectation(|s| (k as f64 * s).exp())
            .map_err(|e| self.moment_error("T", k, e))
    }

    /// `A(A+1)…(A+k−1)` when the law is exact.
    pub fn moment_transform_closed_form(&self, k: u32) -> Option<f64> {
        self.exact
            .then(|| (0..k).fold(1.0, |acc, j| acc * (self.shape + j as f64)))
    }

    /// One draw by exact Gamma sampling; general laws go through the Gibbs grid.
    pub fn sample_exact<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        self.exact
            .then(|| self.baseline.from_neg_log_cdf(gamma_variate(rng, self.shape)))
    }
}
