//! Sample extremes of the family.
//!
//! The minimum of `n` draws has survival `S(x)ⁿ` and the maximum has cdf
//! `F(x)ⁿ`. The survival is also expanded as a power series in
//! `t = -ln G(x)`:
//!
//! ```text
//! S(x)ⁿ = Γ(a)⁻ⁿ tⁿᵃ [Σₖ (-1)ᵏ tᵏ / (k! (a+k))]ⁿ
//! ```
//!
//! Truncating each factor at `k ≤ K` and multiplying out gives the
//! multi-index sum over `k₁ … kₙ ≤ K`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::baseline::BaselineModel;
use crate::error::{Error, Result};
use crate::numerics::ln_gamma_unchecked;
use crate::rbg::RbgDistribution;

/// Per-coordinate truncation of the multi-index sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTruncation {
    pub max_index: usize,
    /// Bounds above this value raise a warning on the result.
    pub tolerance: f64,
}

impl SeriesTruncation {
    pub fn new(max_index: usize) -> Self {
        SeriesTruncation {
            max_index,
            tolerance: 1e-8,
        }
    }
}

impl Default for SeriesTruncation {
    fn default() -> Self {
        SeriesTruncation::new(30)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesEstimate {
    pub value: f64,
    /// Bound on `|value − S(x)ⁿ|` covering truncation and rounding; infinite
    /// when the tail is not yet alternating with decreasing terms.
    pub bound: f64,
    pub warning: Option<String>,
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::domain("sample size must be at least 1"))
    } else {
        Ok(())
    }
}

/// `P(X₁:ₙ > x) = S(x)ⁿ`.
pub fn min_survival<B: BaselineModel>(d: &RbgDistribution<B>, n: usize, x: f64) -> Result<f64> {
    check_count(n)?;
    Ok(d.survival(x)?.powi(n as i32))
}

/// `P(Xₙ:ₙ ≤ x) = F(x)ⁿ`.
pub fn max_cdf<B: BaselineModel>(d: &RbgDistribution<B>, n: usize, x: f64) -> Result<f64> {
    check_count(n)?;
    Ok(d.cdf(x)?.powi(n as i32))
}

/// Coefficients `(-1)ᵏ / (k! (a+k))` for `k = 0..=K`.
fn factor_coefficients(a: f64, max_index: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(max_index + 1);
    let mut inv_fact = 1.0;
    for k in 0..=max_index {
        if k > 0 {
            inv_fact /= k as f64;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        out.push(sign * inv_fact / (a + k as f64));
    }
    out
}

fn convolve(lhs: &[f64], rhs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; lhs.len() + rhs.len() - 1];
    for (i, l) in lhs.iter().enumerate() {
        for (j, r) in rhs.iter().enumerate() {
            out[i + j] += l * r;
        }
    }
    out
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// Multi-index series for `S(x)ⁿ` with its truncation bound.
pub fn min_survival_series<B: BaselineModel>(
    d: &RbgDistribution<B>,
    n: usize,
    x: f64,
    trunc: SeriesTruncation,
) -> Result<SeriesEstimate> {
    check_count(n)?;
    if !x.is_finite() {
        return Err(Error::domain(format!("argument must be finite, got {x}")));
    }
    let t = d.transform(x);
    if t == f64::INFINITY {
        return Ok(SeriesEstimate {
            value: 1.0,
            bound: 0.0,
            warning: Some("x below the support: survival is exactly 1".into()),
        });
    }
    let a = d.shape();
    let k_max = trunc.max_index;
    let single = factor_coefficients(a, k_max);
    // Coefficient of t^s in the product over the n factors; index s = Σ kᵢ.
    let mut poly = single.clone();
    for _ in 1..n {
        poly = convolve(&poly, &single);
    }
    let nf = n as f64;
    let log_scale = nf * (a * t.ln() - ln_gamma_unchecked(a));
    let scale = log_scale.exp();
    let value = scale * horner(&poly, t);

    // One factor: partial sum P_K and the first omitted term.
    let partial = (a * t.ln() - ln_gamma_unchecked(a)).exp() * horner(&single, t);
    let k1 = (k_max + 1) as f64;
    // Horner rounding: a few ulps per term of the absolute series.
    let abs_poly: Vec<f64> = poly.iter().map(|c| c.abs()).collect();
    let rounding = 2.0 * (poly.len() + single.len()) as f64 * f64::EPSILON * scale * horner(&abs_poly, t);
    let truncation = if t == 0.0 {
        0.0
    } else if k1 > t {
        let log_term = (a + k1) * t.ln() - ln_gamma_unchecked(k1 + 1.0) - (a + k1).ln() - ln_gamma_unchecked(a);
        let b = log_term.exp();
        let p = partial.abs();
        (p + b).powi(n as i32) - p.powi(n as i32)
    } else {
        f64::INFINITY
    };
    let bound = truncation + rounding;
    let warning = (bound > trunc.tolerance).then(|| {
        format!(
            "truncation bound {bound:e} exceeds tolerance {:e} at K = {k_max}",
            trunc.tolerance
        )
    });
    Ok(SeriesEstimate { value, bound, warning })
}

/// Minima of `replicates` independent samples of size `n`.
pub fn sample_minima<B: BaselineModel>(d: &RbgDistribution<B>, n: usize, replicates: usize, seed: u64) -> Result<Vec<f64>> {
    check_count(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..replicates)
        .map(|_| d.sample_with(&mut rng, n).into_iter().fold(f64::INFINITY, f64::min))
        .collect())
}
