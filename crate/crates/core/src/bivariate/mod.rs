//! Bivariate model with conditionals in the family.
//!
//! With `u(t) = ln(-ln G(t))`, `v(t) = ln g(t)`, `r(t) = (-ln G(t))⁻¹` and
//! `q(t) = (1, u(t), v(t))`, the joint density is
//!
//! ```text
//! f(x, y) = r_x(x) r_y(y) exp(q_x(x)ᵀ M q_y(y))
//! ```
//!
//! where the corner entry `m₀₀` is fixed by normalization. Rows of `M` index
//! the `x` statistics and columns the `y` statistics.

mod conditional;
mod config;
mod gibbs;
mod integrals;
mod mode;

pub use conditional::{conditional_density_rbg, ConditionalLaw, ConditionalSpec};
pub use config::{ModelConfig, QuadratureConfig, StrictConfig};
pub use gibbs::gibbs_sample;
pub use integrals::{
    kernel_integrals, log_kernel_log_space, statistics, AxisPoint, KernelIntegrals, MomentOrder, STAT_COUNT,
};
pub use mode::{mode_find, ModeResult};

use serde::{Deserialize, Serialize};

use crate::baseline::{Baseline, BaselineModel};
use crate::error::{Error, Result};
use crate::numerics::{Integrator, QuadratureSpec};

/// The 3×3 coefficient matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MMatrix {
    entries: [[f64; 3]; 3],
}

impl MMatrix {
    /// Row-major `[m₀₀, m₀₁, m₀₂, m₁₀, …, m₂₂]`.
    pub fn from_entries(e: [f64; 9]) -> Self {
        MMatrix {
            entries: [[e[0], e[1], e[2]], [e[3], e[4], e[5]], [e[6], e[7], e[8]]],
        }
    }

    /// Both conditionals exactly in the family: `m₂₀ = m₀₂ = 1` and
    /// `m₁₂ = m₂₁ = m₂₂ = 0`.
    pub fn strict(x_shape: f64, y_shape: f64, interaction: f64) -> Self {
        MMatrix::from_entries([0.0, y_shape, 1.0, x_shape, interaction, 0.0, 1.0, 0.0, 0.0])
    }

    /// Product of two univariate laws with shapes `x_shape` and `y_shape`.
    pub fn independence(x_shape: f64, y_shape: f64) -> Self {
        MMatrix::strict(x_shape, y_shape, 0.0)
    }

    pub fn entries(&self) -> [[f64; 3]; 3] {
        self.entries
    }

    /// Row-major copy of the entries.
    pub fn to_array(&self) -> [f64; 9] {
        let e = &self.entries;
        [
            e[0][0], e[0][1], e[0][2], e[1][0], e[1][1], e[1][2], e[2][0], e[2][1], e[2][2],
        ]
    }

    /// Entry `m_ij`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i][j] = value;
    }

    pub fn is_strict_submodel(&self) -> bool {
        let e = &self.entries;
        e[2][0] == 1.0 && e[0][2] == 1.0 && e[1][2] == 0.0 && e[2][1] == 0.0 && e[2][2] == 0.0
    }

    /// The interaction block `m₁₁, m₁₂, m₂₁, m₂₂` is zero.
    pub fn is_independent(&self) -> bool {
        let e = &self.entries;
        e[1][1] == 0.0 && e[1][2] == 0.0 && e[2][1] == 0.0 && e[2][2] == 0.0
    }

    /// The sign conditions `m₁₂ > 0`, `m₂₁ > 0`, `m₂₂ ≤ 0` quoted in the
    /// literature as sufficient for a proper density. They are neither
    /// necessary nor, on their own, sufficient, so construction always runs
    /// the numerical divergence probe regardless of this value.
    pub fn literature_sign_conditions(&self) -> bool {
        let e = &self.entries;
        e[1][2] > 0.0 && e[2][1] > 0.0 && e[2][2] <= 0.0
    }

    pub fn determinant(&self) -> f64 {
        let e = &self.entries;
        e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1]) - e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0])
            + e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0])
    }

    fn check_finite(&self) -> Result<()> {
        if self.entries.iter().flatten().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::config("M entries must be finite"))
        }
    }

    /// Analytic verdicts that need no quadrature.
    fn analytic_integrability(&self) -> Result<()> {
        if !self.is_strict_submodel() {
            return Ok(());
        }
        let e = &self.entries;
        if e[1][1] != 0.0 {
            // The baseline terms cancel, leaving exp(a s + b t + c s t - eˢ - eᵗ)
            // per ds dt; for c > 0 it grows like exp(c s²) along s = t → -∞ and
            // for c < 0 like exp(|c| s t) along s → -∞, t → +∞.
            return Err(Error::NonIntegrable(format!(
                "strict submodel with m11 = {} diverges: the term m11·u(x)·u(y) is unbounded on the real (u, u) plane",
                e[1][1]
            )));
        }
        if !(e[1][0] > 0.0 && e[0][1] > 0.0) {
            return Err(Error::NonIntegrable(format!(
                "independence model needs positive shapes, got m10 = {}, m01 = {}",
                e[1][0], e[0][1]
            )));
        }
        Ok(())
    }
}

/// Verdict of the determinant and ratio-chain criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DependenceSign {
    Positive,
    Negative,
    Independent,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DependenceReport {
    pub sign: DependenceSign,
    pub determinant: f64,
}

/// Positive dependence iff `m₂₂/m₁₂ < m₂₀/m₁₀ < m₂₁/m₁₁`, negative for the
/// reversed chain, both under positive `m₁₀, m₁₁, m₁₂, m₂₀, m₂₁, m₂₂`.
pub fn dependence_sign(m: &MMatrix) -> DependenceReport {
    let determinant = m.determinant();
    let e = m.entries();
    let sign = if m.is_independent() {
        DependenceSign::Independent
    } else if [e[1][0], e[1][1], e[1][2], e[2][0], e[2][1], e[2][2]].iter().all(|&v| v > 0.0) {
        let low = e[2][2] / e[1][2];
        let mid = e[2][0] / e[1][0];
        let high = e[2][1] / e[1][1];
        if low < mid && mid < high {
            DependenceSign::Positive
        } else if low > mid && mid > high {
            DependenceSign::Negative
        } else {
            DependenceSign::Indeterminate
        }
    } else {
        DependenceSign::Indeterminate
    };
    DependenceReport { sign, determinant }
}

/// The joint law over two baselines.
#[derive(Debug, Clone)]
pub struct BivariateRbg<B = Baseline> {
    baseline_x: B,
    baseline_y: B,
    m: MMatrix,
    quad: QuadratureSpec,
    integrator: Integrator,
    normalized: bool,
}

impl<B: BaselineModel + Clone> BivariateRbg<B> {
    /// Default rule for the two-dimensional integrals.
    pub fn default_quadrature() -> QuadratureSpec {
        QuadratureSpec {
            node_count: 15,
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_refinements: 400,
        }
    }

    /// Builds and normalizes the model; `m₀₀` in `m` is ignored.
    pub fn new(baseline_x: B, baseline_y: B, m: MMatrix, quad: QuadratureSpec) -> Result<Self> {
        let mut model = Self::kernel(baseline_x, baseline_y, m, quad)?;
        model.normalize()?;
        Ok(model)
    }

    /// The unnormalized kernel with `m₀₀` as given.
    ///
    /// Conditionals, the cross ratio and Gibbs updates only need the kernel,
    /// so they work here even when `M` admits no normalization.
    pub fn kernel(baseline_x: B, baseline_y: B, m: MMatrix, quad: QuadratureSpec) -> Result<Self> {
        m.check_finite()?;
        let integrator = Integrator::new(quad)?;
        Ok(BivariateRbg {
            baseline_x,
            baseline_y,
            m,
            quad,
            integrator,
            normalized: false,
        })
    }

    /// Computes `Ψ = ∫∫ r_x r_y exp(q_xᵀ M q_y − m₀₀) dx dy`, stores
    /// `m₀₀ = -ln Ψ` and returns `Ψ`.
    pub fn normalize(&mut self) -> Result<f64> {
        let log_psi = self.log_psi()?;
        self.m.set(0, 0, -log_psi);
        self.normalized = true;
        Ok(log_psi.exp())
    }

    /// `ln Ψ` for the current entries, independent of `m₀₀`.
    pub fn log_psi(&self) -> Result<f64> {
        let k = kernel_integrals(&self.m, &self.baseline_x, &self.baseline_y, &self.integrator, MomentOrder::Mass)?;
        Ok(k.log_mass())
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn m(&self) -> &MMatrix {
        &self.m
    }

    pub fn baseline_x(&self) -> &B {
        &self.baseline_x
    }

    pub fn baseline_y(&self) -> &B {
        &self.baseline_y
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub fn integrator(&self) -> &Integrator {
        &self.integrator
    }

    fn axis_x(&self, x: f64) -> Result<AxisPoint> {
        AxisPoint::from_point(&self.baseline_x, x)
            .ok_or_else(|| Error::domain(format!("x = {x} is not interior to the baseline support")))
    }

    fn axis_y(&self, y: f64) -> Result<AxisPoint> {
        AxisPoint::from_point(&self.baseline_y, y)
            .ok_or_else(|| Error::domain(format!("y = {y} is not interior to the baseline support")))
    }

    /// `ln r_x(x) + ln r_y(y) + q_x(x)ᵀ M q_y(y)`.
    pub fn joint_log_density(&self, x: f64, y: f64) -> Result<f64> {
        let px = self.axis_x(x)?;
        let py = self.axis_y(y)?;
        Ok(self.m.get(0, 0) + integrals::interaction(&self.m, &px, &py) - px.u - py.u)
    }

    pub fn joint_density(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.joint_log_density(x, y)?.exp())
    }

    /// `f(x₁,y₁) f(x₂,y₂) / (f(x₁,y₂) f(x₂,y₁))` for `x₁ > x₂`, `y₁ > y₂`.
    ///
    /// Computed from log densities, so densities that underflow in `f64`
    /// still give a ratio.
    pub fn plrd_local_ratio(&self, x1: f64, x2: f64, y1: f64, y2: f64) -> Result<f64> {
        if !(x1 > x2 && y1 > y2) {
            return Err(Error::domain(format!(
                "cross ratio needs x1 > x2 and y1 > y2, got ({x1}, {x2}, {y1}, {y2})"
            )));
        }
        let terms = [
            self.joint_log_density(x1, y1)?,
            self.joint_log_density(x2, y2)?,
            self.joint_log_density(x1, y2)?,
            self.joint_log_density(x2, y1)?,
        ];
        if terms.contains(&f64::NEG_INFINITY) {
            return Err(Error::DegenerateRatio(format!(
                "zero density among the four points ({x1}, {x2}, {y1}, {y2})"
            )));
        }
        let ratio = (terms[0] + terms[1] - terms[2] - terms[3]).exp();
        if !ratio.is_finite() {
            return Err(Error::Overflow(format!("cross ratio at ({x1}, {x2}, {y1}, {y2}) overflows")));
        }
        Ok(ratio)
    }

    /// Shape and baseline-log-density coefficients of `X | Y = y` in the
    /// `ln(-ln G)` variable.
    fn coefficients_x_given(&self, py: &AxisPoint) -> (f64, f64) {
        let e = self.m.entries();
        (
            e[1][0] + e[1][1] * py.u + e[1][2] * py.v,
            e[2][0] + e[2][1] * py.u + e[2][2] * py.v,
        )
    }

    fn coefficients_y_given(&self, px: &AxisPoint) -> (f64, f64) {
        let e = self.m.entries();
        (
            e[0][1] + e[1][1] * px.u + e[2][1] * px.v,
            e[0][2] + e[1][2] * px.u + e[2][2] * px.v,
        )
    }

    /// Law of `X` given `Y = y`; exact when the `ln g` coefficient is one.
    pub fn conditional_of_x_given_y(&self, y: f64) -> Result<ConditionalLaw<B>> {
        let (a, b) = self.coefficients_x_given(&self.axis_y(y)?);
        ConditionalLaw::build(self.baseline_x.clone(), a, b, &self.integrator, true)
    }

    /// Law of `Y` given `X = x`.
    pub fn conditional_of_y_given_x(&self, x: f64) -> Result<ConditionalLaw<B>> {
        let (a, b) = self.coefficients_y_given(&self.axis_x(x)?);
        ConditionalLaw::build(self.baseline_y.clone(), a, b, &self.integrator, true)
    }

    /// `E[Xᵏ | Y = y]` by quadrature.
    pub fn conditional_moment_k(&self, y: f64, k: u32) -> Result<f64> {
        self.conditional_of_x_given_y(y)?.moment(k)
    }

    /// `∫ f(x, y) dy` by quadrature over `y`.
    pub fn marginal_density_x(&self, x: f64) -> Result<f64> {
        let px = self.axis_x(x)?;
        let (a, b) = self.coefficients_y_given(&px);
        let law = ConditionalLaw::build(self.baseline_y.clone(), a, b, &self.integrator, false)?;
        let e = self.m.entries();
        Ok((e[0][0] + (e[1][0] - 1.0) * px.u + e[2][0] * px.v + law.log_normalizer()).exp())
    }

    /// `∫ f(x, y) dx` by quadrature over `x`.
    pub fn marginal_density_y(&self, y: f64) -> Result<f64> {
        let py = self.axis_y(y)?;
        let (a, b) = self.coefficients_x_given(&py);
        let law = ConditionalLaw::build(self.baseline_x.clone(), a, b, &self.integrator, false)?;
        let e = self.m.entries();
        Ok((e[0][0] + (e[0][1] - 1.0) * py.u + e[0][2] * py.v + law.log_normalizer()).exp())
    }

    /// Strict-submodel closed form `r_x(x) Γ(C(x)) exp(m₀₀ + m₁₀ u(x) + v(x))`
    /// with `C(x) = m₀₁ + m₁₁ u(x)`.
    pub fn marginal_density_x_closed_form(&self, x: f64) -> Result<f64> {
        self.require_strict()?;
        let px = self.axis_x(x)?;
        let e = self.m.entries();
        let c = e[0][1] + e[1][1] * px.u;
        let lg = crate::numerics::log_gamma(c)
            .map_err(|_| Error::ConditionalNonexistence(format!("shape {c} of Y given x = {x} is not positive")))?;
        Ok((e[0][0] - px.u + lg + e[1][0] * px.u + px.v).exp())
    }

    /// Mirror of [`Self::marginal_density_x_closed_form`].
    pub fn marginal_density_y_closed_form(&self, y: f64) -> Result<f64> {
        self.require_strict()?;
        let py = self.axis_y(y)?;
        let e = self.m.entries();
        let c = e[1][0] + e[1][1] * py.u;
        let lg = crate::numerics::log_gamma(c)
            .map_err(|_| Error::ConditionalNonexistence(format!("shape {c} of X given y = {y} is not positive")))?;
        Ok((e[0][0] - py.u + lg + e[0][1] * py.u + py.v).exp())
    }

    fn require_strict(&self) -> Result<()> {
        if self.m.is_strict_submodel() {
            Ok(())
        } else {
            Err(Error::config("closed form requires the strict submodel"))
        }
    }

    /// The two shape functions of the strict submodel.
    pub fn conditional_spec(&self) -> Result<ConditionalSpec<B>>
    where
        B: 'static,
    {
        self.require_strict()?;
        let e = self.m.entries();
        let (bx, by) = (self.baseline_x.clone(), self.baseline_y.clone());
        let (x0, y0, c) = (e[1][0], e[0][1], e[1][1]);
        let (bx2, by2) = (bx.clone(), by.clone());
        Ok(ConditionalSpec::new(
            bx,
            by,
            move |y| x0 + c * by2.log_neg_log_cdf(y),
            move |x| y0 + c * bx2.log_neg_log_cdf(x),
        ))
    }
}

#[cfg(test)]
mod tests;
