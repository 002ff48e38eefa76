//! Solvers for the likelihood equations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::baseline::BaselineModel;
use crate::error::{Error, Result};
use crate::numerics::QuadratureSpec;
use crate::rbg::fit_univariate_a;

use super::{covariance_from_information, sufficient_stats, LikelihoodModel, SufficientStats, ThetaVector, THETA_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    /// One-dimensional root solves on each residual in turn.
    Cyclic,
    /// Fisher-scoring ascent with a backtracking line search on `ℓ`.
    Gradient,
}

impl std::str::FromStr for FitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cyclic" => Ok(FitMethod::Cyclic),
            "gradient" => Ok(FitMethod::Gradient),
            other => Err(Error::config(format!("unknown fit method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub method: FitMethod,
    /// Parameters held at their initial value are `false`.
    pub free: [bool; THETA_COUNT],
    /// One-based parameter order of a cyclic sweep.
    pub sweep_order: Vec<usize>,
    /// Bound on `max |residual|` over the free parameters.
    pub tolerance: f64,
    /// Sweeps (cyclic) or scoring steps (gradient).
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            method: FitMethod::Gradient,
            free: [true; THETA_COUNT],
            sweep_order: vec![8, 1, 2, 3, 4, 5, 6, 7],
            tolerance: 1e-6,
            max_iterations: 200,
        }
    }
}

impl FitOptions {
    pub fn with_method(method: FitMethod) -> Self {
        FitOptions {
            method,
            ..FitOptions::default()
        }
    }

    /// Frees exactly the listed one-based parameters.
    pub fn with_free(mut self, free: &[usize]) -> Self {
        self.free = [false; THETA_COUNT];
        for &k in free {
            self.free[k - 1] = true;
        }
        self
    }

    fn validate(&self) -> Result<()> {
        if !self.free.iter().any(|&f| f) {
            return Err(Error::config("at least one parameter must be free"));
        }
        if self.sweep_order.iter().any(|&k| k == 0 || k > THETA_COUNT) {
            return Err(Error::config(format!("sweep order {:?} must use indices 1..=8", self.sweep_order)));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::config("fit tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub theta_hat: ThetaVector,
    /// `I(θ̂)⁻¹/n` on the free block, zero elsewhere; `None` when singular.
    pub covariance: Option<[[f64; THETA_COUNT]; THETA_COUNT]>,
    pub standard_errors: Option<[f64; THETA_COUNT]>,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `max |E[S] − S̄|` over the free parameters at `θ̂`.
    pub gradient_norm: f64,
    pub method: FitMethod,
    pub free: [bool; THETA_COUNT],
    /// Rejected steps and other events, in order.
    pub trace: Vec<String>,
}

/// Independence start: shapes from the univariate fits, unit `ln g`
/// coefficients and no interaction.
pub fn default_init<B: BaselineModel>(data: &[(f64, f64)], bx: &B, by: &B) -> Result<ThetaVector> {
    let xs: Vec<f64> = data.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = data.iter().map(|p| p.1).collect();
    let ax = fit_univariate_a(&xs, bx)?;
    let ay = fit_univariate_a(&ys, by)?;
    Ok(ThetaVector([ay, 1.0, ax, 0.0, 0.0, 1.0, 0.0, 0.0]))
}

/// Fits `θ` to `data`; a missing `init` uses [`default_init`].
pub fn fit_mle<B: BaselineModel + Clone>(
    data: &[(f64, f64)],
    bx: &B,
    by: &B,
    init: Option<ThetaVector>,
    options: &FitOptions,
    quad: QuadratureSpec,
) -> Result<FitResult> {
    let stats = sufficient_stats(data, bx, by)?;
    let init = match init {
        Some(t) => t,
        None => default_init(data, bx, by)?,
    };
    LikelihoodModel::new(bx.clone(), by.clone(), quad)?.fit(&stats, init, options)
}

fn free_norm(r: &[f64; THETA_COUNT], free: &[bool; THETA_COUNT]) -> f64 {
    (0..THETA_COUNT).filter(|&j| free[j]).map(|j| r[j].abs()).fold(0.0, f64::max)
}

/// Errors that mean "outside the integrable region" rather than a bug.
fn is_region_error(e: &Error) -> bool {
    matches!(e, Error::NonIntegrable(_) | Error::NonConvergence { .. } | Error::Domain(_))
}

impl<B: BaselineModel + Clone> LikelihoodModel<B> {
    /// Solves the likelihood equations from `init`.
    pub fn fit(&self, stats: &SufficientStats, init: ThetaVector, options: &FitOptions) -> Result<FitResult> {
        options.validate()?;
        self.log_psi(&init)
            .map_err(|e| Error::NonIntegrable(format!("initial theta is not integrable: {e}")))?;
        let mut trace = Vec::new();
        let (theta, iterations) = match options.method {
            FitMethod::Gradient => self.score(stats, init, options, &mut trace)?,
            FitMethod::Cyclic => self.cyclic(stats, init, options, &mut trace)?,
        };
        let residuals = self.residuals(&theta, stats)?;
        let gradient_norm = free_norm(&residuals, &options.free);
        let info = self.fisher_information(&theta)?;
        let covariance = covariance_from_information(&info, &options.free, stats.n);
        if covariance.is_none() {
            trace.push("Fisher information on the free block is singular; covariance unavailable".into());
        }
        let standard_errors = covariance.map(|c| {
            let mut se = [0.0; THETA_COUNT];
            for j in 0..THETA_COUNT {
                se[j] = c[j][j].max(0.0).sqrt();
            }
            se
        });
        Ok(FitResult {
            theta_hat: theta,
            covariance,
            standard_errors,
            loglik: self.log_likelihood(&theta, stats)?,
            iterations,
            converged: gradient_norm <= options.tolerance,
            gradient_norm,
            method: options.method,
            free: options.free,
            trace,
        })
    }

    fn score(
        &self,
        stats: &SufficientStats,
        mut theta: ThetaVector,
        options: &FitOptions,
        trace: &mut Vec<String>,
    ) -> Result<(ThetaVector, usize)> {
        let idx: Vec<usize> = (0..THETA_COUNT).filter(|&j| options.free[j]).collect();
        let mut ll = self.log_likelihood(&theta, stats)?;
        for it in 0..options.max_iterations {
            let r = self.residuals(&theta, stats)?;
            if free_norm(&r, &options.free) <= options.tolerance {
                return Ok((theta, it));
            }
            let info = self.fisher_information(&theta)?;
            let k = idx.len();
            let block = DMatrix::from_fn(k, k, |a, b| info[idx[a]][idx[b]]);
            let rhs = DVector::from_fn(k, |a, _| -r[idx[a]]);
            let step = match block.cholesky() {
                Some(c) => c.solve(&rhs),
                None => {
                    trace.push(format!("iteration {it}: information not positive definite, using the raw gradient"));
                    rhs
                }
            };
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let mut cand = theta;
                for (a, &j) in idx.iter().enumerate() {
                    cand.0[j] += alpha * step[a];
                }
                // The moments are computed on acceptance so a point whose mass
                // integral converges but whose moments do not is rejected too.
                match self.log_likelihood(&cand, stats) {
                    Ok(l) if l >= ll - 1e-10 * ll.abs().max(1.0) => match self.fisher_information(&cand) {
                        Ok(_) => {
                            theta = cand;
                            ll = l;
                            accepted = true;
                            break;
                        }
                        Err(e) if is_region_error(&e) => {
                            trace.push(format!("iteration {it}: step {alpha} rejected: {e}"));
                        }
                        Err(e) => return Err(e),
                    },
                    Ok(_) => {}
                    Err(e) if is_region_error(&e) => {
                        trace.push(format!("iteration {it}: step {alpha} rejected: {e}"));
                    }
                    Err(e) => return Err(e),
                }
                alpha *= 0.5;
            }
            if !accepted {
                trace.push(format!("iteration {it}: line search failed"));
                return Ok((theta, it + 1));
            }
        }
        Ok((theta, options.max_iterations))
    }

    fn cyclic(
        &self,
        stats: &SufficientStats,
        mut theta: ThetaVector,
        options: &FitOptions,
        trace: &mut Vec<String>,
    ) -> Result<(ThetaVector, usize)> {
        for sweep in 0..options.max_iterations {
            let r = self.residuals(&theta, stats)?;
            if free_norm(&r, &options.free) <= options.tolerance {
                return Ok((theta, sweep));
            }
            let info = self.fisher_information(&theta)?;
            for &k in &options.sweep_order {
                let j = k - 1;
                if options.free[j] {
                    theta = self.solve_coordinate(stats, theta, j, info[j][j], options.tolerance, sweep, trace)?;
                }
            }
        }
        Ok((theta, options.max_iterations))
    }

    /// Root of the increasing map `θ_j ↦ residual_j` by bracketing and
    /// Illinois-modified secant steps.
    #[allow(clippy::too_many_arguments)]
    fn solve_coordinate(
        &self,
        stats: &SufficientStats,
        theta: ThetaVector,
        j: usize,
        variance: f64,
        tolerance: f64,
        sweep: usize,
        trace: &mut Vec<String>,
    ) -> Result<ThetaVector> {
        let target = 1e-2 * tolerance;
        let eval = |t: f64| -> Result<f64> {
            let mut cand = theta;
            cand.0[j] = t;
            Ok(self.residuals(&cand, stats)?[j])
        };
        let mut a = theta.0[j];
        let mut fa = eval(a)?;
        if fa.abs() <= target {
            return Ok(theta);
        }
        let mut h = -fa / variance.max(1e-8);
        // Expand until the residual changes sign, shrinking on rejected points.
        let (mut b, mut fb);
        let mut attempts = 0;
        loop {
            attempts += 1;
            if attempts > 80 {
                trace.push(format!("sweep {sweep}: no bracket for theta_{} near {a}", j + 1));
                let mut out = theta;
                out.0[j] = a;
                return Ok(out);
            }
            let t = a + h;
            match eval(t) {
                Ok(ft) if ft.signum() != fa.signum() => {
                    b = t;
                    fb = ft;
                    break;
                }
                Ok(ft) => {
                    a = t;
                    fa = ft;
                    if fa.abs() <= target {
                        let mut out = theta;
                        out.0[j] = a;
                        return Ok(out);
                    }
                    h *= 2.0;
                }
                Err(e) if is_region_error(&e) => {
                    trace.push(format!("sweep {sweep}: theta_{} = {t} rejected: {e}", j + 1));
                    h *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
        let mut side = 0i8;
        for _ in 0..100 {
            let t = (a * fb - b * fa) / (fb - fa);
            let ft = eval(t)?;
            if ft.abs() <= target || (b - a).abs() <= 1e-13 * (1.0 + t.abs()) {
                let mut out = theta;
                out.0[j] = t;
                return Ok(out);
            }
            if ft.signum() == fb.signum() {
                b = t;
                fb = ft;
                if side == -1 {
                    fa *= 0.5;
                }
                side = -1;
            } else {
                a = t;
                fa = ft;
                if side == 1 {
                    fb *= 0.5;
                }
                side = 1;
            }
        }
        let mut out = theta;
        out.0[j] = if fa.abs() < fb.abs() { a } else { b };
        Ok(out)
    }
}
