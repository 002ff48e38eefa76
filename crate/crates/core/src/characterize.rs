//! Numerical checks of the family's characterization identities.
//!
//! Each check evaluates two routes to the same quantity on a grid and returns
//! the residuals. Conditional expectations over `{X ≥ x}` are integrals over
//! `s = ln(-ln G(X)) ≤ ln(-ln G(x))` against the law of `s`.

use serde::Serialize;

use crate::baseline::BaselineModel;
use crate::error::{Error, Result};
use crate::numerics::{derivative5, gamma_pq, integrate_1d, Integrator, QuadratureSpec};
use crate::rbg::RbgDistribution;

/// Two evaluation routes compared on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub grid: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub max_abs_residual: f64,
    pub tolerance_used: f64,
    /// Grid indices left out, for example where a stencil leaves the support.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<usize>,
}

impl ResidualReport {
    pub fn new(grid: Vec<f64>, lhs: Vec<f64>, rhs: Vec<f64>, tolerance: f64) -> Self {
        let max_abs_residual = lhs
            .iter()
            .zip(&rhs)
            .map(|(l, r)| (l - r).abs())
            .fold(0.0, f64::max);
        ResidualReport {
            grid,
            lhs,
            rhs,
            max_abs_residual,
            tolerance_used: tolerance,
            skipped: Vec::new(),
        }
    }

    pub fn pass(&self) -> bool {
        self.max_abs_residual <= self.tolerance_used
    }
}

pub const IDENTITY_TOL: f64 = 1e-10;
pub const QUADRATURE_TOL: f64 = 1e-7;
pub const ODE_TOL: f64 = 1e-5;
pub const SHAPE_TWO_TOL: f64 = 1e-6;
pub const LORENZ_TOL: f64 = 1e-6;
pub const ODE_STEP: f64 = 1e-4;

fn check_spec() -> QuadratureSpec {
    QuadratureSpec::new(15, 1e-15, 1e-13, 1000).expect("static quadrature spec")
}

/// `∫ q(x) f(x) dx` over `{X ≥ x}` where `-ln G(x) = upper_t`.
fn upper_tail_expectation<B, Q>(d: &RbgDistribution<B>, integrator: &Integrator, upper_t: f64, q: Q) -> Result<f64>
where
    B: BaselineModel,
    Q: Fn(f64) -> f64,
{
    let b = d.baseline();
    integrator.integrate(
        |s| {
            let log_mass = d.log_density_log_transform(s);
            if log_mass == f64::NEG_INFINITY {
                return 0.0;
            }
            let x = b.from_neg_log_cdf(s.exp());
            if !b.in_support(x) {
                return 0.0;
            }
            q(x) * log_mass.exp()
        },
        f64::NEG_INFINITY,
        upper_t.ln(),
    )
}

fn with_index(i: usize, e: Error) -> Error {
    match e {
        Error::NonConvergence { context, estimate, bound } => Error::NonConvergence {
            context: format!("{context} at grid index {i}"),
            estimate,
            bound,
        },
        other => other,
    }
}

fn check_grid<B: BaselineModel>(d: &RbgDistribution<B>, grid: &[f64]) -> Result<()> {
    for (i, &x) in grid.iter().enumerate() {
        if !d.baseline().in_support(x) {
            return Err(Error::domain(format!("grid point {x} (index {i}) outside the support interior")));
        }
        if d.survival(x)? <= 1e-10 {
            return Err(Error::domain(format!("survival too small at grid point {x} (index {i})")));
        }
    }
    Ok(())
}

/// Truncated-moment identity with `q₂ = 1/G`, `q₁ = q₂·(-ln G)` and
/// `η(x) = a/(a+1)·(-ln G(x))`, plus the two closed forms of the
/// unnormalized tail integrals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedMomentReport {
    /// `E[q₁ | X ≥ x]` against `η(x) E[q₂ | X ≥ x]`.
    pub identity: ResidualReport,
    /// `(1 - F) E[q₂ | X ≥ x]` against `t^a / (a Γ(a))`.
    pub q2_closed_form: ResidualReport,
    /// `(1 - F) E[q₁ | X ≥ x]` against `t^{a+1} / ((a+1) Γ(a))`.
    pub q1_closed_form: ResidualReport,
    /// `η(x) q₂(x) - q₁(x)` on the grid.
    pub gap: Vec<f64>,
}

impl TruncatedMomentReport {
    pub fn pass(&self) -> bool {
        self.identity.pass()
            && self.q2_closed_form.pass()
            && self.q1_closed_form.pass()
            && self.gap.iter().all(|&g| g < 0.0)
    }
}

pub fn truncated_moment_check<B: BaselineModel>(d: &RbgDistribution<B>, grid: &[f64]) -> Result<TruncatedMomentReport> {
    check_grid(d, grid)?;
    let integrator = Integrator::new(check_spec())?;
    let a = d.shape();
    let b = d.baseline();
    let q2 = |x: f64| 1.0 / b.cdf(x);
    let q1 = |x: f64| b.neg_log_cdf(x) / b.cdf(x);
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    let mut m2 = Vec::new();
    let mut m2_closed = Vec::new();
    let mut m1 = Vec::new();
    let mut m1_closed = Vec::new();
    let mut gap = Vec::new();
    for (i, &x) in grid.iter().enumerate() {
        let t = b.neg_log_cdf(x);
        let surv = d.survival(x)?;
        let i2 = upper_tail_expectation(d, &integrator, t, q2).map_err(|e| with_index(i, e))?;
        let i1 = upper_tail_expectation(d, &integrator, t, q1).map_err(|e| with_index(i, e))?;
        let eta = a / (a + 1.0) * t;
        lhs.push(i1 / surv);
        rhs.push(eta * i2 / surv);
        m2.push(i2);
        m2_closed.push((a * t.ln() - a.ln() - d.log_gamma_shape()).exp());
        m1.push(i1);
        m1_closed.push(((a + 1.0) * t.ln() - (a + 1.0).ln() - d.log_gamma_shape()).exp());
        gap.push(eta * q2(x) - q1(x));
    }
    Ok(TruncatedMomentReport {
        identity: ResidualReport::new(grid.to_vec(), lhs, rhs, QUADRATURE_TOL),
        q2_closed_form: ResidualReport::new(grid.to_vec(), m2, m2_closed, QUADRATURE_TOL),
        q1_closed_form: ResidualReport::new(grid.to_vec(), m1, m1_closed, QUADRATURE_TOL),
        gap,
    })
}

/// `E[ψ(X₁:ₙ) | X₁:ₙ > t]` against `ψ(t)/2` with `ψ = γ(a, -ln G)ⁿ`.
///
/// Grid points at or below the support's lower edge condition on nothing.
pub fn orderstat_truncated_moment_check<B: BaselineModel>(
    d: &RbgDistribution<B>,
    n: usize,
    t_grid: &[f64],
) -> Result<ResidualReport> {
    if n == 0 {
        return Err(Error::domain("sample size must be at least 1"));
    }
    let integrator = Integrator::new(check_spec())?;
    let b = d.baseline();
    let a = d.shape();
    let nf = n as i32;
    let gamma_a = d.log_gamma_shape().exp();
    let psi = |x: f64| -> f64 {
        let t = b.neg_log_cdf(x);
        if t == f64::INFINITY {
            return gamma_a.powi(nf);
        }
        (gamma_pq(a, t).0 * gamma_a).powi(nf)
    };
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    for (i, &t) in t_grid.iter().enumerate() {
        if !t.is_finite() {
            return Err(Error::domain(format!("grid point {t} (index {i}) is not finite")));
        }
        let surv = d.survival(t)?;
        if surv <= 1e-10 {
            return Err(Error::domain(format!("survival too small at grid point {t} (index {i})")));
        }
        let upper = b.neg_log_cdf(t);
        // Density of the minimum: n f S^{n-1}.
        let integral = upper_tail_expectation(d, &integrator, upper, |x| {
            let s = d.survival(x).unwrap_or(0.0);
            psi(x) * n as f64 * s.powi(nf - 1)
        })
        .map_err(|e| with_index(i, e))?;
        lhs.push(integral / surv.powi(nf));
        rhs.push(0.5 * psi(t));
    }
    Ok(ResidualReport::new(t_grid.to_vec(), lhs, rhs, QUADRATURE_TOL))
}

/// Hazard identity and its differential form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HazardReport {
    /// `f/(1-F)` against `g (-ln G)^{a-1} / γ(a, -ln G)`.
    pub closed_form: ResidualReport,
    /// `h' - (g'/g) h` against `g · d/dx[(-ln G)^{a-1} / γ(a, -ln G)]`, both
    /// derivatives by five-point differences.
    pub ode: ResidualReport,
    /// Shape 2 only: `g · d/dx[h/g]` by differences against the explicit
    /// `g²/γ² [(ln G)² - γ/G]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape_two: Option<ResidualReport>,
}

impl HazardReport {
    pub fn pass(&self) -> bool {
        self.closed_form.pass() && self.ode.pass() && self.shape_two.as_ref().is_none_or(|r| r.pass())
    }
}

pub fn hazard_identity_check<B: BaselineModel>(d: &RbgDistribution<B>, grid: &[f64]) -> Result<HazardReport> {
    check_grid(d, grid)?;
    let b = d.baseline();
    let a = d.shape();
    let gamma_a = d.log_gamma_shape().exp();
    let kernel = |x: f64| -> Result<f64> {
        let t = b.neg_log_cdf(x);
        Ok(t.powf(a - 1.0) / (gamma_pq(a, t).0 * gamma_a))
    };
    let hazard_over_g = |x: f64| -> Result<f64> { Ok(d.hazard(x)? / b.pdf(x)) };

    let mut h_lhs = Vec::new();
    let mut h_rhs = Vec::new();
    let mut ode_grid = Vec::new();
    let mut ode_lhs = Vec::new();
    let mut ode_rhs = Vec::new();
    let mut two_lhs = Vec::new();
    let mut two_rhs = Vec::new();
    let mut skipped = Vec::new();
    for (i, &x) in grid.iter().enumerate() {
        h_lhs.push(d.hazard(x)?);
        h_rhs.push(d.hazard_closed_form(x)?);

        let step = ODE_STEP;
        if !(b.in_support(x - 2.0 * step) && b.in_support(x + 2.0 * step)) {
            skipped.push(i);
            continue;
        }
        let g = b.pdf(x);
        let h = d.hazard(x)?;
        let dh = derivative5(|z| d.hazard(z), x, step)?;
        let dk = derivative5(kernel, x, step)?;
        ode_grid.push(x);
        ode_lhs.push(dh - b.dlog_pdf(x) * h);
        ode_rhs.push(g * dk);
        if a == 2.0 {
            let t = b.neg_log_cdf(x);
            let big_g = b.cdf(x);
            let lower = gamma_pq(2.0, t).0;
            two_lhs.push(g * derivative5(hazard_over_g, x, step)?);
            two_rhs.push(g * g / (lower * lower) * (t * t - lower / big_g));
        }
    }
    let mut ode = ResidualReport::new(ode_grid.clone(), ode_lhs, ode_rhs, ODE_TOL);
    ode.skipped = skipped.clone();
    let shape_two = (a == 2.0).then(|| {
        let mut r = ResidualReport::new(ode_grid, two_lhs, two_rhs, SHAPE_TWO_TOL);
        r.skipped = skipped;
        r
    });
    Ok(HazardReport {
        closed_form: ResidualReport::new(grid.to_vec(), h_lhs, h_rhs, IDENTITY_TOL),
        ode,
        shape_two,
    })
}

/// `GL(p) = ∫₀ᵖ F⁻¹(t) dt` at each level of `p_grid`.
pub fn generalized_lorenz_curve<B: BaselineModel>(d: &RbgDistribution<B>, p_grid: &[f64]) -> Result<Vec<f64>> {
    if !d.baseline().support().0.is_finite() {
        return Err(Error::NonIntegrable(
            "quantile function is not integrable at 0 for a support unbounded below".into(),
        ));
    }
    let mut order: Vec<usize> = (0..p_grid.len()).collect();
    for &p in p_grid {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("Lorenz level {p} outside (0, 1)")));
        }
    }
    order.sort_by(|&i, &j| p_grid[i].total_cmp(&p_grid[j]));
    let spec = QuadratureSpec::new(15, 1e-13, 1e-11, 500)?;
    let mut out = vec![0.0; p_grid.len()];
    let mut acc = 0.0;
    let mut last = 0.0;
    for i in order {
        let p = p_grid[i];
        if p > last {
            let mut failure = None;
            let piece = integrate_1d(
                |t| match d.quantile(t) {
                    Ok(q) => q,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                },
                last,
                p,
                &spec,
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            acc += piece;
            last = p;
        }
        out[i] = acc;
    }
    Ok(out)
}

/// Which curve lies above across the whole grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LorenzDirection {
    /// `GL` of the smaller shape is everywhere at least that of the larger.
    SmallerShapeDominates,
    LargerShapeDominates,
    Identical,
    Crossing,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LorenzReport {
    /// `lhs` is the curve for the smaller shape, `rhs` for the larger.
    pub curves: ResidualReport,
    pub min_difference: f64,
    pub max_difference: f64,
    pub direction: LorenzDirection,
}

impl LorenzReport {
    /// True when the difference keeps one sign across the grid.
    pub fn constant_sign(&self) -> bool {
        self.direction != LorenzDirection::Crossing
    }
}

pub fn lorenz_order_check<B: BaselineModel + PartialEq>(
    smaller: &RbgDistribution<B>,
    larger: &RbgDistribution<B>,
    p_grid: &[f64],
) -> Result<LorenzReport> {
    if smaller.baseline() != larger.baseline() {
        return Err(Error::config("Lorenz comparison needs a common baseline"));
    }
    if smaller.shape() > larger.shape() {
        return Err(Error::config(format!(
            "first shape {} must not exceed second shape {}",
            smaller.shape(),
            larger.shape()
        )));
    }
    let gl_x = generalized_lorenz_curve(smaller, p_grid)?;
    let gl_y = generalized_lorenz_curve(larger, p_grid)?;
    let diffs: Vec<f64> = gl_x.iter().zip(&gl_y).map(|(x, y)| x - y).collect();
    let min_difference = diffs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_difference = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = LORENZ_TOL;
    let direction = if min_difference >= -tol && max_difference <= tol {
        LorenzDirection::Identical
    } else if min_difference >= -tol {
        LorenzDirection::SmallerShapeDominates
    } else if max_difference <= tol {
        LorenzDirection::LargerShapeDominates
    } else {
        LorenzDirection::Crossing
    };
    Ok(LorenzReport {
        curves: ResidualReport::new(p_grid.to_vec(), gl_x, gl_y, tol),
        min_difference,
        max_difference,
        direction,
    })
}

/// Quantiles of `d` at the levels `0.05, …, 0.95`.
pub fn quantile_grid<B: BaselineModel>(d: &RbgDistribution<B>, points: usize) -> Result<Vec<f64>> {
    (0..points)
        .map(|i| {
            let p = 0.05 + 0.9 * i as f64 / (points.max(2) - 1) as f64;
            d.quantile(p)
        })
        .collect()
}

/// Baseline quantiles at the levels `0.05, …, 0.95`.
pub fn baseline_quantile_grid<B: BaselineModel>(b: &B, points: usize) -> Result<Vec<f64>> {
    (0..points)
        .map(|i| {
            let p = 0.05 + 0.9 * i as f64 / (points.max(2) - 1) as f64;
            b.quantile(p)
        })
        .collect()
}

/// One named check from [`verification_suite`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteEntry {
    pub check: String,
    pub max_abs_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn entry(check: &str, r: &ResidualReport) -> SuiteEntry {
    SuiteEntry {
        check: check.to_string(),
        max_abs_residual: r.max_abs_residual,
        tolerance: r.tolerance_used,
        pass: r.pass(),
    }
}

/// Runs every characterization check for one distribution.
pub fn verification_suite<B: BaselineModel + Clone + PartialEq>(d: &RbgDistribution<B>) -> Result<Vec<SuiteEntry>> {
    let grid = quantile_grid(d, 19)?;
    let mut out = Vec::new();

    let tm = truncated_moment_check(d, &grid)?;
    out.push(entry("truncated-moment", &tm.identity));
    out.push(entry("truncated-moment-q2-closed-form", &tm.q2_closed_form));
    out.push(entry("truncated-moment-q1-closed-form", &tm.q1_closed_form));
    let worst_gap = tm.gap.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    out.push(SuiteEntry {
        check: "truncated-moment-strict-gap".into(),
        max_abs_residual: worst_gap.max(0.0),
        tolerance: 0.0,
        pass: worst_gap < 0.0,
    });

    let t_grid: Vec<f64> = grid.iter().step_by(2).cloned().collect();
    for n in 1..=3 {
        let r = orderstat_truncated_moment_check(d, n, &t_grid)?;
        out.push(entry(&format!("orderstat-truncated-moment-n{n}"), &r));
    }

    let hz = hazard_identity_check(d, &baseline_quantile_grid(d.baseline(), 19)?)?;
    out.push(entry("hazard-closed-form", &hz.closed_form));
    out.push(entry("hazard-ode", &hz.ode));
    if let Some(r) = &hz.shape_two {
        out.push(entry("hazard-ode-shape-two", r));
    }

    let levels: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
    let other = RbgDistribution::new(d.shape() * 2.0, d.baseline().clone())?;
    let lz = lorenz_order_check(d, &other, &levels)?;
    out.push(SuiteEntry {
        check: "lorenz-constant-sign".into(),
        max_abs_residual: lz.min_difference.abs().min(lz.max_difference.abs()),
        tolerance: LORENZ_TOL,
        pass: lz.constant_sign(),
    });
    Ok(out)
}
