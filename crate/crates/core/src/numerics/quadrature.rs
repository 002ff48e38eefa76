//! Globally adaptive Gauss–Legendre quadrature on finite and infinite
//! intervals, scalar and vector valued, plus tensorized 2-D integration.
//!
//! Each panel is integrated with an `n`-point rule and again as two halves;
//! the difference is the panel's error estimate and the two-half sum is the
//! accepted value. The panel with the largest tolerance-scaled error is
//! bisected until the summed error meets `max(abs_tol, rel_tol·|I|)` for every
//! component. Infinite endpoints are mapped onto a finite parameter interval:
//!
//! * `[a, ∞)`: `x = a + t/(1-t)`, `t ∈ [0, 1)`
//! * `(-∞, b]`: `x = b - (1-t)/t`, `t ∈ (0, 1]`
//! * `(-∞, ∞)`: `x = t/(1-t²)`, `t ∈ (-1, 1)`

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node count and stopping rule for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub node_count: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_refinements: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            node_count: 15,
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_refinements: 400,
        }
    }
}

impl QuadratureSpec {
    pub fn new(node_count: usize, abs_tol: f64, rel_tol: f64, max_refinements: usize) -> Result<Self> {
        let spec = QuadratureSpec {
            node_count,
            abs_tol,
            rel_tol,
            max_refinements,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count < 2 {
            return Err(Error::config(format!(
                "quadrature node_count must be at least 2, got {}",
                self.node_count
            )));
        }
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.abs_tol) || !ok(self.rel_tol) {
            return Err(Error::config("quadrature tolerances must be finite and non-negative"));
        }
        if self.abs_tol == 0.0 && self.rel_tol == 0.0 {
            return Err(Error::config("at least one quadrature tolerance must be positive"));
        }
        Ok(())
    }

    /// Same rule with both tolerances replaced.
    pub fn with_tolerance(self, abs_tol: f64, rel_tol: f64) -> Self {
        QuadratureSpec {
            abs_tol,
            rel_tol,
            ..self
        }
    }

    fn tightened(self, factor: f64) -> Self {
        QuadratureSpec {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            ..self
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Applies the rule on `[a, b]` to a vector-valued integrand, adding into `out`.
    fn apply<F>(&self, f: &mut F, a: f64, b: f64, scratch: &mut [f64], out: &mut [f64]) -> Result<()>
    where
        F: FnMut(f64, &mut [f64]) -> Result<()>,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (z, w) in self.nodes.iter().zip(&self.weights) {
            let x = mid + half * z;
            scratch.iter_mut().for_each(|v| *v = 0.0);
            f(x, scratch)?;
            for (o, s) in out.iter_mut().zip(scratch.iter()) {
                if !s.is_finite() {
                    return Err(Error::domain(format!("non-finite integrand value at {x}")));
                }
                *o += w * half * s;
            }
        }
        Ok(())
    }
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Interval endpoint, possibly infinite.
#[derive(Debug, Clone, Copy)]
enum Mapping {
    Finite,
    UpperInfinite(f64),
    LowerInfinite(f64),
    Whole,
}

impl Mapping {
    fn classify(lower: f64, upper: f64) -> Result<(Mapping, f64, f64)> {
        if lower.is_nan() || upper.is_nan() {
            return Err(Error::domain("integration limits must not be NaN"));
        }
        match (lower.is_finite(), upper.is_finite()) {
            (true, true) => Ok((Mapping::Finite, lower, upper)),
            (true, false) if upper > 0.0 => Ok((Mapping::UpperInfinite(lower), 0.0, 1.0)),
            (false, true) if lower < 0.0 => Ok((Mapping::LowerInfinite(upper), 0.0, 1.0)),
            (false, false) if lower < 0.0 && upper > 0.0 => Ok((Mapping::Whole, -1.0, 1.0)),
            _ => Err(Error::domain(format!("unsupported integration limits ({lower}, {upper})"))),
        }
    }

    /// Returns `(x, dx/dt)`.
    #[inline]
    fn map(self, t: f64) -> (f64, f64) {
        match self {
            Mapping::Finite => (t, 1.0),
            Mapping::UpperInfinite(a) => {
                let r = 1.0 - t;
                (a + t / r, 1.0 / (r * r))
            }
            Mapping::LowerInfinite(b) => (b - (1.0 - t) / t, 1.0 / (t * t)),
            Mapping::Whole => {
                let r = 1.0 - t * t;
                (t / r, (1.0 + t * t) / (r * r))
            }
        }
    }

    fn initial_panels(self) -> usize {
        match self {
            Mapping::Finite => 1,
            _ => 4,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: Vec<f64>,
    halves: [Vec<f64>; 2],
}

/// Adaptive integrator bound to one rule so nested calls reuse the nodes.
#[derive(Debug, Clone)]
pub struct Integrator {
    rule: GaussLegendre,
    spec: QuadratureSpec,
}

impl Integrator {
    pub fn new(spec: QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Integrator {
            rule: GaussLegendre::new(spec.node_count),
            spec,
        })
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// Scalar integral over `(lower, upper)`; endpoints may be infinite.
    pub fn integrate<F>(&self, mut f: F, lower: f64, upper: f64) -> Result<f64>
    where
        F: FnMut(f64) -> f64,
    {
        let v = self.integrate_vec(
            |x, out| {
                out[0] = f(x);
                Ok(())
            },
            1,
            lower,
            upper,
        )?;
        Ok(v[0])
    }

    /// Fallible scalar integral; an `Err` from `f` aborts the integration.
    pub fn try_integrate<F>(&self, mut f: F, lower: f64, upper: f64) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let v = self.integrate_vec(
            |x, out| {
                out[0] = f(x)?;
                Ok(())
            },
            1,
            lower,
            upper,
        )?;
        Ok(v[0])
    }

    /// Vector-valued integral of dimension `dim`.
    pub fn integrate_vec<F>(&self, mut f: F, dim: usize, lower: f64, upper: f64) -> Result<Vec<f64>>
    where
        F: FnMut(f64, &mut [f64]) -> Result<()>,
    {
        if lower == upper {
            return Ok(vec![0.0; dim]);
        }
        let (sign, lo, hi) = if lower > upper { (-1.0, upper, lower) } else { (1.0, lower, upper) };
        let (mapping, t0, t1) = Mapping::classify(lo, hi)?;
        let mut mapped = |t: f64, out: &mut [f64]| -> Result<()> {
            let (x, jac) = mapping.map(t);
            f(x, out)?;
            for v in out.iter_mut() {
                // Zero contributions stay zero even where the Jacobian blows up.
                if *v != 0.0 {
                    *v *= jac;
                }
            }
            Ok(())
        };
        let mut result = self.adaptive(&mut mapped, dim, t0, t1, mapping.initial_panels())?;
        if sign < 0.0 {
            result.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(result)
    }

    fn panel<F>(&self, f: &mut F, dim: usize, a: f64, b: f64, whole: Option<Vec<f64>>) -> Result<Panel>
    where
        F: FnMut(f64, &mut [f64]) -> Result<()>,
    {
        let mut scratch = vec![0.0; dim];
        let coarse = match whole {
            Some(v) => v,
            None => {
                let mut v = vec![0.0; dim];
                self.rule.apply(f, a, b, &mut scratch, &mut v)?;
                v
            }
        };
        let m = 0.5 * (a + b);
        let mut left = vec![0.0; dim];
        let mut right = vec![0.0; dim];
        self.rule.apply(f, a, m, &mut scratch, &mut left)?;
        self.rule.apply(f, m, b, &mut scratch, &mut right)?;
        let value: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
        let error = value.iter().zip(&coarse).map(|(v, c)| (v - c).abs()).collect();
        Ok(Panel {
            a,
            b,
            value,
            error,
            halves: [left, right],
        })
    }

    fn adaptive<F>(&self, f: &mut F, dim: usize, a: f64, b: f64, initial: usize) -> Result<Vec<f64>>
    where
        F: FnMut(f64, &mut [f64]) -> Result<()>,
    {
        let mut panels = Vec::with_capacity(initial + 16);
        let width = (b - a) / initial as f64;
        for k in 0..initial {
            let pa = a + width * k as f64;
            let pb = if k + 1 == initial { b } else { pa + width };
            panels.push(self.panel(f, dim, pa, pb, None)?);
        }

        let mut refinements = 0usize;
        loop {
            let mut total = vec![0.0; dim];
            let mut err = vec![0.0; dim];
            for p in &panels {
                for i in 0..dim {
                    total[i] += p.value[i];
                    err[i] += p.error[i];
                }
            }
            let tol: Vec<f64> = total
                .iter()
                .map(|v| self.spec.abs_tol.max(self.spec.rel_tol * v.abs()))
                .collect();
            if err.iter().zip(&tol).all(|(e, t)| e <= t) {
                return Ok(total);
            }
            if refinements >= self.spec.max_refinements {
                let worst = (0..dim)
                    .max_by(|&i, &j| (err[i] / tol[i]).total_cmp(&(err[j] / tol[j])))
                    .unwrap_or(0);
                return Err(Error::non_convergence("adaptive quadrature", total[worst], err[worst]));
            }
            let (idx, _) = panels
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let score = p
                        .error
                        .iter()
                        .zip(&tol)
                        .map(|(e, t)| e / t)
                        .fold(0.0_f64, f64::max);
                    (k, score)
                })
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .expect("at least one panel");
            let p = panels.swap_remove(idx);
            let m = 0.5 * (p.a + p.b);
            if !(m > p.a && m < p.b) {
                // Panel can no longer be split in floating point.
                let e = p.error.iter().cloned().fold(0.0, f64::max);
                let total0 = total.first().copied().unwrap_or(0.0);
                return Err(Error::non_convergence("adaptive quadrature (panel underflow)", total0, e));
            }
            let [left, right] = p.halves;
            panels.push(self.panel(f, dim, p.a, m, Some(left))?);
            panels.push(self.panel(f, dim, m, p.b, Some(right))?);
            refinements += 1;
        }
    }

    /// Tensorized 2-D integral of a vector-valued integrand over a rectangle,
    /// outer variable `y`, inner variable `x`.
    pub fn integrate_2d_vec<F>(&self, mut f: F, dim: usize, x_range: (f64, f64), y_range: (f64, f64)) -> Result<Vec<f64>>
    where
        F: FnMut(f64, f64, &mut [f64]) -> Result<()>,
    {
        let inner = Integrator {
            rule: self.rule.clone(),
            spec: self.spec.tightened(0.1),
        };
        self.integrate_vec(
            |y, out| {
                let v = inner.integrate_vec(|x, o| f(x, y, o), dim, x_range.0, x_range.1)?;
                out.copy_from_slice(&v);
                Ok(())
            },
            dim,
            y_range.0,
            y_range.1,
        )
    }
}

/// `∫ f` over `(lower, upper)` to the tolerance in `spec`; infinite limits are
/// handled by the variable changes listed in the module docs.
pub fn integrate_1d<F>(f: F, lower: f64, upper: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    Integrator::new(*spec)?.integrate(f, lower, upper)
}

/// `∬ f(x, y) dx dy` over `x_range × y_range`, either possibly infinite.
pub fn integrate_2d<F>(mut f: F, x_range: (f64, f64), y_range: (f64, f64), spec: &QuadratureSpec) -> Result<f64>
where
    F: FnMut(f64, f64) -> f64,
{
    let v = Integrator::new(*spec)?.integrate_2d_vec(
        |x, y, out| {
            out[0] = f(x, y);
            Ok(())
        },
        1,
        x_range,
        y_range,
    )?;
    Ok(v[0])
}
