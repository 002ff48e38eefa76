//! Two-dimensional integrals of the joint kernel.
//!
//! With `s = ln(-ln G_x(x))` and `t = ln(-ln G_y(y))` the joint density
//! becomes, up to `exp(m₀₀)`,
//!
//! ```text
//! exp(q₁ᵀ M q₂ - v_x - v_y - eˢ - eᵗ) ds dt
//! ```
//!
//! where `q = (1, u, v)`, `u = s` (or `t`) and `v = ln g` at the mapped point.
//! The kernel is shifted by its maximum on a probe grid before exponentiating.

use crate::baseline::BaselineModel;
use crate::error::{Error, Result};
use crate::numerics::Integrator;

use super::MMatrix;

/// Number of interaction statistics.
pub const STAT_COUNT: usize = 8;

/// `u`, `v` and `T = -ln G` at one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisPoint {
    pub u: f64,
    pub v: f64,
    pub t: f64,
}

impl AxisPoint {
    pub fn from_log_transform<B: BaselineModel>(b: &B, s: f64) -> Self {
        let t = s.exp();
        AxisPoint {
            u: s,
            v: b.log_pdf_at_neg_log_cdf(t),
            t,
        }
    }

    /// Returns `None` outside the support interior.
    pub fn from_point<B: BaselineModel>(b: &B, x: f64) -> Option<Self> {
        if !b.in_support(x) {
            return None;
        }
        let u = b.log_neg_log_cdf(x);
        if !u.is_finite() {
            return None;
        }
        Some(AxisPoint {
            u,
            v: b.log_pdf(x),
            t: u.exp(),
        })
    }
}

/// The eight statistics paired with `θ₁ … θ₈`:
/// `u_y, v_y, u_x, u_x u_y, u_x v_y, v_x, v_x u_y, v_x v_y`.
pub fn statistics(x: &AxisPoint, y: &AxisPoint) -> [f64; STAT_COUNT] {
    [
        y.u,
        y.v,
        x.u,
        x.u * y.u,
        x.u * y.v,
        x.v,
        x.v * y.u,
        x.v * y.v,
    ]
}

/// `q₁ᵀ M q₂` without the `m₀₀` term.
pub fn interaction(m: &MMatrix, x: &AxisPoint, y: &AxisPoint) -> f64 {
    let e = m.entries();
    let qx = [1.0, x.u, x.v];
    let qy = [1.0, y.u, y.v];
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            if i == 0 && j == 0 {
                continue;
            }
            let c = e[i][j];
            if c != 0.0 {
                acc += c * qx[i] * qy[j];
            }
        }
    }
    acc
}

/// Log of the joint kernel per unit `ds dt`, without `m₀₀`.
pub fn log_kernel_log_space(m: &MMatrix, x: &AxisPoint, y: &AxisPoint) -> f64 {
    // Beyond these cut-offs the kernel has long since underflowed for any
    // integrable M, and products of unbounded statistics would turn to NaN.
    if x.t > 700.0 || y.t > 700.0 || x.u < -600.0 || y.u < -600.0 {
        return f64::NEG_INFINITY;
    }
    interaction(m, x, y) - x.v - y.v - x.t - y.t
}

/// Bounds of the probe box in `s` and `t`.
pub(crate) const PROBE_LO: f64 = -30.0;
pub(crate) const PROBE_HI: f64 = 6.5;
const PROBE_STEP: f64 = 0.25;

/// Kernel maximum over the probe grid and its location.
pub(crate) fn probe_maximum<B1, B2>(m: &MMatrix, bx: &B1, by: &B2) -> (f64, f64, f64)
where
    B1: BaselineModel,
    B2: BaselineModel,
{
    let n = ((PROBE_HI - PROBE_LO) / PROBE_STEP).round() as usize + 1;
    let xs: Vec<AxisPoint> = (0..n)
        .map(|i| AxisPoint::from_log_transform(bx, PROBE_LO + PROBE_STEP * i as f64))
        .collect();
    let ys: Vec<AxisPoint> = (0..n)
        .map(|i| AxisPoint::from_log_transform(by, PROBE_LO + PROBE_STEP * i as f64))
        .collect();
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for x in &xs {
        for y in &ys {
            let l = log_kernel_log_space(m, x, y);
            if l > best.0 {
                best = (l, x.u, y.u);
            }
        }
    }
    best
}

/// Numerical divergence probe.
///
/// Rejects kernels whose maximum over the probe box sits on its edge, or that
/// fail to decay along rays leaving the maximum. The rays reach the cut-offs
/// of [`log_kernel_log_space`], so growth that only sets in beyond
/// `s, t < -600` goes unseen; such kernels are integrated as truncated.
pub(crate) fn divergence_probe<B1, B2>(m: &MMatrix, bx: &B1, by: &B2) -> Result<(f64, f64, f64)>
where
    B1: BaselineModel,
    B2: BaselineModel,
{
    let (lmax, s0, t0) = probe_maximum(m, bx, by);
    if !lmax.is_finite() {
        return Err(Error::NonIntegrable("kernel is not finite anywhere on the probe grid".into()));
    }
    let edge = |v: f64| v <= PROBE_LO + 1e-9 || v >= PROBE_HI - 1e-9;
    if edge(s0) || edge(t0) {
        return Err(Error::NonIntegrable(format!(
            "kernel maximum on the edge of the probe box at (s, t) = ({s0}, {t0})"
        )));
    }
    const ANGLES: usize = 32;
    const RADII: [f64; 6] = [16.0, 32.0, 64.0, 128.0, 256.0, 512.0];
    for k in 0..ANGLES {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / ANGLES as f64;
        let (dc, ds) = (phi.cos(), phi.sin());
        let mut prev = lmax;
        for r in RADII {
            let x = AxisPoint::from_log_transform(bx, s0 + r * dc);
            let y = AxisPoint::from_log_transform(by, t0 + r * ds);
            let l = log_kernel_log_space(m, &x, &y);
            let decreasing = l == f64::NEG_INFINITY || l < prev;
            if !decreasing || l.is_nan() {
                return Err(Error::NonIntegrable(format!(
                    "kernel does not decay along direction ({dc:.3}, {ds:.3}) at radius {r}"
                )));
            }
            prev = l;
        }
        if prev > lmax - 5.0 {
            return Err(Error::NonIntegrable(format!(
                "kernel decays too slowly along direction ({dc:.3}, {ds:.3})"
            )));
        }
    }
    Ok((lmax, s0, t0))
}

/// Which weights to integrate against the shifted kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentOrder {
    /// `[1]`.
    Mass,
    /// `[1, S₁ … S₈]`.
    First,
    /// `[1, S₁ … S₈, S_i S_j (i ≤ j)]`.
    Second,
}

impl MomentOrder {
    pub fn dim(self) -> usize {
        match self {
            MomentOrder::Mass => 1,
            MomentOrder::First => 1 + STAT_COUNT,
            MomentOrder::Second => 1 + STAT_COUNT + STAT_COUNT * (STAT_COUNT + 1) / 2,
        }
    }
}

/// Raw integrals `∫∫ w · exp(L - shift) ds dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelIntegrals {
    pub shift: f64,
    pub values: Vec<f64>,
}

impl KernelIntegrals {
    /// `ln ∫∫ exp(L) ds dt`.
    pub fn log_mass(&self) -> f64 {
        self.values[0].ln() + self.shift
    }

    /// `E[S]` under the normalized kernel.
    pub fn mean(&self) -> [f64; STAT_COUNT] {
        let mut out = [0.0; STAT_COUNT];
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.values[1 + j] / self.values[0];
        }
        out
    }

    /// `E[S Sᵀ] - E[S]E[S]ᵀ` under the normalized kernel.
    pub fn covariance(&self) -> [[f64; STAT_COUNT]; STAT_COUNT] {
        let mean = self.mean();
        let mut out = [[0.0; STAT_COUNT]; STAT_COUNT];
        let mut k = 1 + STAT_COUNT;
        for i in 0..STAT_COUNT {
            for j in i..STAT_COUNT {
                let c = self.values[k] / self.values[0] - mean[i] * mean[j];
                out[i][j] = c;
                out[j][i] = c;
                k += 1;
            }
        }
        out
    }
}

/// Integrates the kernel and, depending on `order`, its statistic moments.
pub fn kernel_integrals<B1, B2>(
    m: &MMatrix,
    bx: &B1,
    by: &B2,
    integrator: &Integrator,
    order: MomentOrder,
) -> Result<KernelIntegrals>
where
    B1: BaselineModel,
    B2: BaselineModel,
{
    m.analytic_integrability()?;
    let (shift, _, _) = divergence_probe(m, bx, by)?;
    let dim = order.dim();
    let values = integrator
        .integrate_2d_vec(
            |s, t, out| {
                let x = AxisPoint::from_log_transform(bx, s);
                let y = AxisPoint::from_log_transform(by, t);
                let l = log_kernel_log_space(m, &x, &y);
                if l == f64::NEG_INFINITY {
                    return Ok(());
                }
                let w = (l - shift).exp();
                if !w.is_finite() {
                    return Err(Error::NonIntegrable(format!("kernel overflows at (s, t) = ({s}, {t})")));
                }
                out[0] = w;
                if order == MomentOrder::Mass {
                    return Ok(());
                }
                let st = statistics(&x, &y);
                for j in 0..STAT_COUNT {
                    out[1 + j] = w * st[j];
                }
                if order == MomentOrder::Second {
                    let mut k = 1 + STAT_COUNT;
                    for i in 0..STAT_COUNT {
                        for j in i..STAT_COUNT {
                            out[k] = w * st[i] * st[j];
                            k += 1;
                        }
                    }
                }
                Ok(())
            },
            dim,
            (f64::NEG_INFINITY, f64::INFINITY),
            (f64::NEG_INFINITY, f64::INFINITY),
        )
        .map_err(|e| match e {
            Error::NonConvergence { context, estimate, bound } => Error::NonIntegrable(format!(
                "normalizing integral did not converge ({context}; estimate {estimate:e}, error bound {bound:e})"
            )),
            Error::Domain(msg) => Error::NonIntegrable(format!("kernel moments are not finite: {msg}")),
            other => other,
        })?;
    if !(values[0] > 0.0 && values[0].is_finite()) {
        return Err(Error::NonIntegrable(format!("normalizing integral is {}", values[0])));
    }
    Ok(KernelIntegrals { shift, values })
}
