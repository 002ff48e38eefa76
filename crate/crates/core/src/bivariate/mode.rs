//! Critical points of the joint log density.
//!
//! With `A`, `B` the conditional coefficients of `X | Y = y`,
//!
//! ```text
//! ∂/∂x ln f = (A − 1) u'(x) + B v'(x),   u'(x) = −g(x) / (G(x) (−ln G(x)))
//! ```
//!
//! and symmetrically in `y`. The gradient is exact; the Hessian is a central
//! difference of the gradient.

use serde::Serialize;

use crate::baseline::BaselineModel;
use crate::error::{Error, Result};

use super::{AxisPoint, BivariateRbg};

const GRADIENT_TOL: f64 = 1e-8;
const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeResult {
    pub x: f64,
    pub y: f64,
    pub log_density: f64,
    pub gradient_norm: f64,
    /// The difference Hessian is negative definite at the point.
    pub negative_definite: bool,
    pub iterations: usize,
}

fn u_prime(p: &AxisPoint) -> f64 {
    -(p.v + p.t).exp() / p.t
}

impl<B: BaselineModel + Clone> BivariateRbg<B> {
    /// Exact gradient of the joint log density in `(x, y)`.
    pub fn log_density_gradient(&self, x: f64, y: f64) -> Result<[f64; 2]> {
        let px = self.axis_x(x)?;
        let py = self.axis_y(y)?;
        let (ax, bx) = self.coefficients_x_given(&py);
        let (ay, by) = self.coefficients_y_given(&px);
        Ok([
            (ax - 1.0) * u_prime(&px) + bx * self.baseline_x.dlog_pdf(x),
            (ay - 1.0) * u_prime(&py) + by * self.baseline_y.dlog_pdf(y),
        ])
    }

    fn log_density_hessian(&self, x: f64, y: f64) -> Result<[[f64; 2]; 2]> {
        let hx = 1e-5 * x.abs().max(1e-3);
        let hy = 1e-5 * y.abs().max(1e-3);
        let gxp = self.log_density_gradient(x + hx, y)?;
        let gxm = self.log_density_gradient(x - hx, y)?;
        let gyp = self.log_density_gradient(x, y + hy)?;
        let gym = self.log_density_gradient(x, y - hy)?;
        let hxx = (gxp[0] - gxm[0]) / (2.0 * hx);
        let hyy = (gyp[1] - gym[1]) / (2.0 * hy);
        let hxy = 0.5 * ((gxp[1] - gxm[1]) / (2.0 * hx) + (gyp[0] - gym[0]) / (2.0 * hy));
        Ok([[hxx, hxy], [hxy, hyy]])
    }
}

fn norm(g: [f64; 2]) -> f64 {
    g[0].hypot(g[1])
}

fn is_negative_definite(h: [[f64; 2]; 2]) -> bool {
    h[0][0] < 0.0 && h[0][0] * h[1][1] - h[0][1] * h[1][0] > 0.0
}

/// Newton ascent on the joint log density from `start`.
///
/// Steps come from the difference Hessian when it is negative definite and
/// from the gradient otherwise; each is halved until it stays in the support
/// and increases the log density.
pub fn mode_find<B: BaselineModel + Clone>(model: &BivariateRbg<B>, start: (f64, f64)) -> Result<ModeResult> {
    let (mut x, mut y) = start;
    let mut l = model.joint_log_density(x, y)?;
    let inside = |x: f64, y: f64| model.baseline_x().in_support(x) && model.baseline_y().in_support(y);
    for iteration in 0..MAX_ITERATIONS {
        let g = model.log_density_gradient(x, y)?;
        if norm(g) <= GRADIENT_TOL {
            let h = model.log_density_hessian(x, y)?;
            return Ok(ModeResult {
                x,
                y,
                log_density: l,
                gradient_norm: norm(g),
                negative_definite: is_negative_definite(h),
                iterations: iteration,
            });
        }
        let h = model.log_density_hessian(x, y).unwrap_or([[-1.0, 0.0], [0.0, -1.0]]);
        let mut step = if is_negative_definite(h) {
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            [
                -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
                -(-h[1][0] * g[0] + h[0][0] * g[1]) / det,
            ]
        } else {
            let scale = 0.1 * (x.abs() + y.abs() + 1e-3) / norm(g);
            [g[0] * scale, g[1] * scale]
        };
        let mut accepted = false;
        for _ in 0..60 {
            let (nx, ny) = (x + step[0], y + step[1]);
            if inside(nx, ny) {
                if let Ok(nl) = model.joint_log_density(nx, ny) {
                    // Near the optimum the log density is flat to rounding, so
                    // accept steps that do not lose more than that.
                    if nl >= l - 1e-14 * l.abs().max(1.0) {
                        x = nx;
                        y = ny;
                        l = nl;
                        accepted = true;
                        break;
                    }
                }
            }
            step = [0.5 * step[0], 0.5 * step[1]];
        }
        if !accepted {
            return Err(Error::non_convergence(
                format!("mode search stalled at (x, y) = ({x}, {y}) after {iteration} iterations"),
                l,
                norm(g),
            ));
        }
    }
    let g = model.log_density_gradient(x, y)?;
    Err(Error::non_convergence(
        format!("mode search after {MAX_ITERATIONS} iterations, last point (x, y) = ({x}, {y})"),
        l,
        norm(g),
    ))
}
