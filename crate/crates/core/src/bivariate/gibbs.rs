//! Gibbs sampling from the two conditionals.
//!
//! Exact conditionals are drawn through Gamma variates. General ones are
//! drawn by inverse cdf on a fixed grid in `s = ln(-ln G)`: the log density
//! is interpolated linearly between nodes, so each cell is a truncated
//! exponential and inverts in closed form. Below the grid the density is
//! extended by the first cell's exponential tail.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baseline::BaselineModel;
use crate::error::{Error, Result};
use crate::sampling::gamma_variate;

use super::{AxisPoint, BivariateRbg};

const GRID_LO: f64 = -40.0;
const GRID_HI: f64 = 6.5;
const GRID_NODES: usize = 8192;
/// Nodes more than this far below the peak log density are treated as zero.
const LOG_CUTOFF: f64 = 45.0;

/// Per-axis cache of `s`, `eˢ` and `v(s)` on the grid.
struct AxisGrid {
    s: Vec<f64>,
    t: Vec<f64>,
    v: Vec<f64>,
    step: f64,
    log_kernel: Vec<f64>,
    mass: Vec<f64>,
}

impl AxisGrid {
    fn new<B: BaselineModel>(b: &B) -> Self {
        let step = (GRID_HI - GRID_LO) / (GRID_NODES - 1) as f64;
        let s: Vec<f64> = (0..GRID_NODES).map(|i| GRID_LO + step * i as f64).collect();
        let t: Vec<f64> = s.iter().map(|s| s.exp()).collect();
        let v = t.iter().map(|&t| b.log_pdf_at_neg_log_cdf(t)).collect();
        AxisGrid {
            s,
            t,
            v,
            step,
            log_kernel: vec![0.0; GRID_NODES],
            mass: vec![0.0; GRID_NODES],
        }
    }

    /// Draws `s` from the density proportional to `exp(A s + (B − 1) v − eˢ)`.
    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R, shape: f64, coef: f64) -> Result<f64> {
        let c = coef - 1.0;
        let mut peak = f64::NEG_INFINITY;
        for i in 0..GRID_NODES {
            let l = shape * self.s[i] + c * self.v[i] - self.t[i];
            self.log_kernel[i] = l;
            peak = peak.max(l);
        }
        if !peak.is_finite() {
            return Err(Error::ConditionalNonexistence(format!(
                "conditional kernel is not finite (shape {shape}, coefficient {coef})"
            )));
        }
        let lk = &self.log_kernel;
        let tail_slope = (lk[1] - lk[0]) / self.step;
        if !(tail_slope > 0.0) || lk[GRID_NODES - 1] >= peak {
            return Err(Error::ConditionalNonexistence(format!(
                "conditional kernel does not decay (shape {shape}, coefficient {coef})"
            )));
        }
        // Mass below the grid, then of each cell, relative to exp(peak).
        let floor = peak - LOG_CUTOFF;
        let tail = if lk[0] > floor { (lk[0] - peak).exp() / tail_slope } else { 0.0 };
        let mut total = tail;
        for i in 0..GRID_NODES - 1 {
            let (l0, l1) = (lk[i], lk[i + 1]);
            let m = if l0.max(l1) <= floor {
                0.0
            } else {
                cell_mass(l0 - peak, (l1 - l0) / self.step, self.step)
            };
            total += m;
            self.mass[i] = total;
        }
        let target = rng.random::<f64>() * total;
        if target < tail {
            // Exponential tail below the grid, read off from its left end.
            let w = target / tail;
            return Ok(self.s[0] + w.ln() / tail_slope);
        }
        let i = self.mass[..GRID_NODES - 1].partition_point(|&m| m <= target).min(GRID_NODES - 2);
        let before = if i == 0 { tail } else { self.mass[i - 1] };
        let cell = self.mass[i] - before;
        let w = if cell > 0.0 { ((target - before) / cell).clamp(0.0, 1.0) } else { 0.5 };
        let k = (lk[i + 1] - lk[i]) / self.step;
        Ok(self.s[i] + invert_cell(w, k, self.step))
    }
}

/// `∫₀ʰ exp(l0 + k r) dr`.
fn cell_mass(l0: f64, k: f64, h: f64) -> f64 {
    let kh = k * h;
    if kh.abs() < 1e-10 {
        l0.exp() * h
    } else {
        l0.exp() * kh.exp_m1() / k
    }
}

/// Offset `r ∈ [0, h]` holding fraction `w` of the cell mass.
fn invert_cell(w: f64, k: f64, h: f64) -> f64 {
    let kh = k * h;
    if kh.abs() < 1e-10 {
        w * h
    } else {
        (w * kh.exp_m1()).ln_1p() / k
    }
}

/// `n` pairs after `burn` discarded sweeps, starting from `-ln G(y) = 1`.
pub fn gibbs_sample<B: BaselineModel + Clone>(
    model: &BivariateRbg<B>,
    n: usize,
    burn: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bx = model.baseline_x().clone();
    let by = model.baseline_y().clone();
    let mut grid_x: Option<AxisGrid> = None;
    let mut grid_y: Option<AxisGrid> = None;
    let mut py = AxisPoint::from_log_transform(&by, 0.0);
    let mut out = Vec::with_capacity(n);
    for sweep in 0..burn + n {
        let (a, b) = model.coefficients_x_given(&py);
        let px = draw_axis(&bx, &mut grid_x, &mut rng, a, b)
            .map_err(|e| chain_error(e, sweep, "X", "y", py))?;
        let (a, b) = model.coefficients_y_given(&px);
        py = draw_axis(&by, &mut grid_y, &mut rng, a, b).map_err(|e| chain_error(e, sweep, "Y", "x", px))?;
        if sweep >= burn {
            out.push((bx.from_neg_log_cdf(px.t), by.from_neg_log_cdf(py.t)));
        }
    }
    Ok(out)
}

fn draw_axis<B: BaselineModel, R: Rng + ?Sized>(
    b: &B,
    grid: &mut Option<AxisGrid>,
    rng: &mut R,
    shape: f64,
    coef: f64,
) -> Result<AxisPoint> {
    if !(shape.is_finite() && coef.is_finite()) {
        return Err(Error::ConditionalNonexistence(format!(
            "non-finite coefficients (shape {shape}, coefficient {coef})"
        )));
    }
    let s = if coef == 1.0 {
        if shape <= 0.0 {
            return Err(Error::ConditionalNonexistence(format!("conditional shape {shape} is not positive")));
        }
        gamma_variate(rng, shape).ln()
    } else {
        grid.get_or_insert_with(|| AxisGrid::new(b)).draw(rng, shape, coef)?
    };
    Ok(AxisPoint::from_log_transform(b, s))
}

fn chain_error(e: Error, sweep: usize, drawn: &str, given: &str, at: AxisPoint) -> Error {
    match e {
        Error::ConditionalNonexistence(msg) => Error::ConditionalNonexistence(format!(
            "Gibbs sweep {sweep}, drawing {drawn} given {given} with ln(-ln G) = {}: {msg}",
            at.u
        )),
        other => other,
    }
}
