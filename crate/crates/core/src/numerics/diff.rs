//! Central finite differences.

use crate::error::{Error, Result};

/// Central-difference gradient of `f` at `point` with a common `step`.
pub fn finite_diff_gradient<F>(mut f: F, point: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::domain(format!("finite-difference step must be positive, got {step}")));
    }
    let mut x = point.to_vec();
    let mut grad = Vec::with_capacity(point.len());
    for i in 0..point.len() {
        let xi = x[i];
        x[i] = xi + step;
        let fp = f(&x)?;
        x[i] = xi - step;
        let fm = f(&x)?;
        x[i] = xi;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::domain(format!("non-finite function value near coordinate {i}")));
        }
        grad.push((fp - fm) / (2.0 * step));
    }
    Ok(grad)
}

/// Five-point first derivative of a scalar function, error `O(h⁴)`.
pub fn derivative5<F>(mut f: F, x: f64, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::domain(format!("finite-difference step must be positive, got {h}")));
    }
    let f2p = f(x + 2.0 * h)?;
    let f1p = f(x + h)?;
    let f1m = f(x - h)?;
    let f2m = f(x - 2.0 * h)?;
    let d = (-f2p + 8.0 * f1p - 8.0 * f1m + f2m) / (12.0 * h);
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::domain(format!("non-finite finite difference at {x}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_examples() {
        let g = finite_diff_gradient(|v| Ok(v[0] * v[0]), &[3.0], 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);
        let g = finite_diff_gradient(|v| Ok(v[0] * v[1]), &[2.0, 5.0], 1e-5).unwrap();
        assert!((g[0] - 5.0).abs() < 1e-8 && (g[1] - 2.0).abs() < 1e-8);
        let g = finite_diff_gradient(|_| Ok(4.2), &[1.0, -1.0, 0.5], 1e-3).unwrap();
        assert!(g.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn non_finite_values_propagate() {
        let r = finite_diff_gradient(|v| Ok(v[0].sqrt()), &[0.0], 1e-3);
        assert!(r.is_err());
        assert!(finite_diff_gradient(|v| Ok(v[0]), &[0.0], 0.0).is_err());
    }

    #[test]
    fn five_point_rule() {
        let d = derivative5(|x| Ok(x.sin()), 0.7, 1e-3).unwrap();
        assert!((d - 0.7f64.cos()).abs() < 1e-12);
    }
}
