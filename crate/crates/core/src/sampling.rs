//! Gamma variates by Marsaglia–Tsang rejection.

use rand::Rng;
use rand_distr::StandardNormal;

/// One draw from `Gamma(shape, 1)`.
///
/// Shapes below one use `Gamma(shape + 1) · U^{1/shape}`.
pub fn gamma_variate<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let g = gamma_variate(rng, shape + 1.0);
        let u: f64 = rng.random();
        // Log space keeps tiny shapes from underflowing the power.
        return (g.ln() + u.ln() / shape).exp();
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * z;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.random();
        let z2 = z * z;
        if u < 1.0 - 0.0331 * z2 * z2 {
            return d * v;
        }
        if u.ln() < 0.5 * z2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}
