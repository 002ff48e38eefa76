//! Gamma-family special functions: `ln Γ`, the regularized incomplete gamma
//! pair `P`/`Q` and its inverse, digamma, trigamma and inverse digamma.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Iteration cap shared by the series and continued-fraction branches.
const MAX_ITER: usize = 100_000;

fn check_shape(a: f64, what: &str) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::domain(format!("{what}: shape must be positive and finite, got {a}")));
    }
    Ok(())
}

/// `ln Γ(a)` for `a > 0`.
pub fn log_gamma(a: f64) -> Result<f64> {
    check_shape(a, "log_gamma")?;
    Ok(ln_gamma_unchecked(a))
}

pub(crate) fn ln_gamma_unchecked(a: f64) -> f64 {
    if a < 0.5 {
        // Γ(a) = Γ(a + 1) / a keeps the Lanczos sum in its accurate range.
        return ln_gamma_unchecked(a + 1.0) - a.ln();
    }
    let x = a - 1.0;
    let mut sum = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + sum.ln()
}

fn check_pq_args(a: f64, x: f64, what: &str) -> Result<()> {
    check_shape(a, what)?;
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(format!("{what}: argument must be non-negative, got {x}")));
    }
    Ok(())
}

/// Regularized lower incomplete gamma `P(a, x) = γ(a, x) / Γ(a)`.
pub fn reg_lower_gamma(a: f64, x: f64) -> Result<f64> {
    check_pq_args(a, x, "reg_lower_gamma")?;
    Ok(gamma_pq(a, x).0)
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`, computed without
/// cancellation.
pub fn reg_upper_gamma(a: f64, x: f64) -> Result<f64> {
    check_pq_args(a, x, "reg_upper_gamma")?;
    Ok(gamma_pq(a, x).1)
}

/// Unregularized lower incomplete gamma `γ(a, x) = ∫₀ˣ t^{a-1} e^{-t} dt`.
pub fn lower_gamma(a: f64, x: f64) -> Result<f64> {
    check_pq_args(a, x, "lower_gamma")?;
    Ok(gamma_pq(a, x).0 * ln_gamma_unchecked(a).exp())
}

/// Returns `(P(a, x), Q(a, x))`; the series serves `x < a + 1`, the continued
/// fraction the rest.
pub(crate) fn gamma_pq(a: f64, x: f64) -> (f64, f64) {
    if x == 0.0 {
        return (0.0, 1.0);
    }
    if x.is_infinite() {
        return (1.0, 0.0);
    }
    if x < a + 1.0 {
        let p = lower_series(a, x);
        (p, 1.0 - p)
    } else {
        let q = upper_continued_fraction(a, x);
        (1.0 - q, q)
    }
}

/// `ln(x^a e^{-x} / Γ(a))`, the common prefactor of both branches.
fn log_prefactor(a: f64, x: f64) -> f64 {
    a * x.ln() - x - ln_gamma_unchecked(a)
}

pub(crate) fn lower_series(a: f64, x: f64) -> f64 {
    let mut denom = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    (sum.ln() + log_prefactor(a, x)).exp().min(1.0)
}

/// Modified Lentz evaluation of the continued fraction for `Q(a, x)`.
pub(crate) fn upper_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (h.ln() + log_prefactor(a, x)).exp().min(1.0)
}

/// Inverse of `P(a, ·)`: the `x ≥ 0` with `P(a, x) = p`.
pub fn inv_reg_lower_gamma(a: f64, p: f64) -> Result<f64> {
    check_shape(a, "inv_reg_lower_gamma")?;
    if !(0.0..1.0).contains(&p) {
        return Err(Error::domain(format!(
            "inv_reg_lower_gamma: probability must lie in [0, 1), got {p}"
        )));
    }
    Ok(inv_gamma_pq(a, p, 1.0 - p))
}

/// Solves `P(a, x) = p` given both `p` and its complement `q = 1 - p`, so that
/// callers holding an accurate upper tail do not lose it to rounding.
pub(crate) fn inv_gamma_pq(a: f64, p: f64, q: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if q <= 0.0 {
        return f64::INFINITY;
    }
    let gln = ln_gamma_unchecked(a);
    let a1 = a - 1.0;
    let mut x = initial_guess(a, p, q, gln);

    // Bracket maintained for a bisection fallback when Halley overshoots.
    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    for _ in 0..200 {
        if x <= 0.0 {
            x = 0.5 * lo + if hi.is_finite() { 0.5 * hi } else { 0.0 };
            if x <= 0.0 {
                return 0.0;
            }
        }
        let (pp, qq) = gamma_pq(a, x);
        // Work on whichever tail is smaller so the residual keeps full
        // relative precision.
        let err = if p < 0.5 { pp - p } else { q - qq };
        if err < 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let dens = (a1 * x.ln() - x - gln).exp();
        if dens == 0.0 || !dens.is_finite() {
            // Density underflow: the bracket is the only information left.
            let mid = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * x.max(lo) + 1.0 };
            if (mid - x).abs() <= 1e-15 * x.abs() {
                break;
            }
            x = mid;
            continue;
        }
        let u = err / dens;
        let halley = u / (1.0 - 0.5 * (u * (a1 / x - 1.0)).min(1.0));
        let mut next = x - halley;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * x.max(lo) + 1.0 };
        }
        let step = (next - x).abs();
        x = next;
        if step <= 1e-15 * x.max(1e-300) {
            break;
        }
    }
    x
}

fn initial_guess(a: f64, p: f64, q: f64, gln: f64) -> f64 {
    if a > 1.0 {
        let pp = if p < 0.5 { p } else { q };
        let t = (-2.0 * pp.ln()).sqrt();
        let mut z = (2.307_53 + t * 0.270_61) / (1.0 + t * (0.992_29 + t * 0.044_81)) - t;
        if p < 0.5 {
            z = -z;
        }
        (a * (1.0 - 1.0 / (9.0 * a) - z / (3.0 * a.sqrt())).powi(3)).max(1e-3)
    } else {
        let t = 1.0 - a * (0.253 + a * 0.12);
        if p < t {
            // P(a, x) ≈ x^a / Γ(a + 1) near zero.
            ((p.ln() + gln + a.ln()) / a).exp().max(f64::MIN_POSITIVE)
        } else {
            1.0 - ((q) / (1.0 - t)).ln()
        }
    }
}

/// Digamma `ψ₀(a) = d/da ln Γ(a)`.
pub fn digamma(a: f64) -> Result<f64> {
    check_shape(a, "digamma")?;
    Ok(digamma_unchecked(a))
}

pub(crate) fn digamma_unchecked(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Bernoulli-number asymptotic tail.
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32_760.0)))));
    acc + x.ln() - 0.5 * inv - tail
}

/// Trigamma `ψ₁(a) = d²/da² ln Γ(a)`.
pub fn trigamma(a: f64) -> Result<f64> {
    check_shape(a, "trigamma")?;
    Ok(trigamma_unchecked(a))
}

pub(crate) fn trigamma_unchecked(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let tail = inv
        + 0.5 * inv2
        + inv * inv2
            * (1.0 / 6.0
                - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * 5.0 / 66.0))));
    acc + tail
}

/// Inverse of the digamma function, mapping `(-∞, ∞)` onto `(0, ∞)`.
pub fn inv_digamma(y: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::domain(format!("inv_digamma: argument must be finite, got {y}")));
    }
    // Initialization from Minka's fixed-point notes.
    let mut x = if y >= -2.22 {
        y.exp() + 0.5
    } else {
        -1.0 / (y - digamma_unchecked(1.0))
    };
    for _ in 0..100 {
        let step = (digamma_unchecked(x) - y) / trigamma_unchecked(x);
        let mut next = x - step;
        if next <= 0.0 {
            next = 0.5 * x;
        }
        let done = (next - x).abs() <= 1e-15 * next;
        x = next;
        if done {
            return Ok(x);
        }
    }
    let resid = digamma_unchecked(x) - y;
    if resid.abs() <= 1e-12 * y.abs().max(1.0) {
        Ok(x)
    } else {
        Err(Error::non_convergence("inv_digamma", x, resid.abs()))
    }
}
