//! Baseline distributions that generate the family.
//!
//! Beyond the usual cdf/pdf/quantile a baseline exposes its law in terms of
//! `t = -ln G(x)`. Every integral in the crate runs over `ln t`, so these maps
//! are implemented in closed form per exemplar to keep full precision in both
//! tails.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A continuous baseline cdf `G`, strictly increasing on an open support.
///
/// Evaluations outside the support return the limiting values (`0`, `1`,
/// `-inf`) rather than erroring.
pub trait BaselineModel: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    /// Named parameters in canonical order.
    fn params(&self) -> Vec<(&'static str, f64)>;

    /// Open support interval `(lo, hi)`.
    fn support(&self) -> (f64, f64);

    fn cdf(&self, x: f64) -> f64;

    fn log_pdf(&self, x: f64) -> f64;

    fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    /// `d/dx ln g(x)`.
    fn dlog_pdf(&self, x: f64) -> f64;

    /// Inverse cdf on `[0, 1]`; the endpoints map to the support edges.
    fn quantile(&self, p: f64) -> Result<f64>;

    /// `-ln G(x)`, accurate as `G(x) → 1`.
    fn neg_log_cdf(&self, x: f64) -> f64;

    /// The point `x` with `-ln G(x) = t`, for `t ∈ [0, ∞]`.
    fn from_neg_log_cdf(&self, t: f64) -> f64;

    /// `ln(-ln G(x))`, finite in the upper tail after `-ln G(x)` underflows.
    fn log_neg_log_cdf(&self, x: f64) -> f64 {
        self.neg_log_cdf(x).ln()
    }

    /// `ln g(x)` at the point with `-ln G(x) = t`.
    fn log_pdf_at_neg_log_cdf(&self, t: f64) -> f64 {
        self.log_pdf(self.from_neg_log_cdf(t))
    }

    fn in_support(&self, x: f64) -> bool {
        let (lo, hi) = self.support();
        x > lo && x < hi
    }
}

/// `-ln(1 - e^{-t})`, i.e. `-ln` of the survival when the cdf is `e^{-t}`.
fn neg_log_one_minus_exp_neg(t: f64) -> f64 {
    if t <= std::f64::consts::LN_2 {
        -(-(-t).exp_m1()).ln()
    } else {
        -(-(-t).exp()).ln_1p()
    }
}

/// `ln(-ln(1 - e^{-z}))` for `z ≥ 0`.
fn log_neg_log_one_minus_exp_neg(z: f64) -> f64 {
    if z > 30.0 {
        -z + 0.5 * (-z).exp()
    } else {
        neg_log_one_minus_exp_neg(z).ln()
    }
}

/// `ln(1 - e^{-t})`.
fn log_one_minus_exp_neg(t: f64) -> f64 {
    -neg_log_one_minus_exp_neg(t)
}

/// Standard uniform on `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform;

impl BaselineModel for Uniform {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }

    fn support(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn cdf(&self, x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }

    fn log_pdf(&self, x: f64) -> f64 {
        if self.in_support(x) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn dlog_pdf(&self, _x: f64) -> f64 {
        0.0
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        Ok(p)
    }

    fn neg_log_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            f64::INFINITY
        } else if x >= 1.0 {
            0.0
        } else {
            -x.ln()
        }
    }

    fn from_neg_log_cdf(&self, t: f64) -> f64 {
        (-t).exp()
    }

    fn log_pdf_at_neg_log_cdf(&self, _t: f64) -> f64 {
        0.0
    }
}

/// Exponential with rate `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponential {
    rate: f64,
}

impl Exponential {
    pub fn new(rate: f64) -> Result<Self> {
        check_positive("exponential", "rate", rate)?;
        Ok(Exponential { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl BaselineModel for Exponential {
    fn name(&self) -> &'static str {
        "exponential"
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("rate", self.rate)]
    }

    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-self.rate * x).exp_m1()
        }
    }

    fn log_pdf(&self, x: f64) -> f64 {
        if self.in_support(x) {
            self.rate.ln() - self.rate * x
        } else {
            f64::NEG_INFINITY
        }
    }

    fn dlog_pdf(&self, _x: f64) -> f64 {
        -self.rate
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        Ok(-(-p).ln_1p() / self.rate)
    }

    fn neg_log_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            f64::INFINITY
        } else {
            -(-(-self.rate * x).exp_m1()).ln()
        }
    }

    fn from_neg_log_cdf(&self, t: f64) -> f64 {
        neg_log_one_minus_exp_neg(t) / self.rate
    }

    fn log_neg_log_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            f64::INFINITY
        } else {
            log_neg_log_one_minus_exp_neg(self.rate * x)
        }
    }

    fn log_pdf_at_neg_log_cdf(&self, t: f64) -> f64 {
        self.rate.ln() + log_one_minus_exp_neg(t)
    }
}

/// Weibull with shape `k` and scale `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weibull {
    shape: f64,
    scale: f64,
}

impl Weibull {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        check_positive("weibull", "shape", shape)?;
        check_positive("weibull", "scale", scale)?;
        Ok(Weibull { shape, scale })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl BaselineModel for Weibull {
    fn name(&self) -> &'static str {
        "weibull"
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("shape", self.shape), ("scale", self.scale)]
    }

    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-(x / self.scale).powf(self.shape)).exp_m1()
        }
    }

    fn log_pdf(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            return f64::NEG_INFINITY;
        }
        let z = x / self.scale;
        (self.shape / self.scale).ln() + (self.shape - 1.0) * z.ln() - z.powf(self.shape)
    }

    fn dlog_pdf(&self, x: f64) -> f64 {
        let k = self.shape;
        (k - 1.0) / x - k * x.powf(k - 1.0) / self.scale.powf(k)
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        Ok(self.scale * (-(-p).ln_1p()).powf(1.0 / self.shape))
    }

    fn neg_log_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            f64::INFINITY
        } else {
            -(-(-(x / self.scale).powf(self.shape)).exp_m1()).ln()
        }
    }

    fn from_neg_log_cdf(&self, t: f64) -> f64 {
        self.scale * neg_log_one_minus_exp_neg(t).powf(1.0 / self.shape)
    }

    fn log_neg_log_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            f64::INFINITY
        } else {
            log_neg_log_one_minus_exp_neg((x / self.scale).powf(self.shape))
        }
    }

    fn log_pdf_at_neg_log_cdf(&self, t: f64) -> f64 {
        // z = (x/scale)^shape = -ln(1 - e^{-t})
        let ln_z = if t > 30.0 {
            -t + 0.5 * (-t).exp()
        } else {
            neg_log_one_minus_exp_neg(t).ln()
        };
        let k = self.shape;
        (k / self.scale).ln() + (k - 1.0) / k * ln_z + log_one_minus_exp_neg(t)
    }
}

fn check_positive(dist: &str, name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("{dist} parameter {name} must be positive and finite, got {v}")))
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain(format!("probability {p} outside [0, 1]")))
    }
}

/// The built-in baselines as one copyable value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Baseline {
    Uniform(Uniform),
    Exponential(Exponential),
    Weibull(Weibull),
}

impl Baseline {
    pub fn uniform() -> Self {
        Baseline::Uniform(Uniform)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Exponential::new(rate).map(Baseline::Exponential)
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        Weibull::new(shape, scale).map(Baseline::Weibull)
    }

    fn inner(&self) -> &dyn BaselineModel {
        match self {
            Baseline::Uniform(b) => b,
            Baseline::Exponential(b) => b,
            Baseline::Weibull(b) => b,
        }
    }
}

impl BaselineModel for Baseline {
    fn name(&self) -> &'static str {
        self.inner().name()
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        self.inner().params()
    }
    fn support(&self) -> (f64, f64) {
        self.inner().support()
    }
    fn cdf(&self, x: f64) -> f64 {
        self.inner().cdf(x)
    }
    fn log_pdf(&self, x: f64) -> f64 {
        self.inner().log_pdf(x)
    }
    fn pdf(&self, x: f64) -> f64 {
        self.inner().pdf(x)
    }
    fn dlog_pdf(&self, x: f64) -> f64 {
        self.inner().dlog_pdf(x)
    }
    fn quantile(&self, p: f64) -> Result<f64> {
        self.inner().quantile(p)
    }
    fn neg_log_cdf(&self, x: f64) -> f64 {
        self.inner().neg_log_cdf(x)
    }
    fn from_neg_log_cdf(&self, t: f64) -> f64 {
        self.inner().from_neg_log_cdf(t)
    }
    fn log_neg_log_cdf(&self, x: f64) -> f64 {
        self.inner().log_neg_log_cdf(x)
    }
    fn log_pdf_at_neg_log_cdf(&self, t: f64) -> f64 {
        self.inner().log_pdf_at_neg_log_cdf(t)
    }
}

/// Builds a registered baseline from its name and named parameters.
///
/// Omitted parameters default to 1.
pub fn make_baseline(name: &str, params: &[(&str, f64)]) -> Result<Baseline> {
    let allowed: &[&str] = match name {
        "uniform" => &[],
        "exponential" => &["rate"],
        "weibull" => &["shape", "scale"],
        other => return Err(Error::config(format!("unknown baseline '{other}'"))),
    };
    for (key, _) in params {
        if !allowed.contains(key) {
            return Err(Error::config(format!("baseline '{name}' has no parameter '{key}'")));
        }
    }
    let get = |key: &str| {
        params
            .iter()
            .rev()
            .find(|(k, _)| *k == key)
            .map(|&(_, v)| v)
            .unwrap_or(1.0)
    };
    match name {
        "uniform" => Ok(Baseline::uniform()),
        "exponential" => Baseline::exponential(get("rate")),
        _ => Baseline::weibull(get("shape"), get("scale")),
    }
}

/// Parses `name` or `name:key=value,key=value`.
impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r)),
            None => (s, None),
        };
        let mut params = Vec::new();
        if let Some(rest) = rest.filter(|r| !r.trim().is_empty()) {
            for item in rest.split(',') {
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| Error::config(format!("malformed baseline parameter '{item}'")))?;
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::config(format!("baseline parameter '{}' is not a number", k.trim())))?;
                params.push((k.trim(), v));
            }
        }
        make_baseline(&name.to_ascii_lowercase(), &params)
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        let params = self.params();
        for (i, (k, v)) in params.iter().enumerate() {
            let sep = if i == 0 { ':' } else { ',' };
            write!(f, "{sep}{k}={v}")?;
        }
        Ok(())
    }
}

impl TryFrom<String> for Baseline {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Baseline> for String {
    fn from(b: Baseline) -> String {
        b.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exemplars() -> Vec<Baseline> {
        vec![
            Baseline::uniform(),
            Baseline::exponential(1.0).unwrap(),
            Baseline::exponential(2.5).unwrap(),
            Baseline::weibull(1.5, 1.0).unwrap(),
            Baseline::weibull(0.7, 2.0).unwrap(),
        ]
    }

    #[test]
    fn cdf_examples() {
        let e = Baseline::exponential(1.0).unwrap();
        assert!((e.cdf(2f64.ln()) - 0.5).abs() < 1e-15);
        assert!((Baseline::uniform().cdf(0.3) - 0.3).abs() < 1e-15);
        let w = Baseline::weibull(1.0, 1.0).unwrap();
        assert!((w.cdf(2.0) - (1.0 - (-2f64).exp())).abs() < 1e-15);
        assert!((w.pdf(2.0) - e.pdf(2.0)).abs() < 1e-15);
    }

    #[test]
    fn parse_and_display_round_trip() {
        for b in exemplars() {
            let s = b.to_string();
            assert_eq!(s.parse::<Baseline>().unwrap(), b, "{s}");
        }
        let w: Baseline = "weibull:shape=1.5,scale=1".parse().unwrap();
        assert_eq!(w, Baseline::weibull(1.5, 1.0).unwrap());
        assert_eq!("exponential".parse::<Baseline>().unwrap(), Baseline::exponential(1.0).unwrap());
    }

    #[test]
    fn bad_configs_are_rejected() {
        for s in ["gamma", "exponential:rate=-1", "weibull:shape=0", "exponential:lambda=2", "uniform:x", "weibull:shape=abc"] {
            let e = s.parse::<Baseline>().unwrap_err();
            assert_eq!(e.kind(), "config", "{s}");
        }
    }

    #[test]
    fn derivative_of_cdf_is_pdf() {
        for b in exemplars() {
            let (q0, q1) = (b.quantile(0.001).unwrap(), b.quantile(0.999).unwrap());
            for i in 0..1000 {
                let x = q0 + (q1 - q0) * (i as f64 + 0.5) / 1000.0;
                let h = 1e-6 * x.abs().max(1e-3);
                let d = (b.cdf(x + h) - b.cdf(x - h)) / (2.0 * h);
                assert!((d - b.pdf(x)).abs() <= 1e-5, "{b} at {x}: {d} vs {}", b.pdf(x));
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for b in exemplars() {
            for i in 1..1000 {
                let p = i as f64 / 1000.0;
                let x = b.quantile(p).unwrap();
                assert!((b.cdf(x) - p).abs() < 1e-12);
                let back = b.quantile(b.cdf(x)).unwrap();
                assert!((back - x).abs() <= 1e-8 * x.abs().max(1.0), "{b} p={p}");
            }
        }
    }

    #[test]
    fn neg_log_cdf_maps_agree() {
        for b in exemplars() {
            for &t in &[1e-12, 1e-6, 0.01, 0.5, 0.69, 0.7, 1.0, 5.0, 25.0, 40.0, 200.0] {
                let x = b.from_neg_log_cdf(t);
                let back = b.neg_log_cdf(x);
                // x near the upper edge carries only ~1e-16 absolute resolution in t.
                assert!((back - t).abs() <= 1e-9 * t + 1e-15, "{b} t={t} back={back}");
                let lp = b.log_pdf_at_neg_log_cdf(t);
                let direct = b.log_pdf(x);
                assert!((lp - direct).abs() <= 1e-9 * direct.abs().max(1.0), "{b} t={t}: {lp} vs {direct}");
            }
        }
    }

    #[test]
    fn analytic_dlog_pdf_matches_differences() {
        for b in exemplars() {
            for p in [0.1, 0.4, 0.8] {
                let x = b.quantile(p).unwrap();
                let h = 1e-5 * x;
                let fd = (b.log_pdf(x + h) - b.log_pdf(x - h)) / (2.0 * h);
                assert!((fd - b.dlog_pdf(x)).abs() < 1e-6, "{b} p={p}");
            }
        }
    }

    #[test]
    fn outside_support_returns_limits() {
        for b in exemplars() {
            assert_eq!(b.cdf(-1.0), 0.0);
            assert_eq!(b.pdf(-1.0), 0.0);
        }
        assert_eq!(Baseline::uniform().cdf(2.0), 1.0);
        assert_eq!(Baseline::uniform().pdf(2.0), 0.0);
        assert!(Baseline::uniform().quantile(1.5).is_err());
    }

    #[test]
    fn serde_uses_spec_strings() {
        let b = Baseline::weibull(1.5, 1.0).unwrap();
        let js = serde_json::to_string(&b).unwrap();
        assert_eq!(js, "\"weibull:shape=1.5,scale=1\"");
        let back: Baseline = serde_json::from_str(&js).unwrap();
        assert_eq!(back, b);
    }
}
