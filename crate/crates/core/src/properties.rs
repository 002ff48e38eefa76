//! Property tests across modules.

use proptest::prelude::*;

use crate::baseline::{Baseline, BaselineModel};
use crate::bivariate::{BivariateRbg, MMatrix};
use crate::estimate::{sufficient_stats, ThetaVector};
use crate::numerics::{inv_reg_lower_gamma, reg_lower_gamma, reg_upper_gamma};
use crate::order_stats::{min_survival, min_survival_series, SeriesTruncation};
use crate::rbg::RbgDistribution;

fn baseline() -> impl Strategy<Value = Baseline> {
    prop_oneof![
        Just(Baseline::uniform()),
        (0.2f64..5.0).prop_map(|r| Baseline::exponential(r).unwrap()),
        (0.5f64..4.0, 0.2f64..5.0).prop_map(|(k, s)| Baseline::weibull(k, s).unwrap()),
    ]
}

fn quad() -> crate::numerics::QuadratureSpec {
    BivariateRbg::<Baseline>::default_quadrature()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn incomplete_gamma_ratios_are_complementary_and_monotone(a in 0.05f64..50.0, x in 0.0f64..80.0, dx in 0.0f64..5.0) {
        let p = reg_lower_gamma(a, x).unwrap();
        let q = reg_upper_gamma(a, x).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p + q - 1.0).abs() < 1e-13);
        prop_assert!(reg_lower_gamma(a, x + dx).unwrap() >= p - 1e-15);
    }

    #[test]
    fn inverse_incomplete_gamma_round_trips(a in 0.1f64..30.0, p in 0.001f64..0.999) {
        let x = inv_reg_lower_gamma(a, p).unwrap();
        prop_assert!((reg_lower_gamma(a, x).unwrap() - p).abs() < 1e-10);
    }

    #[test]
    fn quantile_inverts_cdf(b in baseline(), a in 0.2f64..8.0, p in 0.001f64..0.999) {
        let d = RbgDistribution::new(a, b).unwrap();
        let x = d.quantile(p).unwrap();
        prop_assert!(b.in_support(x));
        prop_assert!((d.cdf(x).unwrap() - p).abs() < 1e-9);
    }

    #[test]
    fn cdf_is_monotone_and_pdf_nonnegative(b in baseline(), a in 0.2f64..8.0, p in 0.01f64..0.98, dp in 0.0f64..0.01) {
        let d = RbgDistribution::new(a, b).unwrap();
        let x1 = d.quantile(p).unwrap();
        let x2 = d.quantile(p + dp).unwrap();
        prop_assert!(d.cdf(x2).unwrap() >= d.cdf(x1).unwrap());
        prop_assert!(d.pdf(x1).unwrap() >= 0.0);
        prop_assert!((d.cdf(x1).unwrap() + d.survival(x1).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn series_stays_within_its_bound(a in 0.3f64..3.0, n in 1usize..4, t in 0.05f64..2.0) {
        let d = RbgDistribution::new(a, Baseline::uniform()).unwrap();
        let x = (-t).exp();
        let est = min_survival_series(&d, n, x, SeriesTruncation::default()).unwrap();
        prop_assert!((est.value - min_survival(&d, n, x).unwrap()).abs() <= est.bound);
    }

    #[test]
    fn strict_cross_ratio_is_at_least_one(
        b in baseline(),
        m11 in 0.01f64..2.0,
        levels in prop::array::uniform4(0.02f64..0.98),
    ) {
        let model = BivariateRbg::kernel(b, b, MMatrix::strict(2.0, 2.0, m11), quad()).unwrap();
        let q: Vec<f64> = levels.iter().map(|&p| b.quantile(p).unwrap()).collect();
        prop_assume!(q[0] != q[1] && q[2] != q[3]);
        let r = model
            .plrd_local_ratio(q[0].max(q[1]), q[0].min(q[1]), q[2].max(q[3]), q[2].min(q[3]))
            .unwrap();
        prop_assert!(r >= 1.0 - 1e-12);
    }

    #[test]
    fn independence_cross_ratio_is_one(b in baseline(), ax in 0.3f64..5.0, ay in 0.3f64..5.0, levels in prop::array::uniform4(0.02f64..0.98)) {
        let model = BivariateRbg::kernel(b, b, MMatrix::independence(ax, ay), quad()).unwrap();
        let q: Vec<f64> = levels.iter().map(|&p| b.quantile(p).unwrap()).collect();
        prop_assume!(q[0] != q[1] && q[2] != q[3]);
        let r = model
            .plrd_local_ratio(q[0].max(q[1]), q[0].min(q[1]), q[2].max(q[3]), q[2].min(q[3]))
            .unwrap();
        prop_assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn theta_round_trips_through_matrix(v in prop::array::uniform8(-5.0f64..5.0)) {
        let theta = ThetaVector(v);
        prop_assert_eq!(ThetaVector::from_matrix(&theta.to_matrix()), theta);
        prop_assert_eq!(theta.to_matrix().get(0, 0), 0.0);
    }

    #[test]
    fn sufficient_stats_ignore_order(pts in prop::collection::vec((0.01f64..0.99, 0.01f64..0.99), 2..30), shift in 0usize..30) {
        let b = Baseline::uniform();
        let mut rotated = pts.clone();
        let k = shift % pts.len();
        rotated.rotate_left(k);
        let a = sufficient_stats(&pts, &b, &b).unwrap();
        let r = sufficient_stats(&rotated, &b, &b).unwrap();
        for j in 0..8 {
            prop_assert!((a.means[j] - r.means[j]).abs() <= 1e-12 * (1.0 + a.means[j].abs()));
        }
    }
}
