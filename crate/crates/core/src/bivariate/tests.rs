use super::*;
use crate::baseline::Baseline;
use crate::numerics::{integrate_1d, log_gamma, QuadratureSpec};
use crate::rbg::RbgDistribution;
use crate::stats::{ks_critical_value, ks_statistic};

fn quad() -> QuadratureSpec {
    BivariateRbg::<Baseline>::default_quadrature()
}

fn uniform() -> Baseline {
    Baseline::uniform()
}

fn expo() -> Baseline {
    Baseline::exponential(1.0).unwrap()
}

fn weibull() -> Baseline {
    Baseline::weibull(1.5, 1.0).unwrap()
}

/// Exponential(1) margins with `u·u` and `v·v` interactions of opposite sign.
/// Since `v ≈ u` as `u → -∞`, the `u·u` coefficient of the lower-left corner
/// is `0.3 − 0.5 < 0`, which keeps the kernel integrable.
fn coupled_matrix() -> MMatrix {
    MMatrix::from_entries([0.0, 2.0, 1.0, 2.0, 0.3, 0.0, 1.0, 0.0, -0.5])
}

fn coupled() -> BivariateRbg {
    BivariateRbg::new(expo(), expo(), coupled_matrix(), quad()).unwrap()
}

/// ln Ψ of [`coupled_matrix`]; scipy dblquad in (s, t), cross-checked with mpmath.
const COUPLED_LOG_PSI: f64 = 0.028_272_061_957;

fn strict_kernel(m11: f64) -> BivariateRbg {
    BivariateRbg::kernel(uniform(), uniform(), MMatrix::strict(2.0, 2.0, m11), quad()).unwrap()
}

fn grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

#[test]
fn independence_factorizes_into_univariate_pdfs() {
    let model = BivariateRbg::new(uniform(), uniform(), MMatrix::independence(2.0, 2.0), quad()).unwrap();
    let d = RbgDistribution::new(2.0, uniform()).unwrap();
    for &x in &grid(9) {
        for &y in &grid(9) {
            let joint = model.joint_density(x, y).unwrap();
            let prod = d.pdf(x).unwrap() * d.pdf(y).unwrap();
            assert!((joint - prod).abs() <= 1e-10 * prod.max(1.0), "({x}, {y})");
        }
    }
}

#[test]
fn strict_independence_normalizer_is_gamma_product() {
    for b in [uniform(), weibull()] {
        let model = BivariateRbg::new(b, b, MMatrix::independence(2.5, 0.7), quad()).unwrap();
        let expected = log_gamma(2.5).unwrap() + log_gamma(0.7).unwrap();
        assert!((model.log_psi().unwrap() - expected).abs() < 1e-9);
        assert!((model.m().get(0, 0) + expected).abs() < 1e-9);
    }
}

#[test]
fn independence_normalizer_factorizes() {
    // ∫ (-ln G)^{a-1} g^c dx for Exponential(1), mpmath at 30 digits.
    let ix = 0.853_581_537_031_184_0_f64;
    let iy = 2.098_750_824_462_868_9_f64;
    let m = MMatrix::from_entries([0.0, 3.0, 0.7, 2.0, 0.0, 0.0, 1.5, 0.0, 0.0]);
    let model = BivariateRbg::new(expo(), expo(), m, quad()).unwrap();
    assert!((model.log_psi().unwrap() - (ix * iy).ln()).abs() < 1e-8);
}

#[test]
fn coupled_normalizer_matches_reference() {
    assert!((coupled().log_psi().unwrap() - COUPLED_LOG_PSI).abs() < 1e-9);
}

#[test]
fn normalized_density_integrates_to_one_in_x_space() {
    let model = coupled();
    let spec = QuadratureSpec::new(15, 1e-9, 1e-9, 2000).unwrap();
    let total = crate::numerics::integrate_2d(
        |x, y| model.joint_density(x, y).unwrap(),
        (0.0, f64::INFINITY),
        (0.0, f64::INFINITY),
        &spec,
    )
    .unwrap();
    assert!((total - 1.0).abs() < 1e-5, "total = {total}");
}

#[test]
fn symmetric_matrix_swaps_arguments() {
    let model = coupled();
    for &(x, y) in &[(0.2, 1.7), (0.9, 3.1), (2.5, 0.05)] {
        let a = model.joint_log_density(x, y).unwrap();
        let b = model.joint_log_density(y, x).unwrap();
        assert!((a - b).abs() < 1e-13);
    }
}

#[test]
fn strict_interaction_is_rejected() {
    for m11 in [0.3, -0.3] {
        let err = BivariateRbg::new(uniform(), uniform(), MMatrix::strict(2.0, 2.0, m11), quad()).unwrap_err();
        assert_eq!(err.kind(), "non-integrable");
    }
    let err = BivariateRbg::new(uniform(), uniform(), MMatrix::independence(0.0, 2.0), quad()).unwrap_err();
    assert_eq!(err.kind(), "non-integrable");
}

#[test]
fn probe_rejects_growing_kernel() {
    let m = MMatrix::from_entries([0.0, 2.0, 1.0, 2.0, 0.3, 0.0, 1.0, 0.0, 0.0]);
    let err = BivariateRbg::new(expo(), expo(), m, quad()).unwrap_err();
    assert_eq!(err.kind(), "non-integrable");
}

#[test]
fn matrix_predicates() {
    let s = MMatrix::strict(2.0, 3.0, 0.4);
    assert!(s.is_strict_submodel());
    assert!(!s.is_independent());
    assert!(MMatrix::independence(1.0, 1.0).is_independent());
    assert!(!coupled_matrix().is_strict_submodel());
    let e = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0];
    let m = MMatrix::from_entries(e);
    assert_eq!(m.to_array(), e);
    assert!((m.determinant() + 3.0).abs() < 1e-12);
    let mut signs = MMatrix::independence(1.0, 1.0);
    signs.set(1, 2, 1.0);
    signs.set(2, 1, 1.0);
    signs.set(2, 2, -1.0);
    assert!(signs.literature_sign_conditions());
    assert!(!coupled_matrix().literature_sign_conditions());
}

#[test]
fn dependence_sign_examples() {
    assert_eq!(dependence_sign(&MMatrix::independence(2.0, 2.0)).sign, DependenceSign::Independent);
    // m22/m12 = 0.5 < m20/m10 = 1 < m21/m11 = 2.
    let positive = MMatrix::from_entries([0.0, 1.0, 1.0, 1.0, 1.0, 2.0, 1.0, 2.0, 1.0]);
    let report = dependence_sign(&positive);
    assert_eq!(report.sign, DependenceSign::Positive);
    assert_eq!(report.determinant, positive.determinant());
    let negative = MMatrix::from_entries([0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0]);
    assert_eq!(dependence_sign(&negative).sign, DependenceSign::Negative);
    assert_eq!(dependence_sign(&MMatrix::strict(2.0, 2.0, 0.3)).sign, DependenceSign::Indeterminate);
}

#[test]
fn conditional_density_matches_family() {
    let spec = ConditionalSpec::new(uniform(), uniform(), |_| 1.0, |_| 1.0);
    for &x in &grid(7) {
        assert!((conditional_density_rbg(x, 0.5, &spec).unwrap() - 1.0).abs() < 1e-14);
    }
    let spec = ConditionalSpec::new(uniform(), uniform(), |_| 2.0, |_| 2.0);
    let e_inv = (-1.0f64).exp();
    assert!((conditional_density_rbg(e_inv, 0.3, &spec).unwrap() - 1.0).abs() < 1e-14);
    let bad = ConditionalSpec::new(uniform(), uniform(), |_| -1.0, |_| 1.0);
    assert_eq!(conditional_density_rbg(0.5, 0.5, &bad).unwrap_err().kind(), "domain");
}

#[test]
fn conditional_density_integrates_to_one() {
    let spec = ConditionalSpec::new(expo(), expo(), |y| 2.0 + y, |x| 2.0 + x);
    for y in [0.1, 1.0, 3.0] {
        let total = integrate_1d(
            |x| conditional_density_rbg(x, y, &spec).unwrap_or(0.0),
            0.0,
            f64::INFINITY,
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!((total - 1.0).abs() < 1e-6, "y = {y}: {total}");
    }
}

#[test]
fn strict_conditional_equals_family_density() {
    let model = strict_kernel(0.3);
    let spec = model.conditional_spec().unwrap();
    for &y in &[0.05, 0.3, 0.6, 0.9] {
        let law = model.conditional_of_x_given_y(y).unwrap();
        assert!(law.is_exact());
        assert!((law.shape() - spec.shape_x_given_y(y)).abs() < 1e-15);
        for &x in &grid(15) {
            let a = law.pdf(x).unwrap();
            let b = conditional_density_rbg(x, y, &spec).unwrap();
            assert!((a - b).abs() <= 1e-9 * b.max(1.0), "x = {x}, y = {y}");
        }
    }
}

#[test]
fn zero_interaction_conditional_is_univariate() {
    let model = BivariateRbg::new(weibull(), weibull(), MMatrix::independence(2.0, 3.0), quad()).unwrap();
    let d = RbgDistribution::new(2.0, weibull()).unwrap();
    let law = model.conditional_of_x_given_y(0.7).unwrap();
    for i in 1..=20 {
        let x = 0.15 * i as f64;
        assert!((law.pdf(x).unwrap() - d.pdf(x).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn nonpositive_conditional_shape_is_reported() {
    // A(y) = 2 + 0.3 ln(-ln y) ≤ 0 once -ln y ≤ e^{-20/3}.
    let model = strict_kernel(0.3);
    let y = (-(-7.0f64).exp()).exp();
    assert_eq!(model.conditional_of_x_given_y(y).unwrap_err().kind(), "conditional-nonexistence");
}

#[test]
fn general_conditional_is_normalized() {
    let model = coupled();
    for &y in &[0.1, 1.0, 4.0] {
        let law = model.conditional_of_x_given_y(y).unwrap();
        assert!(!law.is_exact());
        let total = integrate_1d(|x| law.pdf(x).unwrap(), 0.0, f64::INFINITY, &QuadratureSpec::default()).unwrap();
        assert!((total - 1.0).abs() < 1e-6, "y = {y}: {total}");
        let upper = law.cdf(40.0).unwrap();
        assert!((upper - 1.0).abs() < 1e-9);
        let mid = law.cdf(1.0).unwrap();
        let direct = integrate_1d(|x| law.pdf(x).unwrap(), 0.0, 1.0, &QuadratureSpec::default()).unwrap();
        assert!((mid - direct).abs() < 1e-8);
    }
}

#[test]
fn strict_conditional_transform_moments() {
    let model = strict_kernel(0.3);
    let integrator = model.integrator().clone();
    for &y in &[0.2, 0.5, 0.8] {
        let law = model.conditional_of_x_given_y(y).unwrap();
        let numeric = ConditionalLaw::build(uniform(), law.shape(), 1.0, &integrator, false).unwrap();
        let mean = numeric.moment_transform(1).unwrap();
        assert!((mean - law.shape()).abs() < 1e-6);
        assert!((law.moment_transform(1).unwrap() - law.moment_transform_closed_form(1).unwrap()).abs() < 1e-6);
    }
    // A(y) = 2 at -ln y = 1.
    let law = model.conditional_of_x_given_y((-1.0f64).exp()).unwrap();
    assert_eq!(law.moment_transform_closed_form(2), Some(6.0));
    assert!((law.moment_transform(2).unwrap() - 6.0).abs() < 1e-6);
}

#[test]
fn conditional_mean_under_uniform_baseline() {
    // A(y) = 1 at -ln y = 1; E[e^{-T}] = 2^{-A}.
    let model = BivariateRbg::kernel(uniform(), uniform(), MMatrix::strict(1.0, 2.0, 0.3), quad()).unwrap();
    let m = model.conditional_moment_k((-1.0f64).exp(), 1).unwrap();
    assert!((m - 0.5).abs() < 1e-9);
}

#[test]
fn independence_conditional_moment_ignores_y() {
    let model = BivariateRbg::new(expo(), expo(), MMatrix::independence(2.0, 3.0), quad()).unwrap();
    let first = model.conditional_moment_k(0.1, 1).unwrap();
    for y in [1.0, 5.0] {
        assert!((model.conditional_moment_k(y, 1).unwrap() - first).abs() < 1e-6);
    }
}

#[test]
fn independence_marginal_is_univariate() {
    let model = BivariateRbg::new(weibull(), weibull(), MMatrix::independence(2.0, 3.0), quad()).unwrap();
    let dx = RbgDistribution::new(2.0, weibull()).unwrap();
    let dy = RbgDistribution::new(3.0, weibull()).unwrap();
    for i in 1..=10 {
        let x = 0.25 * i as f64;
        assert!((model.marginal_density_x(x).unwrap() - dx.pdf(x).unwrap()).abs() < 1e-6);
        assert!((model.marginal_density_y(x).unwrap() - dy.pdf(x).unwrap()).abs() < 1e-6);
        let joint = model.joint_density(x, 1.3).unwrap();
        let prod = model.marginal_density_x(x).unwrap() * model.marginal_density_y(1.3).unwrap();
        assert!((joint - prod).abs() < 1e-8);
    }
}

#[test]
fn marginal_integrates_to_one() {
    let model = coupled();
    let spec = QuadratureSpec::new(15, 1e-9, 1e-9, 400).unwrap();
    let total = integrate_1d(|x| model.marginal_density_x(x).unwrap(), 0.0, f64::INFINITY, &spec).unwrap();
    assert!((total - 1.0).abs() < 1e-5, "{total}");
}

#[test]
fn strict_marginal_routes_agree() {
    let model = strict_kernel(0.3);
    for &x in &grid(20) {
        let a = model.marginal_density_x(x).unwrap();
        let b = model.marginal_density_x_closed_form(x).unwrap();
        assert!((a - b).abs() <= 1e-5 * b.max(1.0), "x = {x}: {a} vs {b}");
        let a = model.marginal_density_y(x).unwrap();
        let b = model.marginal_density_y_closed_form(x).unwrap();
        assert!((a - b).abs() <= 1e-5 * b.max(1.0));
    }
    assert_eq!(coupled().marginal_density_x_closed_form(0.5).unwrap_err().kind(), "config");
}

#[test]
fn cross_ratio_properties() {
    let indep = BivariateRbg::new(uniform(), uniform(), MMatrix::independence(2.0, 2.0), quad()).unwrap();
    let strict = strict_kernel(0.3);
    let g = grid(6);
    for i in 0..g.len() {
        for j in 0..i {
            let (x1, x2, y1, y2) = (g[i], g[j], g[(i + 2) % 6].max(g[j]) + 0.01, g[j]);
            let r = indep.plrd_local_ratio(x1, x2, y1, y2).unwrap();
            assert!((r - 1.0).abs() < 1e-12);
            let r = strict.plrd_local_ratio(x1, x2, y1, y2).unwrap();
            let back = strict.joint_log_density(x1, y2).unwrap() + strict.joint_log_density(x2, y1).unwrap()
                - strict.joint_log_density(x1, y1).unwrap()
                - strict.joint_log_density(x2, y2).unwrap();
            assert!((r * back.exp() - 1.0).abs() < 1e-12);
        }
    }
    assert_eq!(strict.plrd_local_ratio(0.2, 0.5, 0.7, 0.1).unwrap_err().kind(), "domain");
    assert_eq!(strict.plrd_local_ratio(1.2, 0.5, 0.7, 0.1).unwrap_err().kind(), "domain");
}

/// Golden-section maximum of a unimodal function on `[lo, hi]`.
fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-12 {
        let a = hi - r * (hi - lo);
        let b = lo + r * (hi - lo);
        if f(a) < f(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn independence_mode_is_product_of_marginal_modes() {
    let model = BivariateRbg::new(weibull(), weibull(), MMatrix::independence(2.0, 3.0), quad()).unwrap();
    let mode = mode_find(&model, (0.5, 1.0)).unwrap();
    let dx = RbgDistribution::new(2.0, weibull()).unwrap();
    let dy = RbgDistribution::new(3.0, weibull()).unwrap();
    let xs = golden_max(|x| dx.log_pdf(x).unwrap(), 1e-6, 4.0);
    let ys = golden_max(|y| dy.log_pdf(y).unwrap(), 1e-6, 4.0);
    assert!((mode.x - xs).abs() < 1e-5 && (mode.y - ys).abs() < 1e-5, "{mode:?} vs ({xs}, {ys})");
    assert!(mode.negative_definite);
    assert!(mode.gradient_norm <= 1e-8);
    let h = 1e-6;
    let gx = (model.joint_log_density(mode.x + h, mode.y).unwrap() - model.joint_log_density(mode.x - h, mode.y).unwrap())
        / (2.0 * h);
    let gy = (model.joint_log_density(mode.x, mode.y + h).unwrap() - model.joint_log_density(mode.x, mode.y - h).unwrap())
        / (2.0 * h);
    assert!(gx.abs() < 1e-7 && gy.abs() < 1e-7);
}

#[test]
fn interacting_mode_has_zero_gradient() {
    let m = MMatrix::from_entries([0.0, 2.0, 1.0, 2.0, 0.0, 0.0, 1.0, 0.0, -0.2]);
    let model = BivariateRbg::new(weibull(), weibull(), m, quad()).unwrap();
    let mode = mode_find(&model, (1.0, 1.0)).unwrap();
    let g = model.log_density_gradient(mode.x, mode.y).unwrap();
    assert!(g[0].hypot(g[1]) <= 1e-8);
    assert!(mode.negative_definite);
    assert!((mode.x - mode.y).abs() < 1e-6);
}

#[test]
fn unbounded_uniform_density_has_no_interior_mode() {
    // The family density -ln x with a = 2 grows without bound as x → 0.
    let model = BivariateRbg::new(uniform(), uniform(), MMatrix::independence(2.0, 2.0), quad()).unwrap();
    let err = mode_find(&model, (0.5, 0.5)).unwrap_err();
    assert_eq!(err.kind(), "non-convergence");
}

#[test]
fn gibbs_independence_marginal_passes_ks() {
    let model = BivariateRbg::new(weibull(), weibull(), MMatrix::independence(2.0, 3.0), quad()).unwrap();
    let draws = gibbs_sample(&model, 100_000, 10, 3).unwrap();
    let xs: Vec<f64> = draws.iter().map(|p| p.0).collect();
    let d = RbgDistribution::new(2.0, weibull()).unwrap();
    let ks = ks_statistic(&xs, |x| d.cdf(x).unwrap());
    assert!(ks <= ks_critical_value(xs.len(), 0.01), "ks = {ks}");
}

#[test]
fn gibbs_grid_matches_quadrature_moment() {
    let model = coupled();
    let draws = gibbs_sample(&model, 100_000, 500, 11).unwrap();
    let bx = *model.baseline_x();
    let products: Vec<f64> = draws
        .iter()
        .map(|&(x, y)| bx.neg_log_cdf(x).ln() * bx.neg_log_cdf(y).ln())
        .collect();
    let n = products.len() as f64;
    let mean = products.iter().sum::<f64>() / n;
    let var = products.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
    // Lag-one autocorrelation inflates the naive standard error.
    let lag: f64 = products.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / ((n - 1.0) * var);
    let se = (var / n * (1.0 + lag) / (1.0 - lag)).sqrt();
    let k = kernel_integrals(model.m(), &bx, &bx, model.integrator(), MomentOrder::First).unwrap();
    let exact = k.mean()[3];
    assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact}, se {se}");
}

#[test]
fn gibbs_is_deterministic() {
    let model = coupled();
    assert_eq!(gibbs_sample(&model, 50, 5, 42).unwrap(), gibbs_sample(&model, 50, 5, 42).unwrap());
    assert_ne!(gibbs_sample(&model, 50, 5, 42).unwrap(), gibbs_sample(&model, 50, 5, 43).unwrap());
}

#[test]
fn model_config_round_trip() {
    let text = r#"{"baseline_x": "exponential:rate=1", "baseline_y": "exponential",
        "M": [0, 2, 1, 2, 0.3, 0, 1, 0, -0.5], "quadrature": {"nodes": 15, "tol": 1e-10}}"#;
    let cfg = ModelConfig::from_json(text).unwrap();
    assert_eq!(cfg.matrix().unwrap(), coupled_matrix());
    let model = cfg.build(None).unwrap();
    assert!((model.log_psi().unwrap() - COUPLED_LOG_PSI).abs() < 1e-8);
    assert_eq!(cfg.quadrature_spec(Some(21)).unwrap().node_count, 21);

    let strict = ModelConfig::from_json(r#"{"baseline_x": "uniform", "baseline_y": "uniform", "strict": {"m10": 2, "m01": 2, "m11": 0.3}}"#).unwrap();
    assert_eq!(strict.matrix().unwrap(), MMatrix::strict(2.0, 2.0, 0.3));
    assert_eq!(strict.build(None).unwrap_err().kind(), "non-integrable");

    let both = ModelConfig::from_json(r#"{"baseline_x": "uniform", "baseline_y": "uniform", "M": [0,1,1,1,0,0,1,0,0], "strict": {"m10": 2, "m01": 2, "m11": 0}}"#).unwrap();
    assert_eq!(both.matrix().unwrap_err().kind(), "config");
    assert!(ModelConfig::from_json(r#"{"baseline_x": "gamma", "baseline_y": "uniform"}"#).is_err());
}
