//! `rbg`: evaluation, sampling, fitting and verification from the shell.
//!
//! Exit status is 0 on success, 1 on a domain, configuration or input error
//! and 2 when a numerical iteration fails. Errors are reported as a single
//! JSON line on standard error.

mod format;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rbg_core::bivariate::{gibbs_sample, mode_find, BivariateRbg};
use rbg_core::characterize::{lorenz_order_check, quantile_grid, verification_suite, LorenzDirection};
use rbg_core::estimate::{fit_mle, FitMethod, FitOptions, ThetaVector};
use rbg_core::order_stats::{min_survival, min_survival_series, SeriesTruncation};
use rbg_core::rbg::shape_standard_error;
use rbg_core::{fit_univariate_a, Baseline, BaselineModel, Error, ModelConfig, RbgDistribution};

use format::{csv_text, emit, fmt8, json};

type CliResult<T> = Result<T, Error>;

#[derive(Debug, Parser)]
#[command(name = "rbg", version, about = "Gamma-generated distributions: evaluate, sample, fit and verify")]
struct Cli {
    /// Gauss-Legendre node count for bivariate quadrature.
    #[arg(long, global = true, env = "RBG_QUAD_NODES")]
    quad_nodes: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate pdf, cdf, survival, hazard or quantile of the univariate law.
    Eval(EvalArgs),
    /// Draw from the univariate law.
    Sample(SampleArgs),
    /// Maximum-likelihood fit: one CSV column fits the shape, two fit the bivariate model.
    Fit(FitArgs),
    /// Run every characterization check and report residuals as JSON.
    Verify(VerifyArgs),
    /// Generalized Lorenz curves of two shapes and their ordering.
    Lorenz(LorenzArgs),
    /// Survival of the sample minimum, directly and by its series.
    Orderstats(OrderstatsArgs),
    /// Evaluate the bivariate density, its marginals or its conditionals.
    BivEval(BivEvalArgs),
    /// Gibbs draws from the bivariate model.
    BivSample(BivSampleArgs),
    /// Locate the mode of the bivariate density.
    BivMode(BivModeArgs),
}

#[derive(Debug, Args)]
struct UnivariateArgs {
    /// Baseline as `name` or `name:key=value,...` (uniform, exponential:rate, weibull:shape,scale).
    #[arg(long, default_value = "uniform", value_parser = parse_baseline)]
    baseline: Baseline,
    /// Shape parameter `a > 0`.
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UnivariateQuantity {
    Pdf,
    LogPdf,
    Cdf,
    Survival,
    Hazard,
    /// Inverse cdf; `--x` values are probabilities.
    Quantile,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    dist: UnivariateArgs,
    /// Points to evaluate at, comma separated or repeated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x: Vec<f64>,
    /// Quantity to evaluate.
    #[arg(long, value_enum, default_value = "pdf")]
    what: UnivariateQuantity,
    /// Also write `(x, value)` on 200 quantile points to this CSV file.
    #[arg(long)]
    emit_curve: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Baseline as `name` or `name:key=value,...`.
    #[arg(long, default_value = "uniform", value_parser = parse_baseline)]
    baseline: Baseline,
    /// Shape parameter `a > 0`.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    a: f64,
    /// Number of draws.
    #[arg(long)]
    n: usize,
    /// Random seed; equal seeds give identical output.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// CSV with a header row and one column (x) or two columns (x, y).
    #[arg(long)]
    data: PathBuf,
    /// Baseline for a one-column fit and default for both axes of a two-column fit.
    #[arg(long, default_value = "uniform", value_parser = parse_baseline)]
    baseline: Baseline,
    /// Baseline of the x column.
    #[arg(long, value_parser = parse_baseline)]
    baseline_x: Option<Baseline>,
    /// Baseline of the y column.
    #[arg(long, value_parser = parse_baseline)]
    baseline_y: Option<Baseline>,
    /// Solver for the likelihood equations.
    #[arg(long, value_enum, default_value = "gradient")]
    method: MethodArg,
    /// JSON array of the eight starting parameters; univariate fits by default.
    #[arg(long)]
    init: Option<PathBuf>,
    /// One-based indices of the parameters to estimate; the rest stay at their start.
    #[arg(long, value_delimiter = ',')]
    free: Vec<usize>,
    /// One-based parameter order of a cyclic sweep.
    #[arg(long, value_delimiter = ',')]
    sweep_order: Vec<usize>,
    /// Bound on the largest likelihood-equation residual.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Output JSON file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Cyclic,
    Gradient,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    dist: UnivariateArgs,
    /// Output JSON file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LorenzArgs {
    /// Baseline as `name` or `name:key=value,...`.
    #[arg(long, default_value = "uniform", value_parser = parse_baseline)]
    baseline: Baseline,
    /// Smaller shape.
    #[arg(long, allow_negative_numbers = true)]
    a1: f64,
    /// Larger shape.
    #[arg(long, allow_negative_numbers = true)]
    a2: f64,
    /// Number of equally spaced levels in (0, 1).
    #[arg(long, default_value_t = 99)]
    points: usize,
    /// Also write `(p, GL₁, GL₂)` to this CSV file.
    #[arg(long)]
    emit_curve: Option<PathBuf>,
    /// Output JSON file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OrderstatsArgs {
    #[command(flatten)]
    dist: UnivariateArgs,
    /// Sample size whose minimum is considered.
    #[arg(long)]
    n: usize,
    /// Points; defaults to 19 quantiles from 0.05 to 0.95.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x: Vec<f64>,
    /// Largest series index per factor.
    #[arg(long, default_value_t = 30)]
    max_index: usize,
    /// Output CSV file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BivariateQuantity {
    Density,
    LogDensity,
    /// Marginal density of X at `--x`.
    MarginalX,
    /// Marginal density of Y at `--y`.
    MarginalY,
    /// Density of X at `--x` given Y at `--y`.
    ConditionalX,
    /// Density of Y at `--y` given X at `--x`.
    ConditionalY,
}

#[derive(Debug, Args)]
struct BivEvalArgs {
    /// Model file: {baseline_x, baseline_y, M | strict, quadrature}.
    #[arg(long)]
    model: PathBuf,
    /// X coordinates, comma separated or repeated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x: Vec<f64>,
    /// Y coordinates, paired with `--x`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    y: Vec<f64>,
    /// Quantity to evaluate.
    #[arg(long, value_enum, default_value = "density")]
    what: BivariateQuantity,
    /// Use the unnormalized kernel; required when the model has no finite normalizer.
    #[arg(long)]
    kernel: bool,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BivSampleArgs {
    /// Model file.
    #[arg(long)]
    model: PathBuf,
    /// Number of retained draws.
    #[arg(long)]
    n: usize,
    /// Discarded initial sweeps.
    #[arg(long, default_value_t = 500)]
    burn: usize,
    /// Random seed; equal seeds give identical output.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BivModeArgs {
    /// Model file.
    #[arg(long)]
    model: PathBuf,
    /// Starting x; the baseline median by default.
    #[arg(long, allow_negative_numbers = true)]
    x0: Option<f64>,
    /// Starting y; the baseline median by default.
    #[arg(long, allow_negative_numbers = true)]
    y0: Option<f64>,
    /// Output JSON file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_baseline(s: &str) -> Result<Baseline, String> {
    s.parse::<Baseline>().map_err(|e| e.to_string())
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn load_model(path: &Path, nodes: Option<usize>, kernel: bool) -> CliResult<BivariateRbg> {
    let cfg = ModelConfig::from_json(&read_text(path)?)?;
    if kernel {
        BivariateRbg::kernel(cfg.baseline_x, cfg.baseline_y, cfg.matrix()?, cfg.quadrature_spec(nodes)?)
    } else {
        cfg.build(nodes)
    }
}

/// Numeric CSV columns with a header row.
fn read_columns(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let width = reader
        .headers()
        .map_err(|e| Error::Config(format!("cannot read header of {}: {e}", path.display())))?
        .len();
    let mut columns = vec![Vec::new(); width];
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::Config(format!("{}: row {} column {} is not a number: '{field}'", path.display(), i + 1, j + 1))
            })?;
            columns[j].push(v);
        }
    }
    Ok(columns)
}

fn univariate(args: &UnivariateArgs) -> CliResult<RbgDistribution> {
    RbgDistribution::new(args.a, args.baseline)
}

fn evaluate(d: &RbgDistribution, what: UnivariateQuantity, x: f64) -> CliResult<f64> {
    match what {
        UnivariateQuantity::Pdf => d.pdf(x),
        UnivariateQuantity::LogPdf => d.log_pdf(x),
        UnivariateQuantity::Cdf => d.cdf(x),
        UnivariateQuantity::Survival => d.survival(x),
        UnivariateQuantity::Hazard => d.hazard(x),
        UnivariateQuantity::Quantile => d.quantile(x),
    }
}

fn quantity_name(what: UnivariateQuantity) -> &'static str {
    match what {
        UnivariateQuantity::Pdf => "pdf",
        UnivariateQuantity::LogPdf => "log_pdf",
        UnivariateQuantity::Cdf => "cdf",
        UnivariateQuantity::Survival => "survival",
        UnivariateQuantity::Hazard => "hazard",
        UnivariateQuantity::Quantile => "quantile",
    }
}

/// One value prints bare; several print as a CSV.
fn values_output(header: &[&str], rows: Vec<Vec<f64>>) -> CliResult<String> {
    if rows.len() == 1 {
        Ok(format!("{}\n", fmt8(*rows[0].last().expect("row has a value"))))
    } else {
        csv_text(header, &rows)
    }
}

fn run_eval(args: &EvalArgs) -> CliResult<()> {
    let d = univariate(&args.dist)?;
    if args.x.is_empty() && args.emit_curve.is_none() {
        return Err(Error::Config("eval needs --x or --emit-curve".into()));
    }
    let name = quantity_name(args.what);
    if let Some(path) = &args.emit_curve {
        let rows = (0..200)
            .map(|i| {
                let p = (i as f64 + 0.5) / 200.0;
                let x = if matches!(args.what, UnivariateQuantity::Quantile) { p } else { d.quantile(p)? };
                Ok(vec![x, evaluate(&d, args.what, x)?])
            })
            .collect::<CliResult<Vec<_>>>()?;
        emit(&csv_text(&["x", name], &rows)?, Some(path))?;
    }
    if args.x.is_empty() {
        return Ok(());
    }
    let rows = args
        .x
        .iter()
        .map(|&x| Ok(vec![x, evaluate(&d, args.what, x)?]))
        .collect::<CliResult<Vec<_>>>()?;
    emit(&values_output(&["x", name], rows)?, args.output.as_deref())
}

fn run_sample(args: &SampleArgs) -> CliResult<()> {
    let d = RbgDistribution::new(args.a, args.baseline)?;
    let rows: Vec<Vec<f64>> = d.sample(args.n, args.seed).into_iter().map(|x| vec![x]).collect();
    emit(&csv_text(&["x"], &rows)?, args.output.as_deref())
}

#[derive(Serialize)]
struct UnivariateFit {
    baseline: String,
    a: f64,
    standard_error: f64,
    n: usize,
}

fn run_fit(args: &FitArgs, nodes: Option<usize>) -> CliResult<()> {
    let columns = read_columns(&args.data)?;
    match columns.len() {
        1 => {
            let a = fit_univariate_a(&columns[0], &args.baseline)?;
            let n = columns[0].len();
            let out = UnivariateFit {
                baseline: args.baseline.to_string(),
                a,
                standard_error: shape_standard_error(a, n),
                n,
            };
            emit(&json(&out)?, args.output.as_deref())
        }
        2 => {
            let bx = args.baseline_x.unwrap_or(args.baseline);
            let by = args.baseline_y.unwrap_or(args.baseline);
            let data: Vec<(f64, f64)> = columns[0].iter().copied().zip(columns[1].iter().copied()).collect();
            let init = match &args.init {
                Some(p) => Some(
                    serde_json::from_str::<ThetaVector>(&read_text(p)?)
                        .map_err(|e| Error::Config(format!("invalid init file {}: {e}", p.display())))?,
                ),
                None => None,
            };
            let method = match args.method {
                MethodArg::Cyclic => FitMethod::Cyclic,
                MethodArg::Gradient => FitMethod::Gradient,
            };
            let mut options = FitOptions::with_method(method);
            if !args.free.is_empty() {
                if let Some(&k) = args.free.iter().find(|&&k| k == 0 || k > 8) {
                    return Err(Error::Config(format!("free index {k} outside 1..=8")));
                }
                options = options.with_free(&args.free);
            }
            if !args.sweep_order.is_empty() {
                options.sweep_order = args.sweep_order.clone();
            }
            options.tolerance = args.tol;
            options.max_iterations = args.max_iter;
            let mut quad = BivariateRbg::<Baseline>::default_quadrature();
            if let Some(n) = nodes {
                quad.node_count = n;
                quad.validate()?;
            }
            let fit = fit_mle(&data, &bx, &by, init, &options, quad)?;
            emit(&json(&fit)?, args.output.as_deref())?;
            // The result is still written so the last iterate can be inspected.
            if !fit.converged {
                return Err(Error::NonConvergence {
                    context: format!("{:?} fit after {} iterations", fit.method, fit.iterations).to_lowercase(),
                    estimate: fit.gradient_norm,
                    bound: options.tolerance,
                });
            }
            Ok(())
        }
        k => Err(Error::Config(format!("data file needs one or two columns, found {k}"))),
    }
}

#[derive(Serialize)]
struct VerifyEntry {
    check: String,
    config: String,
    max_abs_residual: f64,
    tolerance: f64,
    pass: bool,
}

fn run_verify(args: &VerifyArgs) -> CliResult<()> {
    let d = univariate(&args.dist)?;
    let config = format!("{} a={}", args.dist.baseline, args.dist.a);
    let report: Vec<VerifyEntry> = verification_suite(&d)?
        .into_iter()
        .map(|e| VerifyEntry {
            check: e.check,
            config: config.clone(),
            max_abs_residual: e.max_abs_residual,
            tolerance: e.tolerance,
            pass: e.pass,
        })
        .collect();
    emit(&json(&report)?, args.output.as_deref())
}

#[derive(Serialize)]
struct LorenzOutput {
    baseline: String,
    a1: f64,
    a2: f64,
    direction: LorenzDirection,
    constant_sign: bool,
    min_difference: f64,
    max_difference: f64,
    p: Vec<f64>,
    gl1: Vec<f64>,
    gl2: Vec<f64>,
}

fn run_lorenz(args: &LorenzArgs) -> CliResult<()> {
    if args.points == 0 {
        return Err(Error::Config("--points must be positive".into()));
    }
    let levels: Vec<f64> = (1..=args.points).map(|i| i as f64 / (args.points + 1) as f64).collect();
    let d1 = RbgDistribution::new(args.a1, args.baseline)?;
    let d2 = RbgDistribution::new(args.a2, args.baseline)?;
    let r = lorenz_order_check(&d1, &d2, &levels)?;
    if let Some(path) = &args.emit_curve {
        let rows: Vec<Vec<f64>> =
            (0..levels.len()).map(|i| vec![levels[i], r.curves.lhs[i], r.curves.rhs[i]]).collect();
        emit(&csv_text(&["p", "gl1", "gl2"], &rows)?, Some(path))?;
    }
    let out = LorenzOutput {
        baseline: args.baseline.to_string(),
        a1: args.a1,
        a2: args.a2,
        direction: r.direction,
        constant_sign: r.constant_sign(),
        min_difference: r.min_difference,
        max_difference: r.max_difference,
        p: levels,
        gl1: r.curves.lhs,
        gl2: r.curves.rhs,
    };
    emit(&json(&out)?, args.output.as_deref())
}

fn run_orderstats(args: &OrderstatsArgs) -> CliResult<()> {
    let d = univariate(&args.dist)?;
    let xs = if args.x.is_empty() { quantile_grid(&d, 19)? } else { args.x.clone() };
    let trunc = SeriesTruncation::new(args.max_index);
    let mut rows = Vec::with_capacity(xs.len());
    for &x in &xs {
        let est = min_survival_series(&d, args.n, x, trunc)?;
        if let Some(w) = &est.warning {
            eprintln!("{}", serde_json::json!({"warning": w, "x": x}));
        }
        rows.push(vec![x, min_survival(&d, args.n, x)?, est.value, est.bound]);
    }
    emit(&csv_text(&["x", "direct", "series", "bound"], &rows)?, args.output.as_deref())
}

fn run_biv_eval(args: &BivEvalArgs, nodes: Option<usize>) -> CliResult<()> {
    let model = load_model(&args.model, nodes, args.kernel)?;
    let (needs_x, needs_y) = match args.what {
        BivariateQuantity::MarginalX => (true, false),
        BivariateQuantity::MarginalY => (false, true),
        _ => (true, true),
    };
    let count = if needs_x { args.x.len() } else { args.y.len() };
    if count == 0 || (needs_x && needs_y && args.x.len() != args.y.len()) {
        return Err(Error::Config("give matching non-empty --x and --y lists for this quantity".into()));
    }
    let mut rows = Vec::with_capacity(count);
    for i in 0..count {
        let x = if needs_x { args.x[i] } else { f64::NAN };
        let y = if needs_y { args.y[i] } else { f64::NAN };
        let v = match args.what {
            BivariateQuantity::Density => model.joint_density(x, y)?,
            BivariateQuantity::LogDensity => model.joint_log_density(x, y)?,
            BivariateQuantity::MarginalX => model.marginal_density_x(x)?,
            BivariateQuantity::MarginalY => model.marginal_density_y(y)?,
            BivariateQuantity::ConditionalX => model.conditional_of_x_given_y(y)?.pdf(x)?,
            BivariateQuantity::ConditionalY => model.conditional_of_y_given_x(x)?.pdf(y)?,
        };
        rows.push(match (needs_x, needs_y) {
            (true, true) => vec![x, y, v],
            (true, false) => vec![x, v],
            _ => vec![y, v],
        });
    }
    let header: &[&str] = match (needs_x, needs_y) {
        (true, true) => &["x", "y", "value"],
        (true, false) => &["x", "value"],
        _ => &["y", "value"],
    };
    emit(&values_output(header, rows)?, args.output.as_deref())
}

fn run_biv_sample(args: &BivSampleArgs, nodes: Option<usize>) -> CliResult<()> {
    let model = load_model(&args.model, nodes, false)?;
    let rows: Vec<Vec<f64>> = gibbs_sample(&model, args.n, args.burn, args.seed)?
        .into_iter()
        .map(|(x, y)| vec![x, y])
        .collect();
    emit(&csv_text(&["x", "y"], &rows)?, args.output.as_deref())
}

fn run_biv_mode(args: &BivModeArgs, nodes: Option<usize>) -> CliResult<()> {
    let model = load_model(&args.model, nodes, false)?;
    let x0 = match args.x0 {
        Some(v) => v,
        None => model.baseline_x().quantile(0.5)?,
    };
    let y0 = match args.y0 {
        Some(v) => v,
        None => model.baseline_y().quantile(0.5)?,
    };
    emit(&json(&mode_find(&model, (x0, y0))?)?, args.output.as_deref())
}

fn run(cli: &Cli) -> CliResult<()> {
    let nodes = cli.quad_nodes;
    match &cli.command {
        Command::Eval(a) => run_eval(a),
        Command::Sample(a) => run_sample(a),
        Command::Fit(a) => run_fit(a, nodes),
        Command::Verify(a) => run_verify(a),
        Command::Lorenz(a) => run_lorenz(a),
        Command::Orderstats(a) => run_orderstats(a),
        Command::BivEval(a) => run_biv_eval(a, nodes),
        Command::BivSample(a) => run_biv_sample(a, nodes),
        Command::BivMode(a) => run_biv_mode(a, nodes),
    }
}

fn report_error(kind: &str, message: &str) {
    let line = serde_json::json!({ "error": kind, "message": message.replace('\n', " ").trim() });
    eprintln!("{line}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                _ => {
                    report_error("usage", &e.to_string());
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(e.kind(), &e.to_string());
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
