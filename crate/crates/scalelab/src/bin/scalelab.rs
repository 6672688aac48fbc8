//! Command-line front end: every pipeline stage as a subcommand, emitting
//! versioned JSON documents and plot-ready tables.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/fit error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use scalelab::error::Error;
use scalelab::fitloss::{self, FitConfig};
use scalelab::frontier::{self, BudgetRelation, TokenGrid, DEFAULT_VISION_OFFSET};
use scalelab::hull::{self, HullConfig};
use scalelab::ingest::{self, FitDocument, FitKind, RunFormat};
use scalelab::types::{Arch, EvalSet, RunRecord};
use scalelab::{metrics, moespec, resample, sparse};

#[derive(Parser, Debug)]
#[command(
    name = "scalelab",
    about = "Scaling-law estimation for multimodal pretraining runs",
    version,
    args_override_self = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Fit the parametric loss surface to run logs.
    Fit(FitArgs),
    /// Derive compute-optimal allocation laws from a saved fit.
    Frontier(FrontierArgs),
    /// Fit the loss-vs-compute law on the convex-hull frontier of the runs.
    Hull(HullArgs),
    /// Predict the loss of a (params, tokens) configuration from a saved fit.
    Predict(PredictArgs),
    /// Bootstrap the fit coefficients and derived exponents.
    Bootstrap(BootstrapArgs),
    /// Fit the sparsity-aware loss surface to mixture-of-experts runs.
    SparseFit(SparseFitArgs),
    /// Per-layer expert-specialization scores from a routing assignment log.
    SpecScore(SpecScoreArgs),
    /// Training-FLOPs accounting for one configuration.
    Flops(FlopsArgs),
    /// Prediction-error metrics of a saved fit on a run log.
    Eval(EvalArgs),
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Optional JSON config mirroring this subcommand's flags; explicit flags win.
    #[arg(long, global = false)]
    config: Option<PathBuf>,
    /// Cap worker threads (falls back to NMM_SCALELAB_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Round numeric stdout to this many significant digits (full precision otherwise).
    #[arg(long)]
    digits: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// Run log to read (CSV or JSON).
    #[arg(long)]
    input: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatOpt>,
    /// Keep only runs with this evaluation set.
    #[arg(long, value_enum)]
    eval_set: Option<EvalSetOpt>,
    /// Keep only runs with this architecture.
    #[arg(long, value_enum)]
    arch: Option<ArchOpt>,
    /// Keep only runs with this training mixture label.
    #[arg(long)]
    mixture: Option<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatOpt {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum EvalSetOpt {
    Caption,
    Interleaved,
    Text,
    Avg,
}

impl From<EvalSetOpt> for EvalSet {
    fn from(v: EvalSetOpt) -> EvalSet {
        match v {
            EvalSetOpt::Caption => EvalSet::Caption,
            EvalSetOpt::Interleaved => EvalSet::Interleaved,
            EvalSetOpt::Text => EvalSet::Text,
            EvalSetOpt::Avg => EvalSet::Avg,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ArchOpt {
    Early,
    Late,
    MoeAgnostic,
    MoeAware,
    /// Either MoE routing flavor.
    Moe,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    input: InputArgs,
    /// Huber transition delta.
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    /// Output path for the fit document; `-` writes JSON to stdout.
    #[arg(long)]
    out: String,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MethodOpt {
    Regression,
    ClosedForm,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum RelationOpt {
    Early,
    Late,
}

#[derive(Args, Debug)]
struct FrontierArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Saved loss-surface fit document.
    #[arg(long)]
    fit: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodOpt::Regression)]
    method: MethodOpt,
    #[arg(long, value_enum, default_value_t = RelationOpt::Early)]
    relation: RelationOpt,
    /// Token grid lower bound for the regression method.
    #[arg(long, default_value_t = 1e10)]
    d_min: f64,
    /// Token grid upper bound.
    #[arg(long, default_value_t = 6e11)]
    d_max: f64,
    /// Token grid density.
    #[arg(long, default_value_t = 200)]
    d_points: usize,
    /// Run log whose budgets supply the regression's FLOPs values.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Explicit comma-separated FLOPs values for the regression.
    #[arg(long, value_delimiter = ',')]
    flops: Option<Vec<f64>>,
    /// Vision-size slope for the late relation; fitted from --input when omitted.
    #[arg(long)]
    vision_p: Option<f64>,
    /// Vision-size intercept for the late relation.
    #[arg(long)]
    vision_q: Option<f64>,
    /// Coefficient on N_v in the late budget relation.
    #[arg(long, default_value_t = DEFAULT_VISION_OFFSET)]
    vision_offset: f64,
    #[arg(long)]
    out: String,
}

#[derive(Args, Debug)]
struct HullArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    input: InputArgs,
    /// Budgets at or below this threshold are excluded from the law fit.
    #[arg(long, default_value_t = 3e19)]
    min_flops: f64,
    /// Envelope / resampling density in log C.
    #[arg(long, default_value_t = 512)]
    envelope_points: usize,
    #[arg(long)]
    out: String,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    fit: PathBuf,
    /// Model parameters (active).
    #[arg(long)]
    n: f64,
    /// Training tokens.
    #[arg(long)]
    d: f64,
    /// Sparsity S for sparse fits; derived fits ignore it.
    #[arg(long)]
    s: Option<f64>,
}

#[derive(Args, Debug)]
struct BootstrapArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    #[arg(long)]
    out: String,
}

#[derive(Args, Debug)]
struct SparseFitArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    /// Pin the sparsity exponent lambda.
    #[arg(long)]
    fix_lambda: Option<f64>,
    /// Pin the interaction sparsity exponent delta.
    #[arg(long)]
    fix_delta: Option<f64>,
    /// Pin the interaction size exponent gamma.
    #[arg(long)]
    fix_gamma: Option<f64>,
    /// Optimize a single shared sparsity exponent (delta = lambda).
    #[arg(long, default_value_t = false)]
    tie_delta: bool,
    #[arg(long)]
    out: String,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MetricOpt {
    Entropy,
    Uniform,
}

#[derive(Args, Debug)]
struct SpecScoreArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Assignment CSV: layer,expert,text_tokens,image_tokens,source.
    #[arg(long)]
    assignments: PathBuf,
    #[arg(long, value_enum, default_value_t = MetricOpt::Entropy)]
    metric: MetricOpt,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FlopsArchOpt {
    Early,
    Late,
    Moe,
}

#[derive(Args, Debug)]
struct FlopsArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum)]
    arch: FlopsArchOpt,
    /// Parameters: total for early, decoder-only for late, active for moe.
    #[arg(long)]
    n: f64,
    #[arg(long)]
    d: f64,
    #[arg(long)]
    n_vision: Option<f64>,
    #[arg(long)]
    vision_frac: Option<f64>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    fit: PathBuf,
    #[command(flatten)]
    input: InputArgs,
}

enum CliError {
    Usage(String),
    Data(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Prefixes data errors with the file they came from.
fn in_file(path: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match merge_config(&argv) {
        Ok(v) => v,
        Err(e) => report(e),
    };
    let matches = match Cli::command().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            std::process::exit(0);
        }
        Err(e) => {
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    if let Err(e) = run(cli) {
        report(e);
    }
}

fn report(e: CliError) -> ! {
    match e {
        CliError::Usage(msg) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        CliError::Data(msg) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    }
}

/// Expands `--config plan.json` (a flat JSON object of long flag names) by
/// inserting its entries right after the subcommand. Explicit flags come
/// later on the command line, so they win on conflict.
fn merge_config(argv: &[String]) -> Result<Vec<String>, CliError> {
    let mut config_path: Option<String> = None;
    for (i, arg) in argv.iter().enumerate() {
        if arg == "--config" {
            config_path = argv.get(i + 1).cloned();
        } else if let Some(v) = arg.strip_prefix("--config=") {
            config_path = Some(v.to_string());
        }
    }
    let Some(path) = config_path else {
        return Ok(argv.to_vec());
    };
    if argv.len() < 2 || argv[1].starts_with('-') {
        return Ok(argv.to_vec());
    }
    let raw = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Data(format!("{path}: {e}")))?;
    let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&raw)
        .map_err(|e| usage(format!("--config {path}: {e}")))?;
    let mut merged: Vec<String> = argv[..2].to_vec();
    for (key, value) in &map {
        if key == "config" {
            continue;
        }
        match value {
            serde_json::Value::Bool(true) => merged.push(format!("--{key}")),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::String(v) => {
                merged.push(format!("--{key}"));
                merged.push(v.clone());
            }
            other => {
                merged.push(format!("--{key}"));
                merged.push(other.to_string());
            }
        }
    }
    merged.extend(argv[2..].iter().cloned());
    Ok(merged)
}

fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    let n = threads.or_else(|| {
        std::env::var("NMM_SCALELAB_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        if n == 0 {
            return Err(usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn fmt_num(x: f64, digits: Option<usize>) -> String {
    match digits {
        Some(d) => format!("{:.*e}", d.saturating_sub(1), x),
        None => format!("{x}"),
    }
}

fn load_filtered(args: &InputArgs) -> Result<Vec<RunRecord>, CliError> {
    let format = match args.format {
        Some(FormatOpt::Csv) => RunFormat::Csv,
        Some(FormatOpt::Json) => RunFormat::Json,
        None => RunFormat::from_path(&args.input),
    };
    let records = ingest::load_runs(&args.input, format).map_err(in_file(&args.input))?;
    let keep = |r: &RunRecord| -> bool {
        if let Some(es) = args.eval_set {
            if r.eval_set() != EvalSet::from(es) {
                return false;
            }
        }
        if let Some(a) = args.arch {
            let ok = match a {
                ArchOpt::Early => r.arch() == Arch::Early,
                ArchOpt::Late => r.arch() == Arch::Late,
                ArchOpt::MoeAgnostic => r.arch() == Arch::MoeAgnostic,
                ArchOpt::MoeAware => r.arch() == Arch::MoeAware,
                ArchOpt::Moe => matches!(r.arch(), Arch::MoeAgnostic | Arch::MoeAware),
            };
            if !ok {
                return false;
            }
        }
        if let Some(m) = &args.mixture {
            if r.mixture() != m {
                return false;
            }
        }
        true
    };
    let filtered: Vec<RunRecord> = records.into_iter().filter(keep).collect();
    if filtered.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no runs left after filtering",
            args.input.display()
        )));
    }
    Ok(filtered)
}

fn write_doc(doc: &FitDocument, out: &str) -> Result<(), CliError> {
    if out == "-" {
        let stdout = std::io::stdout();
        ingest::write_fit(doc, stdout.lock())?;
    } else {
        ingest::save_fit(doc, Path::new(out))?;
    }
    Ok(())
}

/// Human summary goes to stdout unless the JSON document already owns it.
fn summary_sink(out: &str) -> Box<dyn Write> {
    if out == "-" {
        Box::new(std::io::stderr())
    } else {
        Box::new(std::io::stdout())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Fit(args) => cmd_fit(args),
        Cmd::Frontier(args) => cmd_frontier(args),
        Cmd::Hull(args) => cmd_hull(args),
        Cmd::Predict(args) => cmd_predict(args),
        Cmd::Bootstrap(args) => cmd_bootstrap(args),
        Cmd::SparseFit(args) => cmd_sparse_fit(args),
        Cmd::SpecScore(args) => cmd_spec_score(args),
        Cmd::Flops(args) => cmd_flops(args),
        Cmd::Eval(args) => cmd_eval(args),
    }
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    init_threads(args.common.threads)?;
    let records = load_filtered(&args.input)?;
    let points = fitloss::points_from_records(&records);
    let config = FitConfig {
        huber_delta: args.delta,
        ..FitConfig::default()
    };
    let fit = fitloss::fit(&points, &config)?;
    let dg = args.common.digits;
    let mut sink = summary_sink(&args.out);
    let _ = writeln!(
        sink,
        "fit: E={} A={} B={} alpha={} beta={} objective={} init={} converged={}",
        fmt_num(fit.e_irreducible(), dg),
        fmt_num(fit.a_coef(), dg),
        fmt_num(fit.b_coef(), dg),
        fmt_num(fit.alpha(), dg),
        fmt_num(fit.beta(), dg),
        fmt_num(fit.objective(), dg),
        fit.winning_init_index(),
        fit.converged()
    );
    write_doc(&FitDocument::loss_surface(fit), &args.out)
}

fn cmd_frontier(args: FrontierArgs) -> Result<(), CliError> {
    init_threads(args.common.threads)?;
    let doc = ingest::load_fit(&args.fit).map_err(in_file(&args.fit))?;
    let FitKind::LossSurface(fit) = doc.kind else {
        return Err(CliError::Data(
            "frontier needs a loss-surface fit document".to_string(),
        ));
    };
    let records = match &args.input {
        Some(path) => Some(
            ingest::load_runs(path, RunFormat::from_path(path)).map_err(in_file(path))?,
        ),
        None => None,
    };
    let laws = match args.method {
        MethodOpt::ClosedForm => frontier::closed_form_frontier(&fit)?,
        MethodOpt::Regression => {
            let relation = match args.relation {
                RelationOpt::Early => BudgetRelation::Early,
                RelationOpt::Late => {
                    let (p, q) = match (args.vision_p, args.vision_q) {
                        (Some(p), Some(q)) => (p, q),
                        _ => {
                            let recs = records.as_ref().ok_or_else(|| {
                                usage("late relation needs --vision-p/--vision-q or --input")
                            })?;
                            frontier::fit_vision_linear(recs)?
                        }
                    };
                    BudgetRelation::Late {
                        p,
                        q,
                        offset: args.vision_offset,
                    }
                }
            };
            let flops_values: Vec<f64> = if let Some(fs) = &args.flops {
                fs.clone()
            } else if let Some(recs) = &records {
                recs.iter().map(|r| r.flops()).collect()
            } else {
                // No runs given: a decade ladder over the charted budget span.
                scalelab::numeric::log_space(1e19, 1e22, 25)
            };
            let grid = TokenGrid {
                min: args.d_min,
                max: args.d_max,
                points: args.d_points,
            };
            frontier::regress_frontier(&fit, &relation, &flops_values, &grid)?
        }
    };
    let dg = args.common.digits;
    let mut sink = summary_sink(&args.out);
    let _ = writeln!(
        sink,
        "frontier: a={} b={} d={} ratio_exp={}",
        fmt_num(laws.n_of_c().p(), dg),
        fmt_num(laws.d_of_c().p(), dg),
        fmt_num(laws.d_of_n().p(), dg),
        fmt_num(laws.ratio_of_c().p(), dg)
    );
    write_doc(&FitDocument::frontier(laws), &args.out)
}

fn cmd_hull(args: HullArgs) -> Result<(), CliError> {
    init_threads(args.common.threads)?;
    let records = load_filtered(&args.input)?;
    let series = hull::series_from_records(&records);
    let cfg = HullConfig {
        envelope_points: args.envelope_points,
    };
    let vertices = hull::frontier_points(&series, &cfg)?;
    let law = hull::fit_compute_law(&vertices, args.min_flops, &cfg)?;
    let dg = args.common.digits;
    let mut sink = summary_sink(&args.out);
    let _ = writeln!(
        sink,
        "hull: k={} c={} r2={} vertices={}",
        fmt_num(law.k(), dg),
        fmt_num(law.p(), dg),
        fmt_num(law.r_squared(), dg),
        vertices.len()
    );
    write_doc(&FitDocument::power_law(law), &args.out)
}

fn cmd_predict(args: PredictArgs) -> Result<(), CliError> {
    if !(args.n >= 1.0 && args.d >= 1.0) {
        return Err(usage("--n and --d must be >= 1"));
    }
    let doc = ingest::load_fit(&args.fit).map_err(in_file(&args.fit))?;
    let loss = match doc.kind {
        FitKind::LossSurface(fit) => fitloss::predict_loss(&fit, args.n, args.d),
        FitKind::SparseLossSurface(fit) => {
            let s = args.s.unwrap_or(0.0);
            if !(0.0..1.0).contains(&s) {
                return Err(usage("--s must lie in [0, 1)"));
            }
            sparse::predict_sparse(&fit, args.n, args.d, s)
        }
        _ => {
            return Err(CliError::Data(
                "predict needs a loss-surface or sparse fit document".to_string(),
            ))
        }
    };
    println!("{}", fmt_num(loss, args.common.digits));
    Ok(())
}

fn cmd_bootstrap(args: BootstrapArgs) -> Result<(), CliError> {
    init_threads(args.common.threads)?;
    let records = load_filtered(&args.input)?;
    let points = fitloss::points_from_records(&records);
    let config = FitConfig {
        huber_delta: args.delta,
        ..FitConfig::default()
    };
    let summary = resample::bootstrap(&points, &config, args.iters, args.seed)?;
    let dg = args.common.digits;
    let mut sink = summary_sink(&args.out);
    let _ = writeln!(sink, "coefficient,mean,std");
    for (name, st) in [
        ("E", summary.e_irreducible),
        ("alpha", summary.alpha),
        ("beta", summary.beta),
        ("a", summary.a),
        ("b", summary.b),
        ("d", summary.d),
    ] {
        let _ = writeln!(
            sink,
            "{name},{},{}",
            fmt_num(st.mean, dg),
            fmt_num(st.std, dg)
        );
    }
    let body = serde_json::json!({
        "schema": "scalelab/bootstrap-v1",
        "summary": summary,
    });
    let rendered = serde_json::to_string_pretty(&body)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if args.out == "-" {
        println!("{rendered}");
    } else {
        std::fs::write(&args.out, rendered + "\n").map_err(Error::from)?;
    }
    Ok(())
}

fn cmd_sparse_fit(args: SparseFitArgs) -> Result<(), CliError> {
    init_threads(args.common.threads)?;
    let records = load_filtered(&args.input)?;
    let points = sparse::sparse_points_from_records(&records);
    let config = FitConfig {
        huber_delta: args.delta,
        ..FitConfig::default()
    };
    let opts = sparse::SparseFitOptions {
        lambda: match args.fix_lambda {
            Some(v) => sparse::ExponentSpec::Fixed(v),
            None => sparse::ExponentSpec::Free,
        },
        delta: if args.tie_delta {
            sparse::DeltaSpec::TiedToLambda
        } else {
            match args.fix_delta {
                Some(v) => sparse::DeltaSpec::Fixed(v),
                None => sparse::DeltaSpec::Free,
            }
        },
        gamma: match args.fix_gamma {
            Some(v) => sparse::ExponentSpec::Fixed(v),
            None => sparse::ExponentSpec::Free,
        },
        ..sparse::SparseFitOptions::default()
    };
    let fit = sparse::fit_sparse(&points, &config, &opts)?;
    let dg = args.common.digits;
    let mut sink = summary_sink(&args.out);
    let _ = writeln!(
        sink,
        "sparse fit: E={} A={} B={} alpha={} beta={} lambda={} delta={} gamma={} C={} d={}",
        fmt_num(fit.e_irr(), dg),
        fmt_num(fit.a_coef(), dg),
        fmt_num(fit.b_coef(), dg),
        fmt_num(fit.alpha(), dg),
        fmt_num(fit.beta(), dg),
        fmt_num(fit.lam(), dg),
        fmt_num(fit.delta_s(), dg),
        fmt_num(fit.gamma(), dg),
        fmt_num(fit.c_coef(), dg),
        fmt_num(fit.d_coef(), dg)
    );
    write_doc(&FitDocument::sparse(fit), &args.out)
}

fn cmd_spec_score(args: SpecScoreArgs) -> Result<(), CliError> {
    let tables =
        ingest::load_assignments(&args.assignments).map_err(in_file(&args.assignments))?;
    let dg = args.common.digits;
    println!("source,layer,score");
    for table in &tables {
        for layer in 0..table.num_layers() {
            let score = match args.metric {
                MetricOpt::Entropy => moespec::entropy_specialization(table, layer)?,
                MetricOpt::Uniform => moespec::uniform_deviation_specialization(table, layer)?,
            };
            println!("{},{layer},{}", table.source(), fmt_num(score, dg));
        }
    }
    Ok(())
}

fn cmd_flops(args: FlopsArgs) -> Result<(), CliError> {
    if !(args.n >= 1.0 && args.d >= 1.0) {
        return Err(usage("--n and --d must be >= 1"));
    }
    let c = match args.arch {
        FlopsArchOpt::Early => scalelab::flops::early_flops(args.n, args.d),
        FlopsArchOpt::Moe => scalelab::flops::moe_flops(args.n, args.d),
        FlopsArchOpt::Late => {
            let nv = args
                .n_vision
                .ok_or_else(|| usage("--arch late needs --n-vision"))?;
            let frac = args
                .vision_frac
                .unwrap_or(scalelab::types::DEFAULT_VISION_TOKEN_FRACTION);
            if !(0.0..=1.0).contains(&frac) {
                return Err(usage("--vision-frac must lie in [0, 1]"));
            }
            scalelab::flops::late_flops(nv, args.n, args.d, frac)
        }
    };
    println!("{}", fmt_num(c, args.common.digits));
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let doc = ingest::load_fit(&args.fit).map_err(in_file(&args.fit))?;
    let FitKind::LossSurface(fit) = doc.kind else {
        return Err(CliError::Data(
            "eval needs a loss-surface fit document".to_string(),
        ));
    };
    let records = load_filtered(&args.input)?;
    let points = fitloss::points_from_records(&records);
    let m = metrics::evaluate(&fit, &points)?;
    let dg = args.common.digits;
    println!("mse={}", fmt_num(m.mse, dg));
    println!("r_squared={}", fmt_num(m.r_squared, dg));
    println!("mae_percent={}", fmt_num(m.mae_percent, dg));
    Ok(())
}
