//! Subcommand front-end for the review-sentinel engine.
//!
//! [`run`] parses arguments, resolves configuration (defaults ← config file
//! ← flags) and dispatches to the pipeline stages. Exit codes: 0 success,
//! 1 runtime or data error, 2 usage error.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use review_sentinel_core::config::config_path;
use review_sentinel_core::ingest::filter_products;
use review_sentinel_core::model_math::{
    attention, mlm_loss, multi_head, nsp_loss, softmax, total_loss, HeadProjection, LossWeights,
    MaskedBatch, REFERENCE_D_MODEL, REFERENCE_LAYERS,
};
use review_sentinel_core::pipeline::{
    self, aggregate, evaluate, focal_asin, ingest, pca_regress, regress, score, tsa,
    write_aggregate, write_artifact, write_evaluation, write_rows, write_tsa, PipelineError,
};
use review_sentinel_core::{synth, ConfigError, EnrichedReview, Matrix, PipelineConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "review-sentinel",
    version,
    about = "Sentiment scoring, evaluation and statistical analysis of product reviews"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
struct Common {
    /// Config file of `key = value` lines (default: $REVIEW_SENTINEL_CONFIG)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override any config key; repeatable
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Abort on the first malformed input line instead of skipping it
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Join reviews with metadata and engineer features
    Ingest(IngestArgs),
    /// Attach sentiment scores to ingested rows
    Score(ScoreArgs),
    /// Threshold sweep, classification report, confusion matrix and ROC
    Evaluate(EvaluateArgs),
    /// Monthly panel and sentiment time-series chart for one product
    Aggregate(ProductArgs),
    /// OLS of monthly purchases on monthly mean sentiment
    Regress(ProductArgs),
    /// Principal-component regression of monthly purchases
    PcaRegress(PcaArgs),
    /// ACF/PACF and ARIMA fit of one product's sentiment series
    Tsa(TsaArgs),
    /// Toy-scale attention and pre-training loss computations
    ModelMath {
        #[command(subcommand)]
        action: ModelMathAction,
    },
    /// Run every stage and write all artifacts
    Pipeline(PipelineArgs),
    /// Write the seeded synthetic corpus
    Synth(SynthArgs),
}

#[derive(Debug, Subcommand)]
enum ModelMathAction {
    /// Print worked examples
    Demo,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long, value_name = "PATH")]
    reviews: Option<PathBuf>,
    #[arg(long = "meta", alias = "metadata", value_name = "PATH")]
    meta: Option<PathBuf>,
    /// Keep only products with at least this many reviews
    #[arg(long)]
    min_reviews: Option<usize>,
    /// With --min-reviews: count and keep priced rows only (true/false)
    #[arg(long)]
    require_price: Option<bool>,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Ingested rows (JSON Lines)
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// lexicon or imported
    #[arg(long)]
    scorer: Option<String>,
    /// Precomputed scores for --scorer imported
    #[arg(long, value_name = "PATH")]
    scores: Option<PathBuf>,
    #[arg(long)]
    score_field: Option<String>,
    /// Word-weight file replacing the built-in lexicon
    #[arg(long, value_name = "PATH")]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    max_length: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Scored rows (JSON Lines)
    #[arg(long, value_name = "PATH")]
    scored: PathBuf,
    #[arg(long, value_name = "DIR", default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    threshold_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    threshold_stop: Option<f64>,
    #[arg(long)]
    threshold_step: Option<f64>,
    /// Fraction held out for the report (threshold picked on the rest)
    #[arg(long)]
    eval_holdout: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ProductArgs {
    /// Scored rows (JSON Lines), typically already filtered
    #[arg(long, value_name = "PATH")]
    scored: PathBuf,
    /// Product to analyse (default: the most-reviewed product)
    #[arg(long)]
    asin: Option<String>,
    /// verified_sum or review_count
    #[arg(long)]
    purchase_proxy: Option<String>,
    #[arg(long)]
    ma_window: Option<usize>,
    #[arg(long, value_name = "DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct PcaArgs {
    #[arg(long, value_name = "PATH")]
    scored: PathBuf,
    #[arg(long)]
    asin: Option<String>,
    /// verified_sum or review_count
    #[arg(long)]
    purchase_proxy: Option<String>,
    #[arg(long)]
    variance_target: Option<f64>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct TsaArgs {
    #[arg(long, value_name = "PATH")]
    scored: PathBuf,
    #[arg(long)]
    asin: Option<String>,
    /// ARIMA order as p,d,q
    #[arg(long)]
    order: Option<String>,
    #[arg(long)]
    max_lag: Option<usize>,
    #[arg(long, value_name = "DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long, value_name = "PATH")]
    reviews: Option<PathBuf>,
    #[arg(long = "meta", alias = "metadata", value_name = "PATH")]
    meta: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    min_reviews: Option<usize>,
    #[arg(long)]
    scorer: Option<String>,
    #[arg(long, value_name = "PATH")]
    scores: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    asin: Option<String>,
    #[arg(long)]
    variance_target: Option<f64>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = synth::DEFAULT_SEED)]
    seed: u64,
}

/// Collects `(key, value)` overrides from typed flags.
#[derive(Default)]
struct Overrides(Vec<(String, String)>);

impl Overrides {
    fn opt<T: ToString>(&mut self, key: &str, v: &Option<T>) -> &mut Self {
        if let Some(v) = v {
            self.0.push((key.to_owned(), v.to_string()));
        }
        self
    }

    fn path(&mut self, key: &str, v: &Option<PathBuf>) -> &mut Self {
        if let Some(v) = v {
            self.0.push((key.to_owned(), v.display().to_string()));
        }
        self
    }
}

/// A usage problem detected after argument parsing.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn load_config(common: &Common, flags: Overrides) -> Result<PipelineConfig> {
    let mut overrides = Vec::new();
    if common.strict {
        overrides.push(("strictness".to_owned(), "strict".to_owned()));
    }
    overrides.extend(flags.0);
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        overrides.push((k.to_owned(), v.to_owned()));
    }
    let path = config_path(common.config.as_deref());
    Ok(PipelineConfig::load(path.as_deref(), &overrides)?)
}

fn require<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Usage(format!("missing --{flag} (or set it in the config file)")).into())
}

fn read_scored(
    path: &Path,
    cfg: &PipelineConfig,
    out: &mut dyn Write,
) -> Result<Vec<EnrichedReview>> {
    let (rows, diags) = pipeline::read_rows(path, cfg.strictness)?;
    for d in diags {
        writeln!(out, "warning: {}: {d}", path.display())?;
    }
    Ok(rows)
}

fn pick_asin(rows: &[EnrichedReview], asin: Option<&str>) -> Result<String> {
    match asin {
        Some(a) => Ok(a.to_owned()),
        None => focal_asin(rows).context("input has no rows"),
    }
}

fn cmd_ingest(a: IngestArgs, out: &mut dyn Write) -> Result<()> {
    let mut o = Overrides::default();
    o.path("reviews", &a.reviews)
        .path("metadata", &a.meta)
        .opt("min_reviews", &a.min_reviews)
        .opt("require_price", &a.require_price);
    let cfg = load_config(&a.common, o)?;
    let reviews = require(&cfg.reviews, "reviews")?;
    let metadata = require(&cfg.metadata, "meta")?;
    let outcome = ingest(reviews, metadata, cfg.strictness)?;
    write!(out, "{}", outcome.summary())?;
    let rows = match a.min_reviews {
        Some(_) => {
            let kept = filter_products(outcome.rows, cfg.min_reviews, cfg.require_price);
            writeln!(
                out,
                "filter: {} rows from products with >= {} reviews",
                kept.len(),
                cfg.min_reviews
            )?;
            kept
        }
        None => outcome.rows,
    };
    write_rows(&a.out, &rows)?;
    writeln!(out, "wrote {}", a.out.display())?;
    Ok(())
}

fn cmd_score(a: ScoreArgs, out: &mut dyn Write) -> Result<()> {
    let mut o = Overrides::default();
    o.opt("scorer", &a.scorer)
        .path("scores", &a.scores)
        .opt("score_field", &a.score_field)
        .path("lexicon", &a.lexicon)
        .opt("max_length", &a.max_length)
        .opt("batch_size", &a.batch_size)
        .opt("workers", &a.workers);
    let cfg = load_config(&a.common, o)?;
    let rows = read_scored(&a.input, &cfg, out)?;
    let scored = score(rows, &cfg)?;
    if scored.unmatched > 0 {
        writeln!(
            out,
            "warning: {} rows without an imported score",
            scored.unmatched
        )?;
    }
    write_rows(&a.out, &scored.rows)?;
    writeln!(
        out,
        "scored {} rows; wrote {}",
        scored.rows.len(),
        a.out.display()
    )?;
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let mut o = Overrides::default();
    o.opt("threshold_start", &a.threshold_start)
        .opt("threshold_stop", &a.threshold_stop)
        .opt("threshold_step", &a.threshold_step)
        .opt("eval_holdout", &a.eval_holdout)
        .opt("seed", &a.seed);
    let cfg = load_config(&a.common, o)?;
    let rows = read_scored(&a.scored, &cfg, out)?;
    let ev = evaluate(&rows, cfg.threshold_grid, cfg.eval_holdout, cfg.seed)?;
    write!(out, "{}", ev.summary())?;
    for f in write_evaluation(&ev, &a.out_dir)? {
        writeln!(out, "wrote {}", f.display())?;
    }
    Ok(())
}

fn product_config(a: &ProductArgs, proxy_key: &str) -> Result<PipelineConfig> {
    let mut o = Overrides::default();
    o.opt("asin", &a.asin)
        .opt(proxy_key, &a.purchase_proxy)
        .opt("ma_window", &a.ma_window);
    load_config(&a.common, o)
}

fn cmd_aggregate(a: ProductArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = product_config(&a, "purchase_proxy")?;
    let rows = read_scored(&a.scored, &cfg, out)?;
    let asin = pick_asin(&rows, cfg.asin.as_deref())?;
    let agg = aggregate(&rows, &asin, cfg.purchase_proxy, cfg.ma_window)?;
    write!(out, "{}", agg.summary())?;
    for f in write_aggregate(&agg, &a.out_dir)? {
        writeln!(out, "wrote {}", f.display())?;
    }
    Ok(())
}

fn cmd_regress(a: ProductArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = product_config(&a, "purchase_proxy")?;
    let rows = read_scored(&a.scored, &cfg, out)?;
    let asin = pick_asin(&rows, cfg.asin.as_deref())?;
    let agg = aggregate(&rows, &asin, cfg.purchase_proxy, cfg.ma_window)?;
    let text = regress(&agg.panel)?.summary();
    write!(out, "{text}")?;
    let f = write_artifact(&a.out_dir, "ols_summary.txt", &text)?;
    writeln!(out, "wrote {}", f.display())?;
    Ok(())
}

fn cmd_pca_regress(a: PcaArgs, out: &mut dyn Write) -> Result<()> {
    let mut o = Overrides::default();
    o.opt("asin", &a.asin)
        .opt("pca_purchase_proxy", &a.purchase_proxy)
        .opt("variance_target", &a.variance_target)
        .opt("test_fraction", &a.test_fraction)
        .opt("seed", &a.seed);
    let cfg = load_config(&a.common, o)?;
    let rows = read_scored(&a.scored, &cfg, out)?;
    let asin = pick_asin(&rows, cfg.asin.as_deref())?;
    let pcr = pca_regress(&rows, &asin, cfg.pca_purchase_proxy, cfg.pcr_options())?;
    let text = pcr.summary();
    write!(out, "{text}")?;
    let panel_csv = review_sentinel_core::report::emit_csv(&pipeline::panel_table(&pcr.panel))?;
    for f in [
        write_artifact(&a.out_dir, "pca_panel.csv", &panel_csv)?,
        write_artifact(&a.out_dir, "pca_regression.txt", &text)?,
    ] {
        writeln!(out, "wrote {}", f.display())?;
    }
    Ok(())
}

fn cmd_tsa(a: TsaArgs, out: &mut dyn Write) -> Result<()> {
    let mut o = Overrides::default();
    o.opt("asin", &a.asin)
        .opt("arima_order", &a.order)
        .opt("max_lag", &a.max_lag);
    let cfg = load_config(&a.common, o)?;
    let rows = read_scored(&a.scored, &cfg, out)?;
    let asin = pick_asin(&rows, cfg.asin.as_deref())?;
    let ts = tsa(&rows, &asin, cfg.arima_order, cfg.max_lag)?;
    write!(out, "{}", ts.summary())?;
    for f in write_tsa(&ts, &a.out_dir)? {
        writeln!(out, "wrote {}", f.display())?;
    }
    Ok(())
}

fn cmd_pipeline(a: PipelineArgs, out: &mut dyn Write) -> Result<()> {
    let mut o = Overrides::default();
    o.path("reviews", &a.reviews)
        .path("metadata", &a.meta)
        .path("output_dir", &a.out_dir)
        .opt("min_reviews", &a.min_reviews)
        .opt("scorer", &a.scorer)
        .path("scores", &a.scores)
        .opt("workers", &a.workers)
        .opt("asin", &a.asin)
        .opt("variance_target", &a.variance_target)
        .opt("test_fraction", &a.test_fraction)
        .opt("seed", &a.seed);
    let cfg = load_config(&a.common, o)?;
    require(&cfg.reviews, "reviews")?;
    require(&cfg.metadata, "meta")?;
    let run = pipeline::run_pipeline(&cfg)?;
    write!(out, "{}", run.summary)?;
    writeln!(
        out,
        "\nwrote {} files to {}",
        run.files.len(),
        cfg.output_dir.display()
    )?;
    Ok(())
}

fn cmd_synth(a: SynthArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = synth::generate(a.seed);
    let r = write_artifact(&a.out_dir, "reviews.jsonl", &corpus.reviews)?;
    let m = write_artifact(&a.out_dir, "meta.jsonl", &corpus.metadata)?;
    writeln!(out, "wrote {}\nwrote {}", r.display(), m.display())?;
    Ok(())
}

fn show(m: &Matrix) -> String {
    m.to_rows()
        .iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.6}")).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_model_math(out: &mut dyn Write) -> Result<()> {
    let m = |rows: &[&[f64]]| -> Result<Matrix> {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        Ok(Matrix::from_rows(&rows)?)
    };
    writeln!(
        out,
        "reference architecture: {REFERENCE_LAYERS} layers, d_model = {REFERENCE_D_MODEL} (toy sizes below)\n"
    )?;
    writeln!(out, "softmax([0, 0])         = {:?}", softmax(&[0.0, 0.0]))?;
    writeln!(
        out,
        "softmax([ln 2, 0])      = {:?}",
        softmax(&[2f64.ln(), 0.0])
    )?;
    writeln!(
        out,
        "softmax([1000, 1000])   = {:?}",
        softmax(&[1000.0, 1000.0])
    )?;

    let q = m(&[&[1.0, 0.0]])?;
    let k = m(&[&[1.0, 0.0], &[0.0, 1.0]])?;
    let v = m(&[&[1.0], &[0.0]])?;
    let a = attention(&q, &k, &v)?;
    let w = (0.5f64.sqrt()).exp();
    writeln!(
        out,
        "attention(Q=[[1,0]], K=I, V=[[1],[0]]) = {}  (e^(1/sqrt 2)/(e^(1/sqrt 2)+1) = {:.6})",
        show(&a),
        w / (w + 1.0)
    )?;
    let same = attention(
        &m(&[&[1.0]])?,
        &m(&[&[1.0], &[1.0]])?,
        &m(&[&[1.0], &[3.0]])?,
    )?;
    writeln!(
        out,
        "attention with two identical keys, values 1 and 3 = {}",
        show(&same)
    )?;

    let x = m(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]])?;
    let id = Matrix::identity(2);
    let heads = [
        HeadProjection {
            w_q: id.clone(),
            w_k: id.clone(),
            w_v: id.clone(),
        },
        HeadProjection {
            w_q: m(&[&[0.5, 0.0], &[0.0, 2.0]])?,
            w_k: id.clone(),
            w_v: m(&[&[0.0, 1.0], &[1.0, 0.0]])?,
        },
    ];
    let w_o = m(&[&[1.0, 0.0], &[0.0, 1.0], &[0.5, 0.0], &[0.0, 0.5]])?;
    writeln!(
        out,
        "multi_head(X, 2 heads, W_O 4x2) = {}",
        show(&multi_head(&x, &heads, &w_o)?)
    )?;

    let batch = MaskedBatch::new(vec![vec![0.25; 4], vec![0.1, 0.7, 0.2]], 0.25, 1)?;
    let l_mlm = mlm_loss(&batch, &[0, 1])?;
    let l_nsp = nsp_loss(batch.nsp_prob_isnext, batch.nsp_label)?;
    writeln!(
        out,
        "\nMLM loss (uniform over 4, then p = 0.7) = {l_mlm:.6}  (ln 4 - ln 0.7 = {:.6})",
        4f64.ln() - 0.7f64.ln()
    )?;
    writeln!(
        out,
        "NSP loss (p = 0.25, y = 1)              = {l_nsp:.6}  (ln 4 = {:.6})",
        4f64.ln()
    )?;
    writeln!(
        out,
        "NSP loss (p = 0.5, y = 0)               = {:.6}",
        nsp_loss(0.5, 0)?
    )?;
    writeln!(
        out,
        "total loss, weights (1, 1)              = {:.6}",
        total_loss(l_mlm, l_nsp, LossWeights::default())
    )?;
    writeln!(
        out,
        "total loss, weights (0.5, 0.5)          = {:.6}",
        total_loss(l_mlm, l_nsp, LossWeights { mlm: 0.5, nsp: 0.5 })
    )?;
    Ok(())
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => cmd_ingest(a, out),
        Command::Score(a) => cmd_score(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Aggregate(a) => cmd_aggregate(a, out),
        Command::Regress(a) => cmd_regress(a, out),
        Command::PcaRegress(a) => cmd_pca_regress(a, out),
        Command::Tsa(a) => cmd_tsa(a, out),
        Command::ModelMath {
            action: ModelMathAction::Demo,
        } => cmd_model_math(out),
        Command::Pipeline(a) => cmd_pipeline(a, out),
        Command::Synth(a) => cmd_synth(a, out),
    }
}

fn is_usage(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.is::<Usage>()
            || c.downcast_ref::<ConfigError>()
                .is_some_and(ConfigError::is_usage)
            || matches!(
                c.downcast_ref::<PipelineError>(),
                Some(PipelineError::Config(ce)) if ce.is_usage()
            )
    })
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            if is_usage(&e) {
                let _ = writeln!(err, "run with --help for usage");
                EXIT_USAGE
            } else {
                EXIT_RUNTIME
            }
        }
    }
}
