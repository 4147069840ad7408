//! End-to-end orchestration.
//!
//! Each stage is a plain function over in-memory rows plus a `write_*`
//! companion that renders its artifacts into an output directory, so the
//! CLI subcommands and the all-in-one [`run_pipeline`] share one code path.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analytics::{
    build_monthly_panel, ols_fit, pc_regression, pearson, train_test_split, AnalyticsError,
    MonthlyPanel, OlsFit, PcRegression, PcrOptions, PurchaseProxy, PCR_FEATURES,
};
use crate::config::{ConfigError, PipelineConfig};
use crate::evaluation::{
    apply_threshold, confusion, rating_to_label, report, roc, sweep_thresholds,
    ClassificationReport, ConfusionMatrix, EvalError, RocCurve, ThresholdGrid,
    ThresholdSweepResult,
};
use crate::ingest::{
    engineer_features, filter_products, merge_on_parent_asin, parse_metadata, parse_reviews,
    read_enriched, write_jsonl, Diagnostic, EnrichedReview, IngestError, Strictness,
};
use crate::linalg::Matrix;
use crate::report::{
    emit_chart, emit_confusion, emit_csv, format_real, Cell, ChartKind, ChartSpec, ReportError,
    Series, Table, XAxis,
};
use crate::scoring::{import_scores, score_corpus, LexiconScorer, ScorerKind, ScoringError};
use crate::timeseries::{
    acf, arima_fit, moving_average, pacf, ArimaFit, ArimaOrder, Pacf, SentimentSeries, TsError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Ingest { path: PathBuf, source: IngestError },
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    TimeSeries(#[from] TsError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Data(String),
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| PipelineError::Read {
            path: path.to_owned(),
            source,
        })
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::create_dir_all(dir)
        .and_then(|_| std::fs::write(&path, contents))
        .map_err(|source| PipelineError::Write {
            path: path.clone(),
            source,
        })?;
    Ok(path)
}

pub fn write_rows(path: &Path, rows: &[EnrichedReview]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| PipelineError::Write {
            path: parent.to_owned(),
            source,
        })?;
    }
    let file = File::create(path).map_err(|source| PipelineError::Write {
        path: path.to_owned(),
        source,
    })?;
    write_jsonl(BufWriter::new(file), rows).map_err(|source| PipelineError::Ingest {
        path: path.to_owned(),
        source,
    })
}

/// Reads enriched (optionally scored) rows written by an earlier stage.
pub fn read_rows(path: &Path, mode: Strictness) -> Result<(Vec<EnrichedReview>, Vec<Diagnostic>)> {
    let parsed = read_enriched(open(path)?, mode).map_err(|source| PipelineError::Ingest {
        path: path.to_owned(),
        source,
    })?;
    Ok((parsed.records, parsed.diagnostics))
}

fn diagnostics_text(out: &mut String, source: &str, diags: &[Diagnostic]) {
    for d in diags {
        let _ = writeln!(out, "warning: {source}: {d}");
    }
}

// ---------------------------------------------------------------- ingest

#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub rows: Vec<EnrichedReview>,
    pub n_reviews: usize,
    pub n_metadata: usize,
    pub review_diagnostics: Vec<Diagnostic>,
    pub metadata_diagnostics: Vec<Diagnostic>,
    pub join_diagnostics: Vec<Diagnostic>,
}

impl IngestOutcome {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        diagnostics_text(&mut s, "reviews", &self.review_diagnostics);
        diagnostics_text(&mut s, "metadata", &self.metadata_diagnostics);
        diagnostics_text(&mut s, "join", &self.join_diagnostics);
        let _ = writeln!(
            s,
            "ingest: {} reviews ({} skipped), {} metadata rows ({} skipped), {} joined",
            self.n_reviews,
            self.review_diagnostics.len(),
            self.n_metadata,
            self.metadata_diagnostics.len(),
            self.rows.len()
        );
        s
    }
}

/// Parses both files, joins them and engineers features.
pub fn ingest(reviews: &Path, metadata: &Path, mode: Strictness) -> Result<IngestOutcome> {
    let r = parse_reviews(open(reviews)?, mode).map_err(|source| PipelineError::Ingest {
        path: reviews.to_owned(),
        source,
    })?;
    let m = parse_metadata(open(metadata)?, mode).map_err(|source| PipelineError::Ingest {
        path: metadata.to_owned(),
        source,
    })?;
    let joined = merge_on_parent_asin(&r.records, &m.records);
    let rows = joined.rows.iter().copied().map(engineer_features).collect();
    Ok(IngestOutcome {
        rows,
        n_reviews: r.records.len(),
        n_metadata: m.records.len(),
        join_diagnostics: joined.diagnostics,
        review_diagnostics: r.diagnostics,
        metadata_diagnostics: m.diagnostics,
    })
}

// ---------------------------------------------------------------- scoring

#[derive(Debug, Clone)]
pub struct ScoreOutcome {
    pub rows: Vec<EnrichedReview>,
    /// Rows left without a score (imported scores only).
    pub unmatched: usize,
}

pub fn score(rows: Vec<EnrichedReview>, cfg: &PipelineConfig) -> Result<ScoreOutcome> {
    match cfg.scorer.kind {
        ScorerKind::Lexicon => {
            let scorer = LexiconScorer {
                lexicon: &cfg.scorer.lexicon,
                squash: cfg.scorer.squash,
            };
            Ok(ScoreOutcome {
                rows: score_corpus(rows, &cfg.scorer, &scorer)?,
                unmatched: 0,
            })
        }
        ScorerKind::Imported => {
            let path = cfg
                .scores
                .as_deref()
                .ok_or_else(|| PipelineError::Data("imported scorer needs a scores file".into()))?;
            let out = import_scores(rows, open(path)?, &cfg.score_field)?;
            Ok(ScoreOutcome {
                unmatched: out.unmatched.len(),
                rows: out.rows,
            })
        }
    }
}

// ---------------------------------------------------------------- evaluation

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Scored rows used; unscored rows are skipped.
    pub n_scored: usize,
    pub n_unscored: usize,
    /// Rows held out for the report, when a holdout was requested.
    pub n_holdout: Option<usize>,
    pub sweep: ThresholdSweepResult,
    pub confusion: ConfusionMatrix,
    pub report: ClassificationReport,
    pub roc: RocCurve,
}

/// Threshold sweep, confusion matrix at the best threshold, report and ROC.
///
/// With `holdout > 0` the threshold is picked on a seeded training part and
/// the report and ROC are computed on the held-out part.
pub fn evaluate(
    rows: &[EnrichedReview],
    grid: ThresholdGrid,
    holdout: f64,
    seed: u64,
) -> Result<Evaluation> {
    let mut scores = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for r in rows {
        if let Some(s) = r.sentiment_score {
            scores.push(s);
            labels.push(rating_to_label(r.rating)?);
        }
    }
    if scores.is_empty() {
        return Err(PipelineError::Data("no scored rows to evaluate".into()));
    }
    let pick = |idx: &[usize]| -> (Vec<f64>, Vec<u8>) {
        idx.iter().map(|&i| (scores[i], labels[i])).unzip()
    };
    let (fit_part, report_part, n_holdout) = if holdout > 0.0 {
        let (train, test) = train_test_split(scores.len(), holdout, seed)?;
        if train.is_empty() || test.is_empty() {
            return Err(PipelineError::Data(
                "holdout split left an empty part".into(),
            ));
        }
        (pick(&train), pick(&test), Some(test.len()))
    } else {
        (
            (scores.clone(), labels.clone()),
            (scores.clone(), labels.clone()),
            None,
        )
    };
    let sweep = sweep_thresholds(&fit_part.0, &fit_part.1, grid)?;
    let pred: Vec<u8> = report_part
        .0
        .iter()
        .map(|&s| apply_threshold(s, sweep.best_threshold))
        .collect();
    let cm = confusion(&report_part.1, &pred)?;
    Ok(Evaluation {
        n_scored: scores.len(),
        n_unscored: rows.len() - scores.len(),
        n_holdout,
        report: report(&cm),
        roc: roc(&report_part.0, &report_part.1)?,
        confusion: cm,
        sweep,
    })
}

impl Evaluation {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "evaluate: {} scored rows ({} unscored skipped){}",
            self.n_scored,
            self.n_unscored,
            self.n_holdout
                .map(|n| format!(", report on {n} held-out rows"))
                .unwrap_or_default()
        );
        let _ = writeln!(
            s,
            "best threshold: {}  weighted F1: {:.4}  AUC: {:.4}",
            format_real(self.sweep.best_threshold),
            self.sweep.best_f1,
            self.roc.auc
        );
        let _ = writeln!(s);
        let _ = write!(s, "{}", self.report);
        s
    }
}

pub fn write_evaluation(ev: &Evaluation, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let f1_table = Table::new()
        .column("threshold", ev.sweep.grid.iter().copied())
        .column("weighted_f1", ev.sweep.f1_by_threshold.iter().copied());
    written.push(write_artifact(
        dir,
        "threshold_f1.csv",
        &emit_csv(&f1_table)?,
    )?);

    let roc_table = Table::new()
        .column("threshold", ev.roc.thresholds.iter().copied())
        .column("fpr", ev.roc.points.iter().map(|p| p.0))
        .column("tpr", ev.roc.points.iter().map(|p| p.1));
    written.push(write_artifact(dir, "roc.csv", &emit_csv(&roc_table)?)?);

    let mut text = ev.summary();
    let _ = writeln!(
        text,
        "\nconfusion matrix (rows actual, columns predicted):\n{:>10} {:>10} {:>10}\n{:>10} {:>10} {:>10}\n{:>10} {:>10} {:>10}",
        "", "Negative", "Positive", "Negative", ev.confusion.tn, ev.confusion.fp, "Positive", ev.confusion.fn_, ev.confusion.tp
    );
    written.push(write_artifact(dir, "classification_report.txt", &text)?);
    written.push(write_artifact(
        dir,
        "confusion.svg",
        &emit_confusion(&ev.confusion),
    )?);

    let f1_series = Series::new(
        "weighted F1",
        ev.sweep
            .grid
            .iter()
            .copied()
            .zip(ev.sweep.f1_by_threshold.iter().copied())
            .collect(),
    );
    let spec = ChartSpec::new(ChartKind::ThresholdF1, "Weighted F1 by Threshold")
        .labels("Threshold", "Weighted F1");
    written.push(write_artifact(
        dir,
        "threshold_f1.svg",
        &emit_chart(&spec, &[f1_series])?,
    )?);

    let roc_series = Series::new(
        format!("ROC (AUC = {:.4})", ev.roc.auc),
        ev.roc.points.clone(),
    );
    let spec = ChartSpec::new(ChartKind::Roc, "ROC Curve")
        .labels("False Positive Rate", "True Positive Rate");
    written.push(write_artifact(
        dir,
        "roc.svg",
        &emit_chart(&spec, &[roc_series])?,
    )?);

    let per_class = |name: &str, m: &crate::evaluation::ClassMetrics| {
        Series::new(name, vec![(0.0, m.precision), (1.0, m.recall), (2.0, m.f1)])
    };
    let spec = ChartSpec::new(ChartKind::Bars, "Per-class Metrics at Best Threshold")
        .labels("Metric", "Score")
        .y_bounds(0.0, 1.0)
        .categories(["precision", "recall", "f1-score"]);
    let bars = [
        per_class("Negative", &ev.report.negative),
        per_class("Positive", &ev.report.positive),
    ];
    written.push(write_artifact(
        dir,
        "metrics.svg",
        &emit_chart(&spec, &bars)?,
    )?);
    Ok(written)
}

// ---------------------------------------------------------------- aggregation

/// The product with the most rows; ties go to the smallest id.
pub fn focal_asin(rows: &[EnrichedReview]) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in rows {
        *counts.entry(r.parent_asin.as_str()).or_default() += 1;
    }
    let mut best: Option<(&str, usize)> = None;
    for (k, c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((k, c));
        }
    }
    best.map(|(k, _)| k.to_owned())
}

fn resolve_asin(rows: &[EnrichedReview], asin: Option<&str>) -> Result<String> {
    match asin {
        Some(a) => Ok(a.to_owned()),
        None => focal_asin(rows).ok_or_else(|| PipelineError::Data("no rows to analyse".into())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub panel: MonthlyPanel,
    pub series: SentimentSeries,
    pub moving_average: Vec<Option<f64>>,
    pub ma_window: usize,
}

pub fn aggregate(
    rows: &[EnrichedReview],
    asin: &str,
    proxy: PurchaseProxy,
    ma_window: usize,
) -> Result<Aggregate> {
    let panel = build_monthly_panel(rows, asin, proxy, false)?;
    let series = SentimentSeries::from_reviews(rows, asin)?;
    let moving_average = moving_average(&series.values, ma_window, 1)?;
    Ok(Aggregate {
        panel,
        series,
        moving_average,
        ma_window,
    })
}

pub fn panel_table(panel: &MonthlyPanel) -> Table {
    let rows = &panel.rows;
    let mut t = Table::new()
        .column("year", rows.iter().map(|r| i64::from(r.year)))
        .column("month", rows.iter().map(|r| i64::from(r.month)))
        .column("year_month", rows.iter().map(|r| r.year_month.clone()))
        .column(
            "sentiment_score_avg",
            rows.iter().map(|r| r.sentiment_score_avg),
        )
        .column("purchase_count", rows.iter().map(|r| r.purchase_count));
    if rows.iter().all(|r| r.features.is_some()) && !rows.is_empty() {
        let f = |g: fn(&crate::analytics::PanelFeatures) -> Option<f64>| -> Vec<Cell> {
            rows.iter()
                .map(|r| Cell::from(r.features.as_ref().and_then(g)))
                .collect()
        };
        t = t
            .column("review_length", f(|x| Some(x.review_length)))
            .column("helpful_vote", f(|x| Some(x.helpful_vote)))
            .column("rating", f(|x| Some(x.rating)))
            .column("has_images", f(|x| Some(x.has_images)))
            .column("weekday", f(|x| Some(x.weekday)))
            .column("average_rating", f(|x| x.average_rating))
            .column("rating_number", f(|x| Some(x.rating_number)))
            .column("sentiment_score_squared", f(|x| x.sentiment_score_squared));
    }
    t
}

impl Aggregate {
    pub fn summary(&self) -> String {
        format!(
            "aggregate: product {} with {} scored reviews over {} months (purchase proxy {})\n",
            self.panel.asin,
            self.series.len(),
            self.panel.rows.len(),
            self.panel.proxy
        )
    }
}

pub fn write_aggregate(agg: &Aggregate, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = vec![write_artifact(
        dir,
        "panel.csv",
        &emit_csv(&panel_table(&agg.panel))?,
    )?];
    let times = agg.series.times.iter().map(|&t| t as f64);
    let raw = Series::new(
        "Sentiment Score",
        times
            .clone()
            .zip(agg.series.values.iter().copied())
            .collect(),
    );
    let ma = Series::new(
        format!("Moving Average ({})", agg.ma_window),
        times
            .zip(&agg.moving_average)
            .filter_map(|(t, m)| m.map(|v| (t, v)))
            .collect(),
    );
    let spec = ChartSpec::new(
        ChartKind::ScatterWithMa,
        format!("Time-series of {} Sentiment Score", agg.panel.asin),
    )
    .labels("Time", "Sentiment Score")
    .y_bounds(-1.0, 1.0)
    .x_axis(XAxis::DateMillis);
    written.push(write_artifact(
        dir,
        "timeseries.svg",
        &emit_chart(&spec, &[raw, ma])?,
    )?);
    Ok(written)
}

// ---------------------------------------------------------------- regression

#[derive(Debug, Clone, PartialEq)]
pub struct Regression {
    pub asin: String,
    pub correlation: f64,
    pub fit: OlsFit,
    /// Months dropped because none of their reviews was scored.
    pub months_without_scores: usize,
}

/// Monthly purchase proxy regressed on the monthly mean sentiment.
pub fn regress(panel: &MonthlyPanel) -> Result<Regression> {
    let (x, y): (Vec<f64>, Vec<f64>) = panel
        .rows
        .iter()
        .filter_map(|r| r.sentiment_score_avg.map(|s| (s, r.purchase_count)))
        .unzip();
    let correlation = pearson(&x, &y)?;
    let design = Matrix::from_columns(std::slice::from_ref(&x)).map_err(AnalyticsError::from)?;
    let fit = ols_fit(&design, &y, true)?.with_names(&["sentiment_score_avg"]);
    Ok(Regression {
        asin: panel.asin.clone(),
        correlation,
        fit,
        months_without_scores: panel.rows.len() - x.len(),
    })
}

impl Regression {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "OLS: purchase_count ~ sentiment_score_avg for product {}",
            self.asin
        );
        let _ = writeln!(s, "Pearson correlation: {:.6}", self.correlation);
        if self.months_without_scores > 0 {
            let _ = writeln!(
                s,
                "months without scored reviews (dropped): {}",
                self.months_without_scores
            );
        }
        let _ = write!(s, "{}", self.fit);
        s
    }
}

// ---------------------------------------------------------------- PC regression

#[derive(Debug, Clone, PartialEq)]
pub struct PcaRegression {
    pub panel: MonthlyPanel,
    pub result: PcRegression,
    pub options: PcrOptions,
}

pub fn pca_regress(
    rows: &[EnrichedReview],
    asin: &str,
    proxy: PurchaseProxy,
    options: PcrOptions,
) -> Result<PcaRegression> {
    let panel = build_monthly_panel(rows, asin, proxy, true)?;
    let result = pc_regression(&panel, options)?;
    let names: Vec<String> = (1..=result.pca.k_retained)
        .map(|i| format!("pc{i}"))
        .collect();
    let result = PcRegression {
        fit: result.fit.clone().with_names(&names),
        ..result
    };
    Ok(PcaRegression {
        panel,
        result,
        options,
    })
}

impl PcaRegression {
    pub fn summary(&self) -> String {
        let r = &self.result;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "PCA regression: {} ~ principal components for product {}",
            self.panel.proxy, self.panel.asin
        );
        let _ = writeln!(
            s,
            "months: {}  train: {}  test: {}  seed: {}",
            self.panel.rows.len(),
            r.train.len(),
            r.test.len(),
            self.options.seed
        );
        let _ = writeln!(
            s,
            "components retained: {} (variance target {})",
            r.pca.k_retained, self.options.variance_target
        );
        if !r.scaling.constant_columns.is_empty() {
            let cols: Vec<&str> = r
                .scaling
                .constant_columns
                .iter()
                .map(|&c| PCR_FEATURES[c])
                .collect();
            let _ = writeln!(
                s,
                "constant features (standardized to 0): {}",
                cols.join(", ")
            );
        }
        let _ = writeln!(s, "\n{:<6}{:>14}{:>14}", "pc", "explained", "cumulative");
        let mut cum = 0.0;
        for (i, ratio) in r.pca.explained_variance_ratio.iter().enumerate() {
            cum += ratio;
            let _ = writeln!(
                s,
                "{:<6}{:>14.6}{:>14.6}",
                format!("pc{}", i + 1),
                ratio,
                cum
            );
        }
        let _ = writeln!(s, "\nloadings of retained components:");
        let _ = write!(s, "{:<26}", "feature");
        for j in 0..r.pca.k_retained {
            let _ = write!(s, "{:>10}", format!("pc{}", j + 1));
        }
        let _ = writeln!(s);
        for (c, name) in PCR_FEATURES.iter().enumerate() {
            let _ = write!(s, "{name:<26}");
            for j in 0..r.pca.k_retained {
                let _ = write!(s, "{:>10.4}", r.pca.components.get(j, c));
            }
            let _ = writeln!(s);
        }
        let _ = writeln!(s);
        let _ = write!(s, "{}", r.fit);
        match r.test_mse {
            Some(m) => {
                let _ = writeln!(s, "\ntest MSE: {}", format_real(m));
            }
            None => {
                let _ = writeln!(s, "\ntest MSE: n/a (no test rows)");
            }
        }
        s
    }
}

// ---------------------------------------------------------------- time series

#[derive(Debug, Clone, PartialEq)]
pub struct TsaOutcome {
    pub asin: String,
    pub series: SentimentSeries,
    pub acf: Vec<f64>,
    pub pacf: Pacf,
    pub max_lag: usize,
    pub fit: ArimaFit,
}

/// ACF/PACF (lags capped below n/2) and an ARIMA fit of one product's
/// event-ordered sentiment series.
pub fn tsa(
    rows: &[EnrichedReview],
    asin: &str,
    order: ArimaOrder,
    max_lag: usize,
) -> Result<TsaOutcome> {
    let series = SentimentSeries::from_reviews(rows, asin)?;
    let n = series.len();
    let lag = max_lag.min(n.saturating_sub(1) / 2);
    if lag == 0 {
        return Err(PipelineError::Data(format!(
            "product {asin} has {n} scored reviews; too few for autocorrelation"
        )));
    }
    let acf_values = acf(&series.values, lag)?;
    let pacf_values = pacf(&series.values, lag)?;
    let fit = arima_fit(&series.values, order)?;
    Ok(TsaOutcome {
        asin: asin.to_owned(),
        series,
        acf: acf_values,
        pacf: pacf_values,
        max_lag: lag,
        fit,
    })
}

impl TsaOutcome {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "time series: product {} with {} scored reviews, ACF/PACF to lag {}\n\n",
            self.asin,
            self.series.len(),
            self.max_lag
        );
        let _ = write!(s, "{}", self.fit);
        s
    }
}

pub fn write_tsa(out: &TsaOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    let band = out.pacf.confidence_halfwidth;
    let lags = 1..=out.max_lag;
    let table = Table::new()
        .column("lag", lags.clone().map(|l| l as i64))
        .column("acf", out.acf[1..].iter().copied())
        .column("pacf", out.pacf.coefficients.iter().copied())
        .column("band_lower", lags.clone().map(|_| -band))
        .column("band_upper", lags.clone().map(|_| band));
    let mut written = vec![write_artifact(dir, "acf_pacf.csv", &emit_csv(&table)?)?];
    let spec = ChartSpec::new(
        ChartKind::Bars,
        "Partial Autocorrelation of Sentiment Scores",
    )
    .labels("Lag", "PACF")
    .y_bounds(-1.0, 1.0)
    .categories(std::iter::once("0".to_string()).chain(lags.clone().map(|l| l.to_string())));
    let pacf_series = Series::new(
        "PACF",
        std::iter::once((0.0, 1.0))
            .chain(
                lags.zip(&out.pacf.coefficients)
                    .map(|(l, &p)| (l as f64, p)),
            )
            .collect(),
    );
    written.push(write_artifact(
        dir,
        "pacf.svg",
        &emit_chart(&spec, &[pacf_series])?,
    )?);
    let mut text = out.summary();
    let _ = writeln!(text, "PACF 95% band: ±{}", format_real(band));
    written.push(write_artifact(dir, "arima_summary.txt", &text)?);
    Ok(written)
}

// ---------------------------------------------------------------- all stages

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub asin: String,
    pub n_joined: usize,
    pub n_filtered: usize,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Runs every stage with `cfg`, writing all artifacts to `cfg.output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineRun> {
    let reviews = cfg
        .reviews
        .as_deref()
        .ok_or_else(|| PipelineError::Data("no reviews file configured".into()))?;
    let metadata = cfg
        .metadata
        .as_deref()
        .ok_or_else(|| PipelineError::Data("no metadata file configured".into()))?;
    let dir = cfg.output_dir.as_path();
    let mut files = Vec::new();
    let mut summary = String::new();

    let ingested = ingest(reviews, metadata, cfg.strictness)?;
    summary.push_str(&ingested.summary());
    let n_joined = ingested.rows.len();
    let merged_path = dir.join("merged.jsonl");
    write_rows(&merged_path, &ingested.rows)?;
    files.push(merged_path);

    let scored = score(ingested.rows, cfg)?;
    if scored.unmatched > 0 {
        let _ = writeln!(
            summary,
            "score: {} rows without an imported score",
            scored.unmatched
        );
    }
    let scored_path = dir.join("scored.jsonl");
    write_rows(&scored_path, &scored.rows)?;
    files.push(scored_path);

    let ev = evaluate(&scored.rows, cfg.threshold_grid, cfg.eval_holdout, cfg.seed)?;
    summary.push('\n');
    summary.push_str(&ev.summary());
    files.extend(write_evaluation(&ev, dir)?);

    let filtered = filter_products(scored.rows, cfg.min_reviews, cfg.require_price);
    let _ = writeln!(
        summary,
        "\nfilter: {} rows from products with >= {} reviews{}",
        filtered.len(),
        cfg.min_reviews,
        if cfg.require_price {
            " and a price"
        } else {
            ""
        }
    );
    let filtered_path = dir.join("filtered.jsonl");
    write_rows(&filtered_path, &filtered)?;
    files.push(filtered_path);
    if filtered.is_empty() {
        return Err(PipelineError::Data(format!(
            "no product has at least {} reviews; lower min_reviews",
            cfg.min_reviews
        )));
    }

    let asin = resolve_asin(&filtered, cfg.asin.as_deref())?;
    let agg = aggregate(&filtered, &asin, cfg.purchase_proxy, cfg.ma_window)?;
    summary.push_str(&agg.summary());
    files.extend(write_aggregate(&agg, dir)?);

    let reg = regress(&agg.panel)?;
    let reg_text = reg.summary();
    files.push(write_artifact(dir, "ols_summary.txt", &reg_text)?);
    summary.push('\n');
    summary.push_str(&reg_text);

    let pcr = pca_regress(&filtered, &asin, cfg.pca_purchase_proxy, cfg.pcr_options())?;
    let pcr_text = pcr.summary();
    files.push(write_artifact(
        dir,
        "pca_panel.csv",
        &emit_csv(&panel_table(&pcr.panel))?,
    )?);
    files.push(write_artifact(dir, "pca_regression.txt", &pcr_text)?);
    summary.push('\n');
    summary.push_str(&pcr_text);

    let ts = tsa(&filtered, &asin, cfg.arima_order, cfg.max_lag)?;
    files.extend(write_tsa(&ts, dir)?);
    summary.push('\n');
    summary.push_str(&ts.summary());

    files.push(write_artifact(dir, "summary.txt", &summary)?);
    Ok(PipelineRun {
        asin,
        n_joined,
        n_filtered: filtered.len(),
        files,
        summary,
    })
}
