//! End-to-end stage tests on the bundled synthetic corpus.

use std::path::{Path, PathBuf};

use review_sentinel_core::pipeline::{
    aggregate, evaluate, focal_asin, ingest, run_pipeline, score, tsa,
};
use review_sentinel_core::{synth, ArimaOrder, PipelineConfig, PurchaseProxy, Strictness};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/synthetic")
        .join(name)
}

#[test]
fn bundled_corpus_matches_generator() {
    let fresh = synth::generate(synth::DEFAULT_SEED);
    assert_eq!(
        std::fs::read_to_string(corpus("reviews.jsonl")).unwrap(),
        fresh.reviews
    );
    assert_eq!(
        std::fs::read_to_string(corpus("meta.jsonl")).unwrap(),
        fresh.metadata
    );
}

#[test]
fn stages_compose() {
    let outcome = ingest(
        &corpus("reviews.jsonl"),
        &corpus("meta.jsonl"),
        Strictness::Strict,
    )
    .unwrap();
    assert_eq!(outcome.n_reviews, 5000);
    assert_eq!(outcome.rows.len(), 4970);

    let cfg = PipelineConfig::default();
    let scored = score(outcome.rows, &cfg).unwrap();
    assert_eq!(scored.unmatched, 0);
    assert!(scored
        .rows
        .iter()
        .all(|r| r.sentiment_score.is_some_and(|s| (-1.0..=1.0).contains(&s))));

    let ev = evaluate(&scored.rows, cfg.threshold_grid, 0.0, cfg.seed).unwrap();
    assert_eq!(ev.n_scored, 4970);
    assert!(
        ev.roc.auc > 0.5,
        "lexicon scores should beat chance, auc {}",
        ev.roc.auc
    );
    assert_eq!(ev.sweep.grid.len(), 20);

    let asin = focal_asin(&scored.rows).unwrap();
    assert_eq!(asin, "B0SYN00001");
    let agg = aggregate(&scored.rows, &asin, PurchaseProxy::VerifiedSum, 10).unwrap();
    assert_eq!(agg.series.len(), 1700);
    assert_eq!(agg.moving_average.len(), 1700);

    let ts = tsa(&scored.rows, &asin, ArimaOrder::default(), 20).unwrap();
    assert_eq!(ts.pacf.coefficients.len(), 20);
    // CSS residuals start after differencing and one AR lag
    assert_eq!(ts.fit.n_obs(), 1700 - 1 - 1);
}

#[test]
fn pipeline_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::default();
    cfg.reviews = Some(corpus("reviews.jsonl"));
    cfg.metadata = Some(corpus("meta.jsonl"));
    cfg.output_dir = tmp.path().to_path_buf();
    let run = run_pipeline(&cfg).unwrap();
    assert_eq!(run.n_joined, 4970);
    // products 1-3 have at least 1100 priced reviews
    assert_eq!(run.n_filtered, 1700 + 1400 + 1150);
    for name in [
        "merged.jsonl",
        "scored.jsonl",
        "filtered.jsonl",
        "threshold_f1.csv",
        "roc.csv",
        "classification_report.txt",
        "confusion.svg",
        "roc.svg",
        "threshold_f1.svg",
        "panel.csv",
        "timeseries.svg",
        "ols_summary.txt",
        "pca_regression.txt",
        "acf_pacf.csv",
        "pacf.svg",
        "arima_summary.txt",
        "summary.txt",
    ] {
        assert!(tmp.path().join(name).is_file(), "missing {name}");
    }
    let ols = std::fs::read_to_string(tmp.path().join("ols_summary.txt")).unwrap();
    assert!(ols.contains("sentiment_score_avg"));
    let arima = std::fs::read_to_string(tmp.path().join("arima_summary.txt")).unwrap();
    assert!(arima.contains("ARIMA(1, 1, 1)"));
}

#[test]
fn missing_input_names_the_path() {
    let mut cfg = PipelineConfig::default();
    cfg.reviews = Some(PathBuf::from("/nonexistent/reviews.jsonl"));
    cfg.metadata = Some(corpus("meta.jsonl"));
    cfg.output_dir = tempfile::tempdir().unwrap().path().to_path_buf();
    let err = run_pipeline(&cfg).unwrap_err().to_string();
    assert!(err.contains("/nonexistent/reviews.jsonl"), "{err}");
}
