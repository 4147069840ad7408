use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use review_sentinel_core::analytics::{ols_fit, pca_fit, standardize};
use review_sentinel_core::evaluation::{roc, sweep_thresholds, ThresholdGrid};
use review_sentinel_core::model_math::attention;
use review_sentinel_core::scoring::{score_corpus, LexiconScorer};
use review_sentinel_core::synth::blank_review;
use review_sentinel_core::timeseries::{arima_fit, pacf, ArimaOrder};
use review_sentinel_core::{Matrix, ScorerSpec};

fn uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn random_walk(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (0..n)
        .map(|_| {
            acc += rng.random_range(-1.0..1.0);
            acc
        })
        .collect()
}

fn evaluation(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let scores = uniform(&mut rng, 10_000);
    let labels: Vec<u8> = scores
        .iter()
        .map(|&s| u8::from(s + rng.random_range(-0.5..0.5) > 0.0))
        .collect();
    c.bench_function("roc_10k", |b| {
        b.iter(|| roc(black_box(&scores), black_box(&labels)).unwrap())
    });
    c.bench_function("sweep_10k", |b| {
        b.iter(|| {
            sweep_thresholds(
                black_box(&scores),
                black_box(&labels),
                ThresholdGrid::default(),
            )
            .unwrap()
        })
    });
}

fn regression(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cols: Vec<Vec<f64>> = (0..11).map(|_| uniform(&mut rng, 500)).collect();
    let x = Matrix::from_columns(&cols).unwrap();
    let y = uniform(&mut rng, 500);
    c.bench_function("ols_500x11", |b| {
        b.iter(|| ols_fit(black_box(&x), black_box(&y), true).unwrap())
    });
    let z = standardize(&x).unwrap().z;
    c.bench_function("pca_500x11", |b| {
        b.iter(|| pca_fit(black_box(&z), 0.95).unwrap())
    });
}

fn time_series(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let walk = random_walk(&mut rng, 2000);
    c.bench_function("pacf_2000_lag20", |b| {
        b.iter(|| pacf(black_box(&walk), 20).unwrap())
    });
    let mut group = c.benchmark_group("arima");
    group.sample_size(10);
    group.bench_function("arima_111_2000", |b| {
        b.iter(|| arima_fit(black_box(&walk), ArimaOrder::default()).unwrap())
    });
    group.finish();
}

fn scoring_and_attention(c: &mut Criterion) {
    let rows: Vec<_> = (0..5000)
        .map(|i| {
            blank_review(if i % 3 == 0 {
                "great product, works well"
            } else {
                "broke after a week, poor value"
            })
        })
        .collect();
    let spec = ScorerSpec::default();
    let scorer = LexiconScorer {
        lexicon: &spec.lexicon,
        squash: spec.squash,
    };
    c.bench_function("lexicon_score_5000", |b| {
        b.iter(|| score_corpus(black_box(rows.clone()), &spec, &scorer).unwrap())
    });

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = |rng: &mut ChaCha8Rng| Matrix::new(64, 32, uniform(rng, 64 * 32)).unwrap();
    let (q, k, v) = (m(&mut rng), m(&mut rng), m(&mut rng));
    c.bench_function("attention_64x32", |b| {
        b.iter(|| attention(black_box(&q), &k, &v).unwrap())
    });
}

criterion_group!(
    benches,
    evaluation,
    regression,
    time_series,
    scoring_and_attention
);
criterion_main!(benches);
