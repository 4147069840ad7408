//! Monthly panels, correlation, OLS, PCA and principal-component regression.

pub mod distributions;
mod ols;
mod pca;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ingest::EnrichedReview;
use crate::linalg::{Matrix, MatrixError};

pub use distributions::{chi2_sf, f_cdf, f_sf, normal_sf_two_sided, t_sf_two_sided};
pub use ols::{ols_fit, OlsFit};
pub use pca::{column_means, components_for_target, pca_fit, standardize, PcaModel, Standardized};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("no rows for product {0:?}")]
    EmptyProduct(String),
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),
    #[error("singular design: columns {columns:?} are linearly dependent on earlier columns")]
    SingularDesign { columns: Vec<String> },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// What stands in for monthly purchases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PurchaseProxy {
    /// Sum of verified-purchase flags.
    VerifiedSum,
    /// Number of reviews.
    ReviewCount,
}

impl FromStr for PurchaseProxy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "verified_sum" => Ok(Self::VerifiedSum),
            "review_count" => Ok(Self::ReviewCount),
            other => Err(format!(
                "unknown purchase proxy {other:?} (expected verified_sum or review_count)"
            )),
        }
    }
}

impl fmt::Display for PurchaseProxy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::VerifiedSum => "verified_sum",
            Self::ReviewCount => "review_count",
        })
    }
}

/// Monthly means of the review-level features.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PanelFeatures {
    pub review_length: f64,
    pub helpful_vote: f64,
    pub rating: f64,
    pub has_images: f64,
    pub weekday: f64,
    pub average_rating: Option<f64>,
    pub rating_number: f64,
    pub sentiment_score_squared: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    pub year: i32,
    pub month: u32,
    pub year_month: String,
    /// Mean score of the month's scored reviews; `None` when none were scored.
    pub sentiment_score_avg: Option<f64>,
    pub purchase_count: f64,
    pub features: Option<PanelFeatures>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyPanel {
    pub asin: String,
    pub proxy: PurchaseProxy,
    pub rows: Vec<PanelRow>,
}

/// Feature columns used by the principal-component regression, in order.
pub const PCR_FEATURES: [&str; 11] = [
    "sentiment_score",
    "sentiment_score_squared",
    "review_length",
    "helpful_vote",
    "rating",
    "has_images",
    "weekday",
    "average_rating",
    "rating_number",
    "year",
    "month",
];

impl MonthlyPanel {
    pub fn sentiment(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.sentiment_score_avg).collect()
    }

    pub fn purchase_counts(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.purchase_count).collect()
    }

    /// Rows of [`PCR_FEATURES`], missing values filled with 0.
    pub fn feature_matrix(&self) -> Result<Matrix, AnalyticsError> {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let f = r.features.as_ref().ok_or_else(|| {
                    AnalyticsError::Invalid(format!(
                        "panel row {} lacks feature means",
                        r.year_month
                    ))
                })?;
                Ok(vec![
                    r.sentiment_score_avg.unwrap_or(0.0),
                    f.sentiment_score_squared.unwrap_or(0.0),
                    f.review_length,
                    f.helpful_vote,
                    f.rating,
                    f.has_images,
                    f.weekday,
                    f.average_rating.unwrap_or(0.0),
                    f.rating_number,
                    f64::from(r.year),
                    f64::from(r.month),
                ])
            })
            .collect::<Result<Vec<_>, AnalyticsError>>()?;
        Ok(Matrix::from_rows(&rows)?)
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Groups one product's reviews by (year, month).
pub fn build_monthly_panel(
    rows: &[EnrichedReview],
    asin: &str,
    proxy: PurchaseProxy,
    include_features: bool,
) -> Result<MonthlyPanel, AnalyticsError> {
    let mut groups: BTreeMap<String, Vec<&EnrichedReview>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.parent_asin == asin) {
        let key = format!("{}-{:02}", r.year, r.month);
        groups.entry(key).or_default().push(r);
    }
    if groups.is_empty() {
        return Err(AnalyticsError::EmptyProduct(asin.to_owned()));
    }
    let rows = groups
        .into_iter()
        .map(|(year_month, g)| {
            let avg = mean(g.iter().filter_map(|r| r.sentiment_score));
            let purchase_count = match proxy {
                PurchaseProxy::VerifiedSum => {
                    g.iter().map(|r| f64::from(r.verified_purchase_flag)).sum()
                }
                PurchaseProxy::ReviewCount => g.len() as f64,
            };
            let features = include_features.then(|| PanelFeatures {
                review_length: mean(g.iter().map(|r| r.review_length as f64)).unwrap_or(0.0),
                helpful_vote: mean(g.iter().map(|r| r.helpful_vote as f64)).unwrap_or(0.0),
                rating: mean(g.iter().map(|r| r.rating)).unwrap_or(0.0),
                has_images: mean(g.iter().map(|r| f64::from(r.has_images))).unwrap_or(0.0),
                weekday: mean(g.iter().map(|r| f64::from(r.weekday))).unwrap_or(0.0),
                average_rating: mean(g.iter().filter_map(|r| r.average_rating)),
                rating_number: mean(g.iter().map(|r| r.rating_number as f64)).unwrap_or(0.0),
                sentiment_score_squared: avg.map(|a| a * a),
            });
            PanelRow {
                year: g[0].year,
                month: g[0].month,
                year_month,
                sentiment_score_avg: avg,
                purchase_count,
                features,
            }
        })
        .collect();
    Ok(MonthlyPanel {
        asin: asin.to_owned(),
        proxy,
        rows,
    })
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalyticsError> {
    if x.len() != y.len() {
        return Err(AnalyticsError::Invalid(format!(
            "length mismatch {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(AnalyticsError::UndefinedCorrelation(
            "need at least 2 points".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalyticsError::UndefinedCorrelation(
            "constant input".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Seeded shuffle split: the first round(n·fraction) shuffled indices are
/// the test set.
pub fn train_test_split(
    n: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), AnalyticsError> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(AnalyticsError::Invalid(format!(
            "test fraction {test_fraction} outside [0, 1)"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let n_test = (n as f64 * test_fraction).round() as usize;
    let train = idx.split_off(n_test);
    Ok((train, idx))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcrOptions {
    pub variance_target: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for PcrOptions {
    fn default() -> Self {
        Self {
            variance_target: 0.95,
            test_fraction: 0.2,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcRegression {
    pub scaling: Standardized,
    pub pca: PcaModel,
    /// OLS of the target on the retained component scores (`x1..xk`).
    pub fit: OlsFit,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Mean squared prediction error on the test rows; `None` without test rows.
    pub test_mse: Option<f64>,
}

fn select_rows(m: &Matrix, idx: &[usize]) -> Result<Matrix, AnalyticsError> {
    let rows: Vec<Vec<f64>> = idx.iter().map(|&i| m.row(i).to_vec()).collect();
    Ok(Matrix::from_rows(&rows)?)
}

/// Standardize → PCA → split → OLS on retained components → test MSE.
pub fn pc_regression(
    panel: &MonthlyPanel,
    opts: PcrOptions,
) -> Result<PcRegression, AnalyticsError> {
    if panel.rows.len() < 3 {
        return Err(AnalyticsError::Invalid(format!(
            "principal-component regression needs >= 3 panel rows, got {}",
            panel.rows.len()
        )));
    }
    let x = panel.feature_matrix()?;
    let y = panel.purchase_counts();
    let scaling = standardize(&x)?;
    let pca = pca_fit(&scaling.z, opts.variance_target)?;
    let scores = pca.transform(&scaling.z)?;
    let (train, test) = train_test_split(y.len(), opts.test_fraction, opts.seed)?;
    let x_train = select_rows(&scores, &train)?;
    let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let fit = ols_fit(&x_train, &y_train, true)?;
    let test_mse = if test.is_empty() {
        None
    } else {
        let x_test = select_rows(&scores, &test)?;
        let pred = fit.predict(&x_test);
        Some(
            test.iter()
                .zip(pred)
                .map(|(&i, p)| (y[i] - p).powi(2))
                .sum::<f64>()
                / test.len() as f64,
        )
    };
    Ok(PcRegression {
        scaling,
        pca,
        fit,
        train,
        test,
        test_mse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::blank_review;

    fn review_at(asin: &str, year: i32, month: u32, score: f64, verified: bool) -> EnrichedReview {
        let mut r = blank_review("text");
        r.parent_asin = asin.into();
        r.year = year;
        r.month = month;
        r.sentiment_score = Some(score);
        r.verified_purchase = verified;
        r.verified_purchase_flag = u8::from(verified);
        r
    }

    #[test]
    fn panel_examples() {
        let rows = vec![
            review_at("P", 2015, 3, 0.2, true),
            review_at("P", 2015, 3, 0.4, true),
            review_at("Q", 2015, 3, -1.0, true),
        ];
        let p = build_monthly_panel(&rows, "P", PurchaseProxy::VerifiedSum, false).unwrap();
        assert_eq!(p.rows.len(), 1);
        assert_eq!(p.rows[0].year_month, "2015-03");
        assert!((p.rows[0].sentiment_score_avg.unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(p.rows[0].purchase_count, 2.0);

        let mut rows: Vec<_> = (0..5)
            .map(|i| review_at("P", 2016, 11, 0.1, i < 2))
            .collect();
        rows.push(review_at("P", 2016, 2, 0.1, true));
        let p = build_monthly_panel(&rows, "P", PurchaseProxy::ReviewCount, true).unwrap();
        assert_eq!(
            p.rows
                .iter()
                .map(|r| r.year_month.as_str())
                .collect::<Vec<_>>(),
            vec!["2016-02", "2016-11"]
        );
        assert_eq!(p.rows[1].purchase_count, 5.0);
        let f = p.rows[1].features.as_ref().unwrap();
        assert!((f.sentiment_score_squared.unwrap() - 0.01).abs() < 1e-15);

        assert!(matches!(
            build_monthly_panel(&rows, "missing", PurchaseProxy::ReviewCount, false),
            Err(AnalyticsError::EmptyProduct(_))
        ));
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 4.0, 7.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert!(matches!(
            pearson(&x, &[2.0; 4]),
            Err(AnalyticsError::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn split_examples() {
        let (train, test) = train_test_split(10, 0.2, 42).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(train_test_split(10, 0.2, 42).unwrap(), (train, test));
        let (train, test) = train_test_split(10, 0.0, 1).unwrap();
        assert_eq!((train.len(), test.len()), (10, 0));
        assert!(train_test_split(10, 1.0, 1).is_err());
    }

    #[test]
    fn proxy_parsing() {
        assert_eq!("verified_sum".parse(), Ok(PurchaseProxy::VerifiedSum));
        assert_eq!(PurchaseProxy::ReviewCount.to_string(), "review_count");
        assert!("sum".parse::<PurchaseProxy>().is_err());
    }
}
