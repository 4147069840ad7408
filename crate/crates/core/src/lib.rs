//! Review sentiment analytics engine.
//!
//! The crate covers the whole path from raw review/metadata JSON Lines to
//! statistical summaries:
//!
//! - [`ingest`]: streaming parse, inner join on `parent_asin`, calendar
//!   features and review-count filtering.
//! - [`scoring`]: text truncation, a lexicon baseline scorer, an ordered
//!   bounded worker pool and import of precomputed scores.
//! - [`model_math`]: forward-only attention and pre-training loss formulas.
//! - [`evaluation`]: star rating labels, threshold sweep, confusion matrix,
//!   classification report and ROC/AUC.
//! - [`analytics`]: monthly panels, Pearson correlation, OLS inference,
//!   standardization, PCA and principal-component regression.
//! - [`timeseries`]: moving averages, ACF/PACF, differencing, CSS ARIMA and
//!   residual diagnostics.
//! - [`report`]: deterministic SVG charts and CSV tables.
//! - [`config`] and [`pipeline`]: configuration and end-to-end orchestration.

pub mod analytics;
pub mod config;
pub mod evaluation;
pub mod ingest;
pub mod linalg;
pub mod model_math;
pub mod pipeline;
pub mod report;
pub mod scoring;
pub mod synth;
pub mod timeseries;

pub use analytics::{MonthlyPanel, OlsFit, PcaModel, PurchaseProxy};
pub use config::{ConfigError, PipelineConfig};
pub use evaluation::{ClassificationReport, ConfusionMatrix, RocCurve, ThresholdSweepResult};
pub use ingest::{EnrichedReview, ItemMeta, ReviewRecord, Strictness};
pub use linalg::Matrix;
pub use scoring::{ScorerKind, ScorerSpec};
pub use timeseries::{ArimaFit, ArimaOrder, SentimentSeries};
