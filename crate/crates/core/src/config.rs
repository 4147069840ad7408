//! Pipeline configuration: defaults, a flat `key = value` file and
//! command-line overrides, applied in that order.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::analytics::{PcrOptions, PurchaseProxy};
use crate::evaluation::ThresholdGrid;
use crate::ingest::Strictness;
use crate::scoring::{parse_lexicon, ScorerKind, ScorerSpec};
use crate::timeseries::ArimaOrder;

/// Environment variable naming a config file when none is given explicitly.
pub const CONFIG_ENV: &str = "REVIEW_SENTINEL_CONFIG";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("unknown config key '{key}'")]
    UnknownKey { key: String },
    #[error("invalid value {value:?} for '{key}': expected {expected}")]
    TypeMismatch {
        key: String,
        value: String,
        expected: String,
    },
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl ConfigError {
    /// Usage-class errors (bad keys or values) as opposed to I/O failures.
    pub fn is_usage(&self) -> bool {
        !matches!(self, ConfigError::Io { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub reviews: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
    /// Precomputed scores for [`ScorerKind::Imported`].
    pub scores: Option<PathBuf>,
    pub score_field: String,
    pub output_dir: PathBuf,
    pub scorer: ScorerSpec,
    pub lexicon_path: Option<PathBuf>,
    pub min_reviews: usize,
    /// Drop unpriced rows before counting reviews per product.
    pub require_price: bool,
    pub threshold_grid: ThresholdGrid,
    /// Purchase proxy for the monthly OLS.
    pub purchase_proxy: PurchaseProxy,
    /// Purchase proxy for the principal-component regression.
    pub pca_purchase_proxy: PurchaseProxy,
    pub variance_target: f64,
    pub test_fraction: f64,
    pub seed: u64,
    pub arima_order: ArimaOrder,
    pub ma_window: usize,
    /// Largest ACF/PACF lag; capped below half the series length.
    pub max_lag: usize,
    /// Fraction of scored rows held out for the classification report; the
    /// threshold is then chosen on the remaining rows. 0 evaluates on all.
    pub eval_holdout: f64,
    pub strictness: Strictness,
    /// Product analysed by the per-product stages; the most-reviewed product
    /// when unset.
    pub asin: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            reviews: None,
            metadata: None,
            scores: None,
            score_field: "sentiment_score".into(),
            output_dir: PathBuf::from("out"),
            scorer: ScorerSpec::default(),
            lexicon_path: None,
            min_reviews: 1100,
            require_price: true,
            threshold_grid: ThresholdGrid::default(),
            purchase_proxy: PurchaseProxy::VerifiedSum,
            pca_purchase_proxy: PurchaseProxy::ReviewCount,
            variance_target: 0.95,
            test_fraction: 0.2,
            seed: 42,
            arima_order: ArimaOrder::default(),
            ma_window: 10,
            max_lag: 20,
            eval_holdout: 0.0,
            strictness: Strictness::Lenient,
            asin: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str, expected: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::TypeMismatch {
        key: key.to_owned(),
        value: value.to_owned(),
        expected: expected.to_owned(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(ConfigError::TypeMismatch {
            key: key.to_owned(),
            value: value.to_owned(),
            expected: "a boolean".into(),
        }),
    }
}

fn mismatch(key: &str, value: &str, expected: &str) -> ConfigError {
    ConfigError::TypeMismatch {
        key: key.to_owned(),
        value: value.to_owned(),
        expected: expected.to_owned(),
    }
}

impl PipelineConfig {
    /// Keys accepted by [`PipelineConfig::set`]; '-' and '_' are interchangeable.
    pub const KEYS: &'static [&'static str] = &[
        "reviews",
        "metadata",
        "scores",
        "score_field",
        "output_dir",
        "scorer",
        "lexicon",
        "max_length",
        "batch_size",
        "workers",
        "squash",
        "min_reviews",
        "require_price",
        "threshold_start",
        "threshold_stop",
        "threshold_step",
        "purchase_proxy",
        "pca_purchase_proxy",
        "variance_target",
        "test_fraction",
        "seed",
        "arima_order",
        "ma_window",
        "max_lag",
        "eval_holdout",
        "strictness",
        "asin",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let norm = key.trim().replace('-', "_");
        let k = norm.as_str();
        let v = value.trim();
        match k {
            "reviews" => self.reviews = Some(v.into()),
            "metadata" => self.metadata = Some(v.into()),
            "scores" => self.scores = Some(v.into()),
            "score_field" => self.score_field = v.to_owned(),
            "output_dir" => self.output_dir = v.into(),
            "scorer" => {
                self.scorer.kind = match v {
                    "lexicon" => ScorerKind::Lexicon,
                    "imported" => ScorerKind::Imported,
                    _ => return Err(mismatch(k, v, "lexicon or imported")),
                }
            }
            "lexicon" => self.lexicon_path = Some(v.into()),
            "max_length" => self.scorer.max_length = parse(k, v, "a positive integer")?,
            "batch_size" => self.scorer.batch_size = parse(k, v, "a positive integer")?,
            "workers" => self.scorer.workers = parse(k, v, "a positive integer")?,
            "squash" => self.scorer.squash = parse(k, v, "a positive number")?,
            "min_reviews" => self.min_reviews = parse(k, v, "a non-negative integer")?,
            "require_price" => self.require_price = parse_bool(k, v)?,
            "threshold_start" => self.threshold_grid.start = parse(k, v, "a number")?,
            "threshold_stop" => self.threshold_grid.stop = parse(k, v, "a number")?,
            "threshold_step" => self.threshold_grid.step = parse(k, v, "a positive number")?,
            "purchase_proxy" => self.purchase_proxy = parse(k, v, "verified_sum or review_count")?,
            "pca_purchase_proxy" => {
                self.pca_purchase_proxy = parse(k, v, "verified_sum or review_count")?
            }
            "variance_target" => self.variance_target = parse(k, v, "a number in (0, 1]")?,
            "test_fraction" => self.test_fraction = parse(k, v, "a number in [0, 1)")?,
            "seed" => self.seed = parse(k, v, "a non-negative integer")?,
            "arima_order" => {
                let parts: Vec<&str> = v.split(',').map(str::trim).collect();
                let nums: Option<Vec<usize>> = parts.iter().map(|p| p.parse().ok()).collect();
                self.arima_order = match nums.as_deref() {
                    Some(&[p, d, q]) => ArimaOrder::new(p, d, q)
                        .map_err(|_| mismatch(k, v, "p,d,q with p and q in {0, 1}"))?,
                    _ => return Err(mismatch(k, v, "p,d,q with p and q in {0, 1}")),
                };
            }
            "ma_window" => self.ma_window = parse(k, v, "a positive integer")?,
            "max_lag" => self.max_lag = parse(k, v, "a positive integer")?,
            "eval_holdout" => self.eval_holdout = parse(k, v, "a number in [0, 1)")?,
            "strictness" => {
                self.strictness = match v {
                    "lenient" => Strictness::Lenient,
                    "strict" => Strictness::Strict,
                    _ => return Err(mismatch(k, v, "lenient or strict")),
                }
            }
            "asin" => self.asin = (!v.is_empty()).then(|| v.to_owned()),
            _ => {
                return Err(ConfigError::UnknownKey {
                    key: key.trim().to_owned(),
                })
            }
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#`/`;` comments are
    /// skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    message: format!("expected `key = value`, got {line:?}"),
                });
            };
            self.set(key, value)?;
        }
        Ok(())
    }

    /// Defaults, then the file at `path` (if any), then `overrides` in order.
    pub fn load<K: AsRef<str>, V: AsRef<str>>(
        path: Option<&Path>,
        overrides: &[(K, V)],
    ) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| ConfigError::Io {
                path: p.to_owned(),
                message: e.to_string(),
            })?;
            cfg.apply_text(&text)?;
        }
        for (k, v) in overrides {
            cfg.set(k.as_ref(), v.as_ref())?;
        }
        cfg.finish()?;
        Ok(cfg)
    }

    /// Loads the lexicon file (if any) and checks value ranges.
    pub fn finish(&mut self) -> Result<(), ConfigError> {
        if let Some(p) = &self.lexicon_path {
            let text = std::fs::read_to_string(p).map_err(|e| ConfigError::Io {
                path: p.clone(),
                message: e.to_string(),
            })?;
            self.scorer.lexicon = parse_lexicon(&text).map_err(|m| ConfigError::Syntax {
                line: 0,
                message: m,
            })?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let range = |key: &str, v: f64, ok: bool, expected: &str| {
            if ok {
                Ok(())
            } else {
                Err(mismatch(key, &v.to_string(), expected))
            }
        };
        range(
            "variance_target",
            self.variance_target,
            self.variance_target > 0.0 && self.variance_target <= 1.0,
            "a number in (0, 1]",
        )?;
        range(
            "test_fraction",
            self.test_fraction,
            (0.0..1.0).contains(&self.test_fraction),
            "a number in [0, 1)",
        )?;
        range(
            "eval_holdout",
            self.eval_holdout,
            (0.0..1.0).contains(&self.eval_holdout),
            "a number in [0, 1)",
        )?;
        if self.max_lag == 0 {
            return Err(mismatch("max_lag", "0", "a positive integer"));
        }
        if self.ma_window == 0 {
            return Err(mismatch("ma_window", "0", "a positive integer"));
        }
        if let Err(e) = self.threshold_grid.points() {
            return Err(mismatch(
                "threshold_step",
                &self.threshold_grid.step.to_string(),
                &e.to_string(),
            ));
        }
        if let Err(e) = self.scorer.validate() {
            return Err(ConfigError::TypeMismatch {
                key: "scorer".into(),
                value: format!("{:?}", self.scorer.kind),
                expected: e.to_string(),
            });
        }
        Ok(())
    }

    pub fn pcr_options(&self) -> PcrOptions {
        PcrOptions {
            variance_target: self.variance_target,
            test_fraction: self.test_fraction,
            seed: self.seed,
        }
    }
}

/// The explicit path, else the one named by [`CONFIG_ENV`].
pub fn config_path(explicit: Option<&Path>) -> Option<PathBuf> {
    explicit.map(Path::to_path_buf).or_else(|| {
        std::env::var_os(CONFIG_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load_text(text: &str, overrides: &[(&str, &str)]) -> Result<PipelineConfig, ConfigError> {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(text)?;
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.finish()?;
        Ok(cfg)
    }

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = load_text("", &[]).unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert_eq!(cfg.min_reviews, 1100);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.variance_target, 0.95);
        assert_eq!(cfg.test_fraction, 0.2);
        assert_eq!(cfg.ma_window, 10);
        assert_eq!(cfg.arima_order, ArimaOrder { p: 1, d: 1, q: 1 });
        assert_eq!(
            cfg.threshold_grid,
            ThresholdGrid {
                start: -1.0,
                stop: 1.0,
                step: 0.1
            }
        );
    }

    #[test]
    fn overrides_win() {
        let cfg = load_text("# comment\nseed = 7\n", &[("seed", "9")]).unwrap();
        assert_eq!(cfg.seed, 9);
        let cfg = load_text("seed=7", &[]).unwrap();
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn errors_name_the_key() {
        let err = load_text("min_reviews=abc", &[]).unwrap_err();
        assert!(matches!(&err, ConfigError::TypeMismatch { key, .. } if key == "min_reviews"));
        assert!(err.to_string().contains("min_reviews"));
        assert!(err.is_usage());
        let err = load_text("frobnicate = 1", &[]).unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                key: "frobnicate".into()
            }
        );
        assert!(matches!(
            load_text("seed 7", &[]),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(load_text("variance_target = 1.5", &[]).is_err());
        assert!(load_text("arima_order = 2,1,1", &[]).is_err());
    }

    #[test]
    fn dashed_keys_and_enums() {
        let cfg = load_text(
            "min-reviews = 5\nrequire-price = no\npurchase_proxy = review_count\narima_order = 0, 1, 1\nstrictness = strict",
            &[],
        )
        .unwrap();
        assert_eq!(cfg.min_reviews, 5);
        assert!(!cfg.require_price);
        assert_eq!(cfg.purchase_proxy, PurchaseProxy::ReviewCount);
        assert_eq!(cfg.arima_order, ArimaOrder { p: 0, d: 1, q: 1 });
        assert_eq!(cfg.strictness, Strictness::Strict);
    }

    #[test]
    fn every_listed_key_is_accepted() {
        for key in PipelineConfig::KEYS {
            let mut cfg = PipelineConfig::default();
            assert!(
                !matches!(cfg.set(key, "x"), Err(ConfigError::UnknownKey { .. })),
                "{key}"
            );
        }
    }
}
