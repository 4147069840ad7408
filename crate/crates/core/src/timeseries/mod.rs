//! Per-product sentiment series: moving averages, ACF/PACF, differencing,
//! CSS-estimated ARIMA and residual diagnostics.
//!
//! Series are indexed by event order; irregular spacing between reviews is
//! ignored.

mod arima;
mod diagnostics;
pub mod optimize;

use thiserror::Error;

use crate::ingest::EnrichedReview;

pub use arima::{arima_fit, css_objective, ArimaFit, ArimaOrder, CoefficientStats};
pub use diagnostics::{
    heteroskedasticity_h, jarque_bera, kurtosis, ljung_box, skewness, HeteroskedasticityResult,
    JarqueBeraResult, LjungBoxResult,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TsError {
    #[error("series too short: {0}")]
    TooShort(String),
    #[error("constant series: autocorrelation undefined")]
    Constant,
    #[error("zero variance")]
    ZeroVariance,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Sentiment scores of one product in timestamp order.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentSeries {
    pub times: Vec<i64>,
    pub values: Vec<f64>,
}

impl SentimentSeries {
    /// Sorts by time; equal timestamps keep their input order.
    pub fn new(times: Vec<i64>, values: Vec<f64>) -> Result<Self, TsError> {
        if times.len() != values.len() {
            return Err(TsError::InvalidArgument(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        let mut pairs: Vec<(i64, f64)> = times.into_iter().zip(values).collect();
        pairs.sort_by_key(|p| p.0);
        let (times, values) = pairs.into_iter().unzip();
        Ok(Self { times, values })
    }

    /// Scored reviews of `asin`; unscored rows are skipped.
    pub fn from_reviews(rows: &[EnrichedReview], asin: &str) -> Result<Self, TsError> {
        let (times, values) = rows
            .iter()
            .filter(|r| r.parent_asin == asin)
            .filter_map(|r| r.sentiment_score.map(|s| (r.timestamp, s)))
            .unzip();
        Self::new(times, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Trailing mean over at most `window` values; `None` until `min_periods`
/// values are available.
pub fn moving_average(
    values: &[f64],
    window: usize,
    min_periods: usize,
) -> Result<Vec<Option<f64>>, TsError> {
    if window == 0 || min_periods == 0 || min_periods > window {
        return Err(TsError::InvalidArgument(format!(
            "need 1 <= min_periods <= window, got window {window}, min_periods {min_periods}"
        )));
    }
    Ok((0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let slice = &values[lo..=i];
            (slice.len() >= min_periods).then(|| slice.iter().sum::<f64>() / slice.len() as f64)
        })
        .collect())
}

/// Sample autocorrelations ρ_0..ρ_max_lag (ρ_0 = 1).
pub fn acf(values: &[f64], max_lag: usize) -> Result<Vec<f64>, TsError> {
    let n = values.len();
    if n <= max_lag {
        return Err(TsError::TooShort(format!(
            "length {n} must exceed max_lag {max_lag}"
        )));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if denom == 0.0 {
        return Err(TsError::Constant);
    }
    Ok((0..=max_lag)
        .map(|k| {
            if k == 0 {
                1.0
            } else {
                dev.iter().zip(&dev[k..]).map(|(a, b)| a * b).sum::<f64>() / denom
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pacf {
    /// Partial autocorrelations at lags 1..=max_lag.
    pub coefficients: Vec<f64>,
    /// 1.96/√n band for white noise.
    pub confidence_halfwidth: f64,
}

/// Partial autocorrelations by the Durbin–Levinson recursion on the ACF.
pub fn pacf(values: &[f64], max_lag: usize) -> Result<Pacf, TsError> {
    let n = values.len();
    if max_lag == 0 {
        return Err(TsError::InvalidArgument("max_lag must be >= 1".into()));
    }
    if 2 * max_lag >= n {
        return Err(TsError::TooShort(format!(
            "max_lag {max_lag} must be below n/2 = {}",
            n as f64 / 2.0
        )));
    }
    let rho = acf(values, max_lag)?;
    let coefficients = durbin_levinson(&rho);
    Ok(Pacf {
        coefficients,
        confidence_halfwidth: 1.96 / (n as f64).sqrt(),
    })
}

/// φ_kk for k = 1..len(rho)−1 from autocorrelations `rho` (rho[0] = 1).
pub fn durbin_levinson(rho: &[f64]) -> Vec<f64> {
    let m = rho.len().saturating_sub(1);
    let mut out = Vec::with_capacity(m);
    let mut phi: Vec<f64> = Vec::with_capacity(m);
    let mut v = 1.0;
    for k in 1..=m {
        let acc: f64 = phi
            .iter()
            .enumerate()
            .map(|(j, p)| p * rho[k - 1 - j])
            .sum();
        let kk = (rho[k] - acc) / v;
        let next: Vec<f64> = phi
            .iter()
            .enumerate()
            .map(|(j, p)| p - kk * phi[k - 2 - j])
            .chain(std::iter::once(kk))
            .collect();
        phi = next;
        v *= 1.0 - kk * kk;
        out.push(kk);
    }
    out
}

/// Applies x_t − x_{t−1} `d` times.
pub fn difference(values: &[f64], d: usize) -> Result<Vec<f64>, TsError> {
    if values.len() <= d {
        return Err(TsError::TooShort(format!(
            "length {} must exceed differencing order {d}",
            values.len()
        )));
    }
    let mut out = values.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}
