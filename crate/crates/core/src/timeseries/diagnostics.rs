//! Residual diagnostics: Ljung–Box, Jarque–Bera and the thirds-based
//! heteroskedasticity test.

use super::{acf, TsError};
use crate::analytics::distributions::{chi2_sf, f_cdf, f_sf};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LjungBoxResult {
    pub lags: usize,
    pub q: f64,
    pub p_value: f64,
}

/// Q = m(m+2)·Σ ρ̂_k²/(m−k), referred to χ² with `lags` degrees of freedom.
pub fn ljung_box(residuals: &[f64], lags: usize) -> Result<LjungBoxResult, TsError> {
    let m = residuals.len();
    if lags == 0 {
        return Err(TsError::InvalidArgument("lags must be >= 1".into()));
    }
    if m <= lags + 1 {
        return Err(TsError::TooShort(format!("{m} residuals for {lags} lags")));
    }
    let rho = acf(residuals, lags)?;
    let mf = m as f64;
    let q = mf
        * (mf + 2.0)
        * (1..=lags)
            .map(|k| rho[k] * rho[k] / (mf - k as f64))
            .sum::<f64>();
    Ok(LjungBoxResult {
        lags,
        q,
        p_value: chi2_sf(q, lags as f64),
    })
}

/// Centered power sums Σ(x−x̄)², Σ(x−x̄)³, Σ(x−x̄)⁴.
fn central_sums(x: &[f64]) -> (f64, f64, f64) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().fold((0.0, 0.0, 0.0), |(s2, s3, s4), v| {
        let d = v - mean;
        let d2 = d * d;
        (s2 + d2, s3 + d2 * d, s4 + d2 * d2)
    })
}

/// m₃/m₂^{3/2}.
pub fn skewness(x: &[f64]) -> Result<f64, TsError> {
    let (s2, s3, _) = central_sums(x);
    if s2 == 0.0 {
        return Err(TsError::ZeroVariance);
    }
    Ok((x.len() as f64).sqrt() * s3 / s2.powf(1.5))
}

/// m₄/m₂² (not excess).
pub fn kurtosis(x: &[f64]) -> Result<f64, TsError> {
    let (s2, _, s4) = central_sums(x);
    if s2 == 0.0 {
        return Err(TsError::ZeroVariance);
    }
    Ok(x.len() as f64 * s4 / (s2 * s2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JarqueBeraResult {
    pub skewness: f64,
    pub kurtosis: f64,
    pub jb: f64,
    pub p_value: f64,
}

pub fn jarque_bera(residuals: &[f64]) -> Result<JarqueBeraResult, TsError> {
    let n = residuals.len();
    if n < 8 {
        return Err(TsError::TooShort(format!(
            "Jarque-Bera needs >= 8 values, got {n}"
        )));
    }
    let s = skewness(residuals)?;
    let k = kurtosis(residuals)?;
    let jb = n as f64 / 6.0 * (s * s + (k - 3.0).powi(2) / 4.0);
    Ok(JarqueBeraResult {
        skewness: s,
        kurtosis: k,
        jb,
        p_value: chi2_sf(jb, 2.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeteroskedasticityResult {
    pub h: f64,
    /// Observations in each compared third.
    pub df: usize,
    /// Two-sided p-value against F(df, df).
    pub p_value: f64,
}

/// Ratio of the squared-residual sums of the last and first thirds.
pub fn heteroskedasticity_h(residuals: &[f64]) -> Result<HeteroskedasticityResult, TsError> {
    let n = residuals.len();
    if n < 9 {
        return Err(TsError::TooShort(format!(
            "heteroskedasticity test needs >= 9 values, got {n}"
        )));
    }
    let h = (n as f64 / 3.0).round() as usize;
    let first: f64 = residuals[..h].iter().map(|r| r * r).sum();
    let last: f64 = residuals[n - h..].iter().map(|r| r * r).sum();
    if first == 0.0 {
        return Err(TsError::ZeroVariance);
    }
    let stat = last / first;
    let df = h as f64;
    let p = 2.0 * f_sf(stat, df, df).min(f_cdf(stat, df, df));
    Ok(HeteroskedasticityResult {
        h: stat,
        df: h,
        p_value: p.clamp(0.0, 1.0),
    })
}
