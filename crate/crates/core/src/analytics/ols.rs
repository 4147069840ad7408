//! Ordinary least squares with classical inference statistics.

use std::fmt;

use super::distributions::{f_sf, t_sf_two_sided};
use super::AnalyticsError;
use crate::linalg::{Matrix, Qr};

/// Pivots below this fraction of their column norm mark a dependent column.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    /// Regressor names, `const` first when an intercept was added.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub f_statistic: f64,
    pub f_p_value: f64,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    /// RSS / n.
    pub mse: f64,
    pub n: usize,
    /// Number of estimated coefficients, intercept included.
    pub k: usize,
    pub has_intercept: bool,
}

impl OlsFit {
    pub fn df_resid(&self) -> usize {
        self.n - self.k
    }

    pub fn rss(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum()
    }

    /// Replaces the default `x1..xk` regressor names.
    pub fn with_names<S: AsRef<str>>(mut self, regressors: &[S]) -> Self {
        let offset = usize::from(self.has_intercept);
        for (slot, name) in self.names.iter_mut().skip(offset).zip(regressors) {
            *slot = name.as_ref().to_owned();
        }
        self
    }

    /// Predictions for rows of a design without the constant column.
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let offset = usize::from(self.has_intercept);
        (0..x.rows())
            .map(|r| {
                let mut v = if self.has_intercept {
                    self.coefficients[0]
                } else {
                    0.0
                };
                for (j, xv) in x.row(r).iter().enumerate() {
                    v += self.coefficients[offset + j] * xv;
                }
                v
            })
            .collect()
    }
}

/// Fits y on X (optionally with a leading constant) by Householder QR.
pub fn ols_fit(x: &Matrix, y: &[f64], add_intercept: bool) -> Result<OlsFit, AnalyticsError> {
    let n = x.rows();
    if y.len() != n {
        return Err(AnalyticsError::Invalid(format!(
            "design has {n} rows but y has {} entries",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(AnalyticsError::Invalid(
            "y contains non-finite values".into(),
        ));
    }
    let design = if add_intercept {
        Matrix::hconcat(&[Matrix::new(n, 1, vec![1.0; n])?, x.clone()])?
    } else {
        x.clone()
    };
    let k = design.cols();
    let mut names = Vec::with_capacity(k);
    if add_intercept {
        names.push("const".to_owned());
    }
    names.extend((1..=x.cols()).map(|j| format!("x{j}")));
    if n <= k {
        return Err(AnalyticsError::Invalid(format!(
            "need more observations than coefficients (n = {n}, k = {k})"
        )));
    }

    let qr = Qr::new(&design)?;
    let dependent = qr.dependent_columns(RANK_TOL);
    if !dependent.is_empty() {
        return Err(AnalyticsError::SingularDesign {
            columns: dependent.iter().map(|&j| names[j].clone()).collect(),
        });
    }
    let beta = qr.least_squares(y);
    let fitted = design.mat_vec(&beta)?;
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let df_resid = (n - k) as f64;
    let sigma2 = rss / df_resid;
    let cov = qr.gram_inverse();
    let standard_errors: Vec<f64> = (0..k).map(|j| (sigma2 * cov.get(j, j)).sqrt()).collect();
    let t_stats: Vec<f64> = beta
        .iter()
        .zip(&standard_errors)
        .map(|(b, se)| b / se)
        .collect();
    let p_values = t_stats
        .iter()
        .map(|&t| t_sf_two_sided(t, df_resid))
        .collect();

    let tss = if add_intercept {
        let mean = y.iter().sum::<f64>() / n as f64;
        y.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
    } else {
        y.iter().map(|v| v * v).sum::<f64>()
    };
    let r_squared = if tss == 0.0 {
        f64::NAN
    } else {
        1.0 - rss / tss
    };
    let df_model = (k - usize::from(add_intercept)) as f64;
    let centered = usize::from(add_intercept) as f64;
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n as f64 - centered) / df_resid;
    let (f_statistic, f_p_value) = if df_model > 0.0 {
        let f = ((tss - rss) / df_model) / (rss / df_resid);
        (f, f_sf(f, df_model, df_resid))
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(OlsFit {
        names,
        coefficients: beta,
        standard_errors,
        t_stats,
        p_values,
        r_squared,
        adj_r_squared,
        f_statistic,
        f_p_value,
        residuals,
        fitted,
        mse: rss / n as f64,
        n,
        k,
        has_intercept: add_intercept,
    })
}

impl fmt::Display for OlsFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = "=".repeat(66);
        writeln!(f, "{rule}")?;
        writeln!(f, "OLS Regression Results")?;
        writeln!(f, "{rule}")?;
        writeln!(
            f,
            "No. Observations: {:>10}    R-squared:      {:>10.3}",
            self.n, self.r_squared
        )?;
        writeln!(
            f,
            "Df Residuals:     {:>10}    Adj. R-squared: {:>10.3}",
            self.df_resid(),
            self.adj_r_squared
        )?;
        writeln!(
            f,
            "Df Model:         {:>10}    F-statistic:    {:>10.4}",
            self.k - usize::from(self.has_intercept),
            self.f_statistic
        )?;
        writeln!(
            f,
            "MSE (RSS/n):      {:>10.4}    Prob (F):       {:>10.4}",
            self.mse, self.f_p_value
        )?;
        writeln!(f, "{}", "-".repeat(66))?;
        let w = self
            .names
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(0)
            .max(14);
        writeln!(
            f,
            "{:<w$} {:>12} {:>12} {:>10} {:>10}",
            "", "coef", "std err", "t", "P>|t|"
        )?;
        writeln!(f, "{}", "-".repeat(66))?;
        for i in 0..self.k {
            writeln!(
                f,
                "{:<w$} {:>12.4} {:>12.4} {:>10.3} {:>10.3}",
                self.names[i],
                self.coefficients[i],
                self.standard_errors[i],
                self.t_stats[i],
                self.p_values[i]
            )?;
        }
        write!(f, "{rule}")
    }
}
