//! Standardization and principal component analysis.

use super::AnalyticsError;
use crate::linalg::{symmetric_eigen, Matrix};

/// Cumulative-ratio comparisons allow this much rounding slack.
const CUMULATIVE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub z: Matrix,
    pub means: Vec<f64>,
    /// Population standard deviations (divisor n).
    pub stds: Vec<f64>,
    /// Columns with zero variance; their z-scores are all 0.
    pub constant_columns: Vec<usize>,
}

impl Standardized {
    /// Maps z-scores back to the original scale.
    pub fn inverse(&self, z: &Matrix) -> Matrix {
        let mut out = z.clone();
        for r in 0..z.rows() {
            for c in 0..z.cols() {
                out.set(r, c, z.get(r, c) * self.stds[c] + self.means[c]);
            }
        }
        out
    }
}

pub fn column_means(x: &Matrix) -> Vec<f64> {
    let n = x.rows() as f64;
    (0..x.cols())
        .map(|c| (0..x.rows()).map(|r| x.get(r, c)).sum::<f64>() / n)
        .collect()
}

/// Column-wise (x − mean)/std with the population std.
pub fn standardize(x: &Matrix) -> Result<Standardized, AnalyticsError> {
    let n = x.rows();
    if n < 2 {
        return Err(AnalyticsError::Invalid(format!(
            "standardize needs n >= 2, got {n}"
        )));
    }
    let means = column_means(x);
    let stds: Vec<f64> = (0..x.cols())
        .map(|c| {
            let var = (0..n)
                .map(|r| (x.get(r, c) - means[c]).powi(2))
                .sum::<f64>()
                / n as f64;
            var.sqrt()
        })
        .collect();
    // a column is constant when its spread is at rounding level
    let constant_columns: Vec<usize> = (0..x.cols())
        .filter(|&c| stds[c] <= 1e-14 * means[c].abs().max(1.0))
        .collect();
    let mut z = Matrix::zeros(n, x.cols());
    for r in 0..n {
        for c in 0..x.cols() {
            if !constant_columns.contains(&c) {
                z.set(r, c, (x.get(r, c) - means[c]) / stds[c]);
            }
        }
    }
    Ok(Standardized {
        z,
        means,
        stds,
        constant_columns,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    /// Column means subtracted before projection.
    pub feature_means: Vec<f64>,
    /// Population standard deviations of the input columns.
    pub feature_stds: Vec<f64>,
    /// Principal directions as orthonormal rows, by decreasing variance.
    pub components: Matrix,
    /// Sample-covariance eigenvalues, matching `components`.
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub k_retained: usize,
}

impl PcaModel {
    /// Projects rows of `z` onto the first `k` components.
    pub fn project(&self, z: &Matrix, k: usize) -> Result<Matrix, AnalyticsError> {
        let d = self.feature_means.len();
        if z.cols() != d {
            return Err(AnalyticsError::Invalid(format!(
                "expected {d} columns, got {}",
                z.cols()
            )));
        }
        let k = k.min(d);
        let mut out = Matrix::zeros(z.rows(), k);
        for r in 0..z.rows() {
            for j in 0..k {
                let s: f64 = (0..d)
                    .map(|c| (z.get(r, c) - self.feature_means[c]) * self.components.get(j, c))
                    .sum();
                out.set(r, j, s);
            }
        }
        Ok(out)
    }

    /// Projection onto the retained components.
    pub fn transform(&self, z: &Matrix) -> Result<Matrix, AnalyticsError> {
        self.project(z, self.k_retained)
    }

    /// Maps component scores (first `scores.cols()` components) back.
    pub fn reconstruct(&self, scores: &Matrix) -> Matrix {
        let d = self.feature_means.len();
        let k = scores.cols();
        let mut out = Matrix::zeros(scores.rows(), d);
        for r in 0..scores.rows() {
            for c in 0..d {
                let s: f64 = (0..k)
                    .map(|j| scores.get(r, j) * self.components.get(j, c))
                    .sum();
                out.set(r, c, s + self.feature_means[c]);
            }
        }
        out
    }
}

/// Smallest k whose cumulative ratio reaches `target`.
pub fn components_for_target(ratios: &[f64], target: f64) -> usize {
    let mut cum = 0.0;
    for (i, r) in ratios.iter().enumerate() {
        cum += r;
        if cum >= target - CUMULATIVE_SLACK {
            return i + 1;
        }
    }
    ratios.len()
}

/// Eigen-decomposition of the sample covariance of `z`.
///
/// Each component is sign-fixed so its largest-magnitude entry is positive.
pub fn pca_fit(z: &Matrix, variance_target: f64) -> Result<PcaModel, AnalyticsError> {
    let (n, d) = (z.rows(), z.cols());
    if n < 2 {
        return Err(AnalyticsError::Invalid(format!(
            "PCA needs n >= 2, got {n}"
        )));
    }
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(AnalyticsError::Invalid(format!(
            "variance target {variance_target} outside (0, 1]"
        )));
    }
    let means = column_means(z);
    let mut cov = Matrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let s: f64 = (0..n)
                .map(|r| (z.get(r, a) - means[a]) * (z.get(r, b) - means[b]))
                .sum::<f64>()
                / (n - 1) as f64;
            cov.set(a, b, s);
            cov.set(b, a, s);
        }
    }
    let stds = (0..d)
        .map(|c| (cov.get(c, c) * (n - 1) as f64 / n as f64).sqrt())
        .collect();
    let (values, mut vectors) = symmetric_eigen(&cov)?;
    let values: Vec<f64> = values.into_iter().map(|v| v.max(0.0)).collect();
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Err(AnalyticsError::Invalid(
            "all columns are constant; PCA undefined".into(),
        ));
    }
    for j in 0..d {
        let mut lead = 0;
        for c in 1..d {
            if vectors.get(j, c).abs() > vectors.get(j, lead).abs() {
                lead = c;
            }
        }
        if vectors.get(j, lead) < 0.0 {
            for c in 0..d {
                vectors.set(j, c, -vectors.get(j, c));
            }
        }
    }
    let ratios: Vec<f64> = values.iter().map(|v| v / total).collect();
    let k_retained = components_for_target(&ratios, variance_target);
    Ok(PcaModel {
        feature_means: means,
        feature_stds: stds,
        components: vectors,
        explained_variance: values,
        explained_variance_ratio: ratios,
        k_retained,
    })
}
