//! ARIMA(p,d,q) with p, q ≤ 1, estimated by conditional sum of squares.

use std::fmt;

use super::diagnostics::{
    heteroskedasticity_h, jarque_bera, ljung_box, HeteroskedasticityResult, JarqueBeraResult,
    LjungBoxResult,
};
use super::optimize::{nelder_mead, NelderMeadOptions};
use super::{difference, TsError};
use crate::analytics::distributions::normal_sf_two_sided;

/// Coefficients are searched inside (−BOUND, BOUND).
const BOUND: f64 = 0.999;
const START: f64 = 0.1;
/// Multistart grid: −0.95, −0.90, …, 0.95 per coordinate.
const GRID_HALF_SPAN: f64 = 0.95;
const GRID_STEP: f64 = 0.05;
const HESSIAN_STEP: f64 = 1e-4;
const MIN_EFFECTIVE_LEN: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    pub fn new(p: usize, d: usize, q: usize) -> Result<Self, TsError> {
        if p > 1 || q > 1 {
            return Err(TsError::InvalidArgument(format!(
                "only p, q in {{0, 1}} are supported, got ({p},{d},{q})"
            )));
        }
        Ok(Self { p, d, q })
    }

    fn n_params(&self) -> usize {
        self.p + self.q
    }
}

impl Default for ArimaOrder {
    fn default() -> Self {
        Self { p: 1, d: 1, q: 1 }
    }
}

impl fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.p, self.d, self.q)
    }
}

/// Estimate with Hessian-based inference; the inference fields are `None`
/// when the curvature at the optimum is not positive.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientStats {
    pub name: String,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArimaFit {
    pub order: ArimaOrder,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub sigma2: f64,
    pub sigma2_std_error: f64,
    /// One entry per φ then θ.
    pub coefficients: Vec<CoefficientStats>,
    pub residuals: Vec<f64>,
    /// Residual sum of squares at the estimate.
    pub css: f64,
    /// Set when an estimate sits on the search bound, i.e. the fit is at the
    /// edge of the stationary/invertible region.
    pub bound_warning: bool,
    pub ljung_box: LjungBoxResult,
    pub jarque_bera: JarqueBeraResult,
    pub heteroskedasticity: HeteroskedasticityResult,
}

impl ArimaFit {
    pub fn skewness(&self) -> f64 {
        self.jarque_bera.skewness
    }

    pub fn kurtosis(&self) -> f64 {
        self.jarque_bera.kurtosis
    }

    pub fn n_obs(&self) -> usize {
        self.residuals.len()
    }
}

/// Residuals ε_t = x_t − φx_{t−1} − θε_{t−1} for t ≥ p, with ε_{p−1} = 0.
fn css_residuals(x: &[f64], order: ArimaOrder, params: &[f64]) -> Vec<f64> {
    let phi = if order.p == 1 { params[0] } else { 0.0 };
    let theta = if order.q == 1 { params[order.p] } else { 0.0 };
    let mut prev = 0.0;
    x.iter()
        .enumerate()
        .skip(order.p)
        .map(|(t, &xt)| {
            let ar = if order.p == 1 { phi * x[t - 1] } else { 0.0 };
            let e = xt - ar - theta * prev;
            prev = e;
            e
        })
        .collect()
}

/// Conditional residual sum of squares of the (already differenced) series
/// `x` at `params` = [φ if p = 1, θ if q = 1].
pub fn css_objective(x: &[f64], order: ArimaOrder, params: &[f64]) -> f64 {
    css_residuals(x, order, params).iter().map(|e| e * e).sum()
}

fn grid_points(dim: usize) -> Vec<Vec<f64>> {
    let steps = (2.0 * GRID_HALF_SPAN / GRID_STEP).round() as usize;
    let axis: Vec<f64> = (0..=steps)
        .map(|i| -GRID_HALF_SPAN + GRID_STEP * i as f64)
        .collect();
    let mut points = vec![Vec::new()];
    for _ in 0..dim {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    points
}

/// Central-difference Hessian of `f` at `x`.
fn hessian<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let k = x.len();
    let at = |di: usize, si: f64, dj: usize, sj: f64| {
        let mut y = x.to_vec();
        y[di] += si * h;
        y[dj] += sj * h;
        f(&y)
    };
    let mut out = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let v = if i == j {
                let mut up = x.to_vec();
                let mut down = x.to_vec();
                up[i] += h;
                down[i] -= h;
                (f(&up) - 2.0 * f(x) + f(&down)) / (h * h)
            } else {
                (at(i, 1.0, j, 1.0) - at(i, 1.0, j, -1.0) - at(i, -1.0, j, 1.0)
                    + at(i, -1.0, j, -1.0))
                    / (4.0 * h * h)
            };
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

/// Inverse of a 1×1 or 2×2 positive-definite matrix.
fn invert_small_pd(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    match m.len() {
        1 if m[0][0] > 0.0 => Some(vec![vec![1.0 / m[0][0]]]),
        2 => {
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            (m[0][0] > 0.0 && det > 0.0).then(|| {
                vec![
                    vec![m[1][1] / det, -m[0][1] / det],
                    vec![-m[1][0] / det, m[0][0] / det],
                ]
            })
        }
        _ => None,
    }
}

/// Fits ARIMA by CSS on the raw (undifferenced) `values`, in index order.
///
/// The minimizer is Nelder–Mead from 0.1 in each coordinate, restarted from
/// the best point of a 0.05-spaced grid; the lower of the two wins.
pub fn arima_fit(values: &[f64], order: ArimaOrder) -> Result<ArimaFit, TsError> {
    let order = ArimaOrder::new(order.p, order.d, order.q)?;
    if values.len() < order.d + MIN_EFFECTIVE_LEN {
        return Err(TsError::TooShort(format!(
            "ARIMA needs n - d >= {MIN_EFFECTIVE_LEN}, got n = {}, d = {}",
            values.len(),
            order.d
        )));
    }
    let x = difference(values, order.d)?;
    let k = order.n_params();
    let objective = |params: &[f64]| css_objective(&x, order, params);

    let params: Vec<f64> = if k == 0 {
        Vec::new()
    } else {
        let opts = NelderMeadOptions {
            initial_step: START,
            lower: -BOUND,
            upper: BOUND,
            tolerance: 1e-10,
            max_iter: 4000,
        };
        let from_start = nelder_mead(objective, &vec![START; k], opts);
        let grid_best = grid_points(k)
            .into_iter()
            .map(|p| {
                let v = objective(&p);
                (p, v)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(p, _)| p)
            .unwrap_or_else(|| vec![START; k]);
        let from_grid = nelder_mead(objective, &grid_best, opts);
        if from_grid.value < from_start.value {
            from_grid.x
        } else {
            from_start.x
        }
    };

    let residuals = css_residuals(&x, order, &params);
    let m = residuals.len();
    let css: f64 = residuals.iter().map(|e| e * e).sum();
    if css <= 0.0 {
        return Err(TsError::ZeroVariance);
    }
    let sigma2 = css / m as f64;

    let names = (0..order.p)
        .map(|_| "ar.L1")
        .chain((0..order.q).map(|_| "ma.L1"));
    let cov = (k > 0)
        .then(|| invert_small_pd(&hessian(objective, &params, HESSIAN_STEP)))
        .flatten();
    let coefficients = names
        .zip(&params)
        .enumerate()
        .map(|(i, (name, &estimate))| {
            let std_error = cov
                .as_ref()
                .map(|c| (2.0 * sigma2 * c[i][i]).sqrt())
                .filter(|s| s.is_finite() && *s > 0.0);
            let z = std_error.map(|s| estimate / s);
            CoefficientStats {
                name: name.to_string(),
                estimate,
                std_error,
                z,
                p_value: z.map(normal_sf_two_sided),
            }
        })
        .collect();

    let bound_warning = params.iter().any(|v| v.abs() >= BOUND - 1e-9);
    Ok(ArimaFit {
        order,
        phi: params[..order.p].to_vec(),
        theta: params[order.p..].to_vec(),
        sigma2,
        sigma2_std_error: sigma2 * (2.0 / m as f64).sqrt(),
        coefficients,
        ljung_box: ljung_box(&residuals, 1)?,
        jarque_bera: jarque_bera(&residuals)?,
        heteroskedasticity: heteroskedasticity_h(&residuals)?,
        residuals,
        css,
        bound_warning,
    })
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:.prec$}"))
}

impl fmt::Display for ArimaFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = "=".repeat(66);
        let thin = "-".repeat(66);
        writeln!(f, "{:^66}", "ARIMA Results (conditional sum of squares)")?;
        writeln!(f, "{rule}")?;
        writeln!(f, "{:<22}{:>44}", "Model:", format!("ARIMA{}", self.order))?;
        writeln!(f, "{:<22}{:>44}", "No. Observations:", self.n_obs())?;
        writeln!(f, "{:<22}{:>44.6}", "CSS:", self.css)?;
        writeln!(f, "{rule}")?;
        writeln!(
            f,
            "{:<10}{:>12}{:>12}{:>12}{:>12}",
            "", "coef", "std err", "z", "P>|z|"
        )?;
        writeln!(f, "{thin}")?;
        for c in &self.coefficients {
            writeln!(
                f,
                "{:<10}{:>12.4}{:>12}{:>12}{:>12}",
                c.name,
                c.estimate,
                opt(c.std_error, 4),
                opt(c.z, 3),
                opt(c.p_value, 3)
            )?;
        }
        writeln!(
            f,
            "{:<10}{:>12.4}{:>12.4}{:>12}{:>12}",
            "sigma2", self.sigma2, self.sigma2_std_error, "", ""
        )?;
        writeln!(f, "{rule}")?;
        let lb = &self.ljung_box;
        let jb = &self.jarque_bera;
        let h = &self.heteroskedasticity;
        writeln!(
            f,
            "{:<26}{:>7.2}   {:<22}{:>8.2}",
            format!("Ljung-Box (L{}) (Q):", lb.lags),
            lb.q,
            "Jarque-Bera (JB):",
            jb.jb
        )?;
        writeln!(
            f,
            "{:<26}{:>7.2}   {:<22}{:>8.2}",
            "Prob(Q):", lb.p_value, "Prob(JB):", jb.p_value
        )?;
        writeln!(
            f,
            "{:<26}{:>7.2}   {:<22}{:>8.2}",
            "Heteroskedasticity (H):", h.h, "Skew:", jb.skewness
        )?;
        writeln!(
            f,
            "{:<26}{:>7.2}   {:<22}{:>8.2}",
            "Prob(H) (two-sided):", h.p_value, "Kurtosis:", jb.kurtosis
        )?;
        writeln!(f, "{rule}")?;
        writeln!(
            f,
            "Observations are taken in event order; irregular time spacing is ignored."
        )?;
        if self.bound_warning {
            writeln!(
                f,
                "Warning: an estimate lies on the search bound ±{BOUND}; the fit may be non-stationary or non-invertible."
            )?;
        }
        Ok(())
    }
}
