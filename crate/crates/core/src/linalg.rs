//! Small dense row-major matrices and the factorizations the statistics
//! modules need: Householder QR for least squares and cyclic Jacobi for
//! symmetric eigenproblems.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    EmptyShape { rows: usize, cols: usize },
    #[error("expected {expected} entries for the given shape, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("ragged rows: row {row} has {len} entries, expected {expected}")]
    Ragged {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Dense row-major matrix of finite reals.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError::EmptyShape { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(MatrixError::LengthMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(MatrixError::NonFinite {
                row: i / cols,
                col: i % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(MatrixError::Ragged {
                    row: i,
                    len: r.len(),
                    expected: cols,
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Builds a matrix from columns of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let rows = columns.first().map_or(0, Vec::len);
        let cols = columns.len();
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(MatrixError::Ragged {
                    row: j,
                    len: c.len(),
                    expected: rows,
                });
            }
        }
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                data[i * cols + j] = *v;
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, MatrixError> {
        if self.cols != other.rows {
            return Err(MatrixError::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, v: &[f64]) -> Result<Vec<f64>, MatrixError> {
        if self.cols != v.len() {
            return Err(MatrixError::Dimension(format!(
                "cannot multiply {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Concatenates matrices with equal row counts side by side.
    pub fn hconcat(parts: &[Matrix]) -> Result<Matrix, MatrixError> {
        let rows = parts
            .first()
            .map(|m| m.rows)
            .ok_or_else(|| MatrixError::Dimension("nothing to concatenate".into()))?;
        if let Some(bad) = parts.iter().find(|m| m.rows != rows) {
            return Err(MatrixError::Dimension(format!(
                "cannot concatenate {} rows with {} rows",
                rows, bad.rows
            )));
        }
        let cols: usize = parts.iter().map(|m| m.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for m in parts {
                data.extend_from_slice(m.row(r));
            }
        }
        Ok(Matrix { rows, cols, data })
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

/// Householder QR of an n x p matrix (n >= p), kept in compact form.
#[derive(Debug, Clone)]
pub struct Qr {
    n: usize,
    p: usize,
    /// Upper triangle holds R; the Householder vectors live below the diagonal.
    packed: Vec<f64>,
    /// Leading entries of the Householder vectors.
    v_head: Vec<f64>,
    /// Euclidean norm of each original column, for rank decisions.
    col_norms: Vec<f64>,
}

impl Qr {
    pub fn new(a: &Matrix) -> Result<Qr, MatrixError> {
        let (n, p) = (a.rows, a.cols);
        if n < p {
            return Err(MatrixError::Dimension(format!(
                "QR needs rows >= cols, got {n}x{p}"
            )));
        }
        let col_norms = (0..p)
            .map(|j| (0..n).map(|i| a.get(i, j).powi(2)).sum::<f64>().sqrt())
            .collect();
        let mut m = a.data.clone();
        let mut v_head = vec![0.0; p];
        for k in 0..p {
            let norm = (k..n).map(|i| m[i * p + k].powi(2)).sum::<f64>().sqrt();
            if norm == 0.0 {
                v_head[k] = 0.0;
                continue;
            }
            let alpha = if m[k * p + k] > 0.0 { -norm } else { norm };
            // v = x - alpha e1, stored with head separately
            let head = m[k * p + k] - alpha;
            let vnorm2 = head * head + ((k + 1)..n).map(|i| m[i * p + k].powi(2)).sum::<f64>();
            v_head[k] = head;
            m[k * p + k] = alpha;
            if vnorm2 == 0.0 {
                continue;
            }
            for j in (k + 1)..p {
                let mut dot = head * m[k * p + j];
                for i in (k + 1)..n {
                    dot += m[i * p + k] * m[i * p + j];
                }
                let s = 2.0 * dot / vnorm2;
                m[k * p + j] -= s * head;
                for i in (k + 1)..n {
                    m[i * p + j] -= s * m[i * p + k];
                }
            }
        }
        Ok(Qr {
            n,
            p,
            packed: m,
            v_head,
            col_norms,
        })
    }

    pub fn r_diag(&self, j: usize) -> f64 {
        self.packed[j * self.p + j]
    }

    /// Columns whose pivot is negligible relative to the column's own norm.
    pub fn dependent_columns(&self, rel_tol: f64) -> Vec<usize> {
        (0..self.p)
            .filter(|&j| {
                let scale = self.col_norms[j];
                scale == 0.0 || self.r_diag(j).abs() <= rel_tol * scale
            })
            .collect()
    }

    /// Applies Qᵀ to a vector of length n.
    pub fn qt_mul(&self, y: &[f64]) -> Vec<f64> {
        let (n, p) = (self.n, self.p);
        let mut b = y.to_vec();
        for k in 0..p {
            let head = self.v_head[k];
            let tail: f64 = ((k + 1)..n).map(|i| self.packed[i * p + k].powi(2)).sum();
            let vnorm2 = head * head + tail;
            if vnorm2 == 0.0 {
                continue;
            }
            let mut dot = head * b[k];
            for i in (k + 1)..n {
                dot += self.packed[i * p + k] * b[i];
            }
            let s = 2.0 * dot / vnorm2;
            b[k] -= s * head;
            for i in (k + 1)..n {
                b[i] -= s * self.packed[i * p + k];
            }
        }
        b
    }

    /// Solves R x = rhs[..p] by back substitution.
    pub fn solve_r(&self, rhs: &[f64]) -> Vec<f64> {
        let p = self.p;
        let mut x = vec![0.0; p];
        for i in (0..p).rev() {
            let mut s = rhs[i];
            for j in (i + 1)..p {
                s -= self.packed[i * p + j] * x[j];
            }
            x[i] = s / self.packed[i * p + i];
        }
        x
    }

    /// Least-squares solution of A x ≈ y.
    pub fn least_squares(&self, y: &[f64]) -> Vec<f64> {
        let qty = self.qt_mul(y);
        self.solve_r(&qty[..self.p])
    }

    /// (AᵀA)⁻¹ = R⁻¹ R⁻ᵀ.
    pub fn gram_inverse(&self) -> Matrix {
        let p = self.p;
        // columns of R⁻¹ via back substitution on unit vectors
        let mut rinv = Matrix::zeros(p, p);
        for j in 0..p {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            let col = self.solve_r(&e);
            for (i, v) in col.into_iter().enumerate() {
                rinv.set(i, j, v);
            }
        }
        let mut out = Matrix::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                let s: f64 = (0..p).map(|k| rinv.get(i, k) * rinv.get(j, k)).sum();
                out.set(i, j, s);
            }
        }
        out
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues sorted descending with eigenvectors as the matching
/// rows of the returned matrix.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix), MatrixError> {
    let n = a.rows;
    if a.cols != n {
        return Err(MatrixError::Dimension(format!(
            "eigen-decomposition needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let scale: f64 = m
        .data
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j).powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(j, j).total_cmp(&m.get(i, i)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (row, &i) in order.iter().enumerate() {
        for k in 0..n {
            vectors.set(row, k, v.get(k, i));
        }
    }
    Ok((values, vectors))
}
