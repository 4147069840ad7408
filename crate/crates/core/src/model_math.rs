//! Forward-only transformer building blocks and BERT pre-training losses at
//! toy dimensions.
//!
//! Reference architecture constants are documented, not enforced.

use thiserror::Error;

use crate::linalg::{Matrix, MatrixError};

pub use crate::linalg::Matrix as RealMatrix;

/// Encoder layers of the reference architecture.
pub const REFERENCE_LAYERS: usize = 6;
/// Model width of the reference architecture.
pub const REFERENCE_D_MODEL: usize = 512;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelMathError {
    #[error(transparent)]
    Shape(#[from] MatrixError),
    #[error("invalid probability input: {0}")]
    Probability(String),
    #[error("loss is infinite: {0}")]
    InfiniteLoss(String),
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// softmax(QKᵀ/√d_k)·V with a row-wise softmax.
pub fn attention(q: &Matrix, k: &Matrix, v: &Matrix) -> Result<Matrix, ModelMathError> {
    if q.cols() != k.cols() {
        return Err(MatrixError::Dimension(format!(
            "query width {} != key width {}",
            q.cols(),
            k.cols()
        ))
        .into());
    }
    if k.rows() != v.rows() {
        return Err(
            MatrixError::Dimension(format!("{} keys but {} values", k.rows(), v.rows())).into(),
        );
    }
    let scale = 1.0 / (q.cols() as f64).sqrt();
    let mut out = Matrix::zeros(q.rows(), v.cols());
    for i in 0..q.rows() {
        let qi = q.row(i);
        let scores: Vec<f64> = (0..k.rows())
            .map(|j| qi.iter().zip(k.row(j)).map(|(a, b)| a * b).sum::<f64>() * scale)
            .collect();
        let w = softmax(&scores);
        for (j, wj) in w.iter().enumerate() {
            for c in 0..v.cols() {
                out.set(i, c, out.get(i, c) + wj * v.get(j, c));
            }
        }
    }
    Ok(out)
}

/// Projection matrices of one attention head.
#[derive(Debug, Clone)]
pub struct HeadProjection {
    pub w_q: Matrix,
    pub w_k: Matrix,
    pub w_v: Matrix,
}

/// Concat(head_1..head_h)·W_O with head_i = attention(XW_Qi, XW_Ki, XW_Vi).
pub fn multi_head(
    x: &Matrix,
    heads: &[HeadProjection],
    w_o: &Matrix,
) -> Result<Matrix, ModelMathError> {
    if heads.is_empty() {
        return Err(MatrixError::Dimension("at least one head is required".into()).into());
    }
    let outputs = heads
        .iter()
        .map(|h| {
            let q = x.matmul(&h.w_q)?;
            let k = x.matmul(&h.w_k)?;
            let v = x.matmul(&h.w_v)?;
            attention(&q, &k, &v)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let concat = Matrix::hconcat(&outputs)?;
    if concat.cols() != w_o.rows() {
        return Err(MatrixError::Dimension(format!(
            "concatenated width {} != W_O rows {}",
            concat.cols(),
            w_o.rows()
        ))
        .into());
    }
    Ok(concat.matmul(w_o)?)
}

/// Model outputs for one masked-language-model example.
#[derive(Debug, Clone)]
pub struct MaskedBatch {
    /// One probability vector over the vocabulary per masked position.
    pub predicted_probs: Vec<Vec<f64>>,
    pub nsp_prob_isnext: f64,
    pub nsp_label: u8,
}

impl MaskedBatch {
    pub fn new(
        predicted_probs: Vec<Vec<f64>>,
        nsp_prob_isnext: f64,
        nsp_label: u8,
    ) -> Result<Self, ModelMathError> {
        for (i, p) in predicted_probs.iter().enumerate() {
            if p.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                return Err(ModelMathError::Probability(format!(
                    "position {i} has a negative or non-finite probability"
                )));
            }
            let s: f64 = p.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(ModelMathError::Probability(format!(
                    "position {i} sums to {s}, not 1"
                )));
            }
        }
        if !(0.0..=1.0).contains(&nsp_prob_isnext) {
            return Err(ModelMathError::Probability(format!(
                "P(IsNext) = {nsp_prob_isnext} outside [0, 1]"
            )));
        }
        if nsp_label > 1 {
            return Err(ModelMathError::Probability(format!(
                "NSP label {nsp_label} not in {{0, 1}}"
            )));
        }
        Ok(Self {
            predicted_probs,
            nsp_prob_isnext,
            nsp_label,
        })
    }
}

/// −Σ over masked positions of ln P(true token).
pub fn mlm_loss(batch: &MaskedBatch, true_tokens: &[usize]) -> Result<f64, ModelMathError> {
    if true_tokens.len() != batch.predicted_probs.len() {
        return Err(ModelMathError::Probability(format!(
            "{} true tokens for {} masked positions",
            true_tokens.len(),
            batch.predicted_probs.len()
        )));
    }
    let mut loss = 0.0;
    for (i, (&tok, probs)) in true_tokens.iter().zip(&batch.predicted_probs).enumerate() {
        let p = *probs.get(tok).ok_or_else(|| {
            ModelMathError::Probability(format!(
                "token {tok} at position {i} outside vocabulary of {}",
                probs.len()
            ))
        })?;
        if p == 0.0 {
            return Err(ModelMathError::InfiniteLoss(format!(
                "zero probability for the true token at position {i}"
            )));
        }
        loss -= p.ln();
    }
    Ok(loss)
}

/// Binary cross-entropy −[y ln p + (1−y) ln(1−p)].
pub fn nsp_loss(p_isnext: f64, y: u8) -> Result<f64, ModelMathError> {
    if !(0.0..=1.0).contains(&p_isnext) {
        return Err(ModelMathError::Probability(format!(
            "P(IsNext) = {p_isnext} outside [0, 1]"
        )));
    }
    let p_label = match y {
        1 => p_isnext,
        0 => 1.0 - p_isnext,
        _ => {
            return Err(ModelMathError::Probability(format!(
                "label {y} not in {{0, 1}}"
            )))
        }
    };
    if p_label == 0.0 {
        return Err(ModelMathError::InfiniteLoss(format!(
            "P(IsNext) = {p_isnext} with label {y}"
        )));
    }
    Ok(-p_label.ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub mlm: f64,
    pub nsp: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { mlm: 1.0, nsp: 1.0 }
    }
}

pub fn total_loss(l_mlm: f64, l_nsp: f64, weights: LossWeights) -> f64 {
    weights.mlm * l_mlm + weights.nsp * l_nsp
}
