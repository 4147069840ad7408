//! Sentiment scoring: truncation, the lexicon baseline scorer, ordered
//! batched execution and import of precomputed score files.

pub mod executor;
mod lexicon;

use std::collections::HashMap;
use std::io::BufRead;

use thiserror::Error;

use crate::ingest::EnrichedReview;
use crate::model_math::softmax;

pub use executor::{run_batches, ExecutionProbe, NoProbe};
pub use lexicon::{default_lexicon, parse_lexicon, tokenize, DEFAULT_LEXICON};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScorerKind {
    Lexicon,
    Imported,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScorerSpec {
    pub kind: ScorerKind,
    /// Characters kept from each text before scoring.
    pub max_length: usize,
    pub batch_size: usize,
    pub workers: usize,
    pub lexicon: HashMap<String, f64>,
    /// Divisor inside the lexicon score's tanh.
    pub squash: f64,
}

impl Default for ScorerSpec {
    fn default() -> Self {
        Self {
            kind: ScorerKind::Lexicon,
            max_length: 512,
            batch_size: 20,
            workers: 8,
            lexicon: default_lexicon(),
            squash: 2.0,
        }
    }
}

impl ScorerSpec {
    pub fn validate(&self) -> Result<(), ScoringError> {
        let bad = |what: &str| Err(ScoringError::InvalidSpec(what.to_owned()));
        if self.max_length == 0 {
            return bad("max_length must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if self.workers == 0 {
            return bad("workers must be >= 1");
        }
        if !(self.squash > 0.0 && self.squash.is_finite()) {
            return bad("squash must be a positive finite number");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("invalid scorer spec: {0}")]
    InvalidSpec(String),
    #[error("scoring failed in batch {batch}: {message}")]
    Batch { batch: usize, message: String },
    #[error("scores outside [-1, 1] at lines {lines:?}")]
    OutOfRange { lines: Vec<usize> },
    #[error("malformed score file at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Binary class probabilities of a sentiment classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassProbabilities {
    pub p_negative: f64,
    pub p_positive: f64,
}

impl ClassProbabilities {
    pub fn new(p_negative: f64, p_positive: f64) -> Result<Self, ScoringError> {
        if !(p_negative >= 0.0 && p_positive >= 0.0)
            || (p_negative + p_positive - 1.0).abs() > 1e-12
        {
            return Err(ScoringError::InvalidSpec(format!(
                "probabilities ({p_negative}, {p_positive}) must be non-negative and sum to 1"
            )));
        }
        Ok(Self {
            p_negative,
            p_positive,
        })
    }

    /// Softmax over `[negative, positive]` logits.
    pub fn from_logits(negative: f64, positive: f64) -> Self {
        let p = softmax(&[negative, positive]);
        Self {
            p_negative: p[0],
            p_positive: p[1],
        }
    }
}

pub fn sentiment_from_probs(probs: ClassProbabilities) -> f64 {
    probs.p_positive - probs.p_negative
}

/// First `max_length` characters of `text`.
pub fn truncate_text(text: &str, max_length: usize) -> &str {
    match text.char_indices().nth(max_length) {
        Some((byte, _)) => &text[..byte],
        None => text,
    }
}

/// `tanh(Σ weights / squash)` over lowercase tokens; 0 when nothing matches.
pub fn lexicon_score(text: &str, lexicon: &HashMap<String, f64>, squash: f64) -> f64 {
    let raw: f64 = tokenize(text).filter_map(|t| lexicon.get(&t)).sum();
    (raw / squash).tanh()
}

/// A batch scorer shared read-only across workers.
pub trait Scorer: Sync {
    fn score_batch(&self, texts: &[&str]) -> Result<Vec<f64>, String>;
}

pub struct LexiconScorer<'a> {
    pub lexicon: &'a HashMap<String, f64>,
    pub squash: f64,
}

impl Scorer for LexiconScorer<'_> {
    fn score_batch(&self, texts: &[&str]) -> Result<Vec<f64>, String> {
        Ok(texts
            .iter()
            .map(|t| lexicon_score(t, self.lexicon, self.squash))
            .collect())
    }
}

/// Adapts a two-logit classifier (`[negative, positive]`) into a scorer.
pub struct LogitScorer<F>(pub F);

impl<F> Scorer for LogitScorer<F>
where
    F: Fn(&str) -> (f64, f64) + Sync,
{
    fn score_batch(&self, texts: &[&str]) -> Result<Vec<f64>, String> {
        Ok(texts
            .iter()
            .map(|t| {
                let (neg, pos) = (self.0)(t);
                sentiment_from_probs(ClassProbabilities::from_logits(neg, pos))
            })
            .collect())
    }
}

/// Scores every row with `scorer`, batch-parallel, preserving order.
pub fn score_corpus(
    rows: Vec<EnrichedReview>,
    spec: &ScorerSpec,
    scorer: &dyn Scorer,
) -> Result<Vec<EnrichedReview>, ScoringError> {
    score_corpus_with_probe(rows, spec, scorer, &NoProbe)
}

pub fn score_corpus_with_probe(
    mut rows: Vec<EnrichedReview>,
    spec: &ScorerSpec,
    scorer: &dyn Scorer,
    probe: &dyn ExecutionProbe,
) -> Result<Vec<EnrichedReview>, ScoringError> {
    spec.validate()?;
    let scores = {
        let texts: Vec<&str> = rows
            .iter()
            .map(|r| truncate_text(&r.text, spec.max_length))
            .collect();
        run_batches(&texts, spec.batch_size, spec.workers, probe, |_, batch| {
            let out = scorer.score_batch(batch)?;
            if out.len() != batch.len() {
                return Err(format!(
                    "scorer returned {} scores for {} texts",
                    out.len(),
                    batch.len()
                ));
            }
            if let Some(bad) = out.iter().find(|s| !(-1.0..=1.0).contains(*s)) {
                return Err(format!("score {bad} outside [-1, 1]"));
            }
            Ok(out)
        })
        .map_err(|f| ScoringError::Batch {
            batch: f.batch,
            message: f.error,
        })?
    };
    for (r, s) in rows.iter_mut().zip(scores) {
        r.sentiment_score = Some(s);
    }
    Ok(rows)
}

/// Result of attaching scores from an external file.
#[derive(Debug, Clone)]
pub struct ImportOutcome {
    pub rows: Vec<EnrichedReview>,
    /// Indices into `rows` that found no score.
    pub unmatched: Vec<usize>,
}

type AlignKey = (String, String, i64);

/// Attaches scores from a JSON Lines file keyed by
/// `(user_id, parent_asin, timestamp)`, reading the score from `field`.
///
/// The first occurrence of a key in the file wins.
pub fn import_scores<R: BufRead>(
    mut rows: Vec<EnrichedReview>,
    mut scored: R,
    field: &str,
) -> Result<ImportOutcome, ScoringError> {
    let mut table: HashMap<AlignKey, f64> = HashMap::new();
    let mut out_of_range = Vec::new();
    let mut buf = Vec::new();
    let mut line = 0usize;
    loop {
        buf.clear();
        if scored.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line += 1;
        let trimmed = buf.trim_ascii();
        if trimmed.is_empty() {
            continue;
        }
        let v: serde_json::Value =
            serde_json::from_slice(trimmed).map_err(|e| ScoringError::Malformed {
                line,
                message: e.to_string(),
            })?;
        let missing = |what: &str| ScoringError::Malformed {
            line,
            message: format!("missing or mistyped `{what}`"),
        };
        let user = v
            .get("user_id")
            .and_then(|x| x.as_str())
            .ok_or_else(|| missing("user_id"))?;
        let asin = v
            .get("parent_asin")
            .and_then(|x| x.as_str())
            .ok_or_else(|| missing("parent_asin"))?;
        let ts = v
            .get("timestamp")
            .and_then(|x| x.as_i64())
            .ok_or_else(|| missing("timestamp"))?;
        let score = v
            .get(field)
            .and_then(|x| x.as_f64())
            .ok_or_else(|| missing(field))?;
        if !(-1.0..=1.0).contains(&score) {
            out_of_range.push(line);
            continue;
        }
        table
            .entry((user.to_owned(), asin.to_owned(), ts))
            .or_insert(score);
    }
    if !out_of_range.is_empty() {
        return Err(ScoringError::OutOfRange {
            lines: out_of_range,
        });
    }
    let mut unmatched = Vec::new();
    for (i, r) in rows.iter_mut().enumerate() {
        let key = (r.user_id.clone(), r.parent_asin.clone(), r.timestamp);
        match table.get(&key) {
            Some(&s) => r.sentiment_score = Some(s),
            None => unmatched.push(i),
        }
    }
    Ok(ImportOutcome { rows, unmatched })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_by_characters() {
        let long: String = "é".repeat(600);
        assert_eq!(truncate_text(&long, 512).chars().count(), 512);
        assert_eq!(truncate_text("0123456789", 512), "0123456789");
        assert_eq!(truncate_text("", 512), "");
    }

    #[test]
    fn sentiment_from_probabilities() {
        let p = |n, q| ClassProbabilities::new(n, q).unwrap();
        assert_eq!(sentiment_from_probs(p(0.5, 0.5)), 0.0);
        assert_eq!(sentiment_from_probs(p(1.0, 0.0)), -1.0);
        assert_eq!(
            sentiment_from_probs(ClassProbabilities::from_logits(0.0, 0.0)),
            0.0
        );
        assert!(ClassProbabilities::new(0.7, 0.7).is_err());
    }

    #[test]
    fn lexicon_examples() {
        let lex: HashMap<String, f64> =
            [("great".to_owned(), 1.0), ("awful".to_owned(), -2.0)].into();
        assert_eq!(lexicon_score("", &lex, 2.0), 0.0);
        assert_eq!(lexicon_score("nothing here", &lex, 2.0), 0.0);
        assert!((lexicon_score("great great", &lex, 2.0) - 0.761_594_155_955_764_9).abs() < 1e-15);
        assert!((lexicon_score("AWFUL!", &lex, 2.0) + 0.761_594_155_955_764_9).abs() < 1e-15);
    }

    #[test]
    fn lexicon_file_parsing() {
        let lex = parse_lexicon("# comment\nGood 1.5\n\nbad\t-2\n").unwrap();
        assert_eq!(lex["good"], 1.5);
        assert_eq!(lex["bad"], -2.0);
        assert!(parse_lexicon("oops").is_err());
    }

    #[test]
    fn scorer_spec_validation() {
        let mut spec = ScorerSpec::default();
        assert!(spec.validate().is_ok());
        spec.batch_size = 0;
        assert!(spec.validate().is_err());
    }

    struct FailOn(usize);

    impl Scorer for FailOn {
        fn score_batch(&self, texts: &[&str]) -> Result<Vec<f64>, String> {
            if texts
                .iter()
                .any(|t| t.parse::<usize>().ok() == Some(self.0))
            {
                Err("boom".into())
            } else {
                Ok(vec![0.0; texts.len()])
            }
        }
    }

    #[test]
    fn batch_failure_names_batch() {
        let rows: Vec<EnrichedReview> = (0..45)
            .map(|i| crate::synth::blank_review(&i.to_string()))
            .collect();
        let spec = ScorerSpec::default();
        let err = score_corpus(rows, &spec, &FailOn(41)).unwrap_err();
        match err {
            ScoringError::Batch { batch, .. } => assert_eq!(batch, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
