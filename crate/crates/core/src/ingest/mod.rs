//! Streaming JSON Lines ingest: parse, join on `parent_asin`, engineer
//! calendar/text features and filter products by review count.

pub mod calendar;
mod records;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

pub use calendar::{civil_from_millis, CivilDate};
pub use records::{EnrichedReview, ItemMeta, ReviewRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// Skip bad lines and report them as diagnostics.
    #[default]
    Lenient,
    /// Abort on the first bad line.
    Strict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagnosticKind {
    MalformedJson,
    InvalidRecord,
    EmptyJoin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    /// 1-based input line, when the diagnostic refers to one.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    BadLine(Diagnostic),
    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// Records parsed from a stream, with the diagnostics for lines skipped.
#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub diagnostics: Vec<Diagnostic>,
}

impl<T> Parsed<T> {
    pub fn skipped(&self) -> usize {
        self.diagnostics.len()
    }
}

trait Validate {
    fn check(&self) -> Result<(), String>;
}

impl Validate for ReviewRecord {
    fn check(&self) -> Result<(), String> {
        self.validate()
    }
}

impl Validate for ItemMeta {
    fn check(&self) -> Result<(), String> {
        self.validate()
    }
}

fn parse_lines<T, R>(mut reader: R, mode: Strictness) -> Result<Parsed<T>, IngestError>
where
    T: DeserializeOwned + Validate,
    R: BufRead,
{
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    let mut buf = Vec::new();
    let mut line_no = 0usize;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let trimmed = buf.trim_ascii();
        if trimmed.is_empty() {
            continue;
        }
        let diag = match serde_json::from_slice::<T>(trimmed) {
            Ok(rec) => match rec.check() {
                Ok(()) => {
                    records.push(rec);
                    continue;
                }
                Err(why) => Diagnostic {
                    kind: DiagnosticKind::InvalidRecord,
                    line: Some(line_no),
                    message: format!("invalid record at line {line_no}: {why}"),
                },
            },
            Err(e) if e.is_data() => Diagnostic {
                kind: DiagnosticKind::InvalidRecord,
                line: Some(line_no),
                message: format!("invalid record at line {line_no}: {e}"),
            },
            Err(_) => Diagnostic {
                kind: DiagnosticKind::MalformedJson,
                line: Some(line_no),
                message: format!("malformed JSON at line {line_no}"),
            },
        };
        match mode {
            Strictness::Strict => return Err(IngestError::BadLine(diag)),
            Strictness::Lenient => diagnostics.push(diag),
        }
    }
    Ok(Parsed {
        records,
        diagnostics,
    })
}

/// Parses review JSON Lines. Missing `helpful_vote` becomes 0 and missing
/// `images` an empty list.
pub fn parse_reviews<R: BufRead>(
    reader: R,
    mode: Strictness,
) -> Result<Parsed<ReviewRecord>, IngestError> {
    parse_lines(reader, mode)
}

/// Parses item metadata JSON Lines. Duplicate keys are passed through.
pub fn parse_metadata<R: BufRead>(
    reader: R,
    mode: Strictness,
) -> Result<Parsed<ItemMeta>, IngestError> {
    parse_lines(reader, mode)
}

/// One review paired with its product metadata.
#[derive(Debug, Clone, Copy)]
pub struct JoinedRow<'a> {
    pub review: &'a ReviewRecord,
    pub meta: &'a ItemMeta,
}

#[derive(Debug, Clone)]
pub struct JoinOutput<'a> {
    pub rows: Vec<JoinedRow<'a>>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Inner join on `parent_asin`, review order preserved.
///
/// Metadata is deduplicated by key with the first occurrence winning, so each
/// review matches at most once.
pub fn merge_on_parent_asin<'a>(
    reviews: &'a [ReviewRecord],
    meta: &'a [ItemMeta],
) -> JoinOutput<'a> {
    let mut index: HashMap<&str, &ItemMeta> = HashMap::with_capacity(meta.len());
    for m in meta {
        index.entry(m.parent_asin.as_str()).or_insert(m);
    }
    let rows: Vec<JoinedRow<'a>> = reviews
        .iter()
        .filter_map(|r| {
            index
                .get(r.parent_asin.as_str())
                .map(|m| JoinedRow { review: r, meta: m })
        })
        .collect();
    let mut diagnostics = Vec::new();
    if rows.is_empty() {
        diagnostics.push(Diagnostic {
            kind: DiagnosticKind::EmptyJoin,
            line: None,
            message: "empty join: no review matched any metadata row".into(),
        });
    }
    JoinOutput { rows, diagnostics }
}

pub fn engineer_features(row: JoinedRow<'_>) -> EnrichedReview {
    let r = row.review;
    let m = row.meta;
    let date = civil_from_millis(r.timestamp);
    EnrichedReview {
        rating: r.rating,
        title: r.title.clone(),
        text: r.text.clone(),
        images: r.images.clone(),
        parent_asin: r.parent_asin.clone(),
        user_id: r.user_id.clone(),
        timestamp: r.timestamp,
        verified_purchase: r.verified_purchase,
        helpful_vote: r.helpful_vote,
        main_category: m.main_category.clone(),
        item_title: m.title.clone(),
        average_rating: m.average_rating,
        rating_number: m.rating_number,
        price: m.price,
        store: m.store.clone(),
        item_extra: m.extra.clone(),
        review_length: r.text.chars().count() as u64,
        has_images: u8::from(!r.images.is_empty()),
        verified_purchase_flag: u8::from(r.verified_purchase),
        year: date.year,
        month: date.month,
        day: date.day,
        weekday: date.weekday,
        sentiment_score: None,
    }
}

/// Keeps products with at least `min_reviews` surviving reviews.
///
/// With `require_price`, rows without a price are neither counted nor
/// emitted. Output is a subsequence of the input.
pub fn filter_products(
    rows: Vec<EnrichedReview>,
    min_reviews: usize,
    require_price: bool,
) -> Vec<EnrichedReview> {
    let survives = |r: &EnrichedReview| !require_price || r.price.is_some();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for r in rows.iter().filter(|r| survives(r)) {
        *counts.entry(r.parent_asin.as_str()).or_default() += 1;
    }
    let keep: HashSet<String> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_reviews)
        .map(|(k, _)| k.to_owned())
        .collect();
    rows.into_iter()
        .filter(|r| survives(r) && keep.contains(&r.parent_asin))
        .collect()
}

/// Writes one JSON object per line.
pub fn write_jsonl<W: Write, T: Serialize>(mut out: W, rows: &[T]) -> Result<(), IngestError> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads enriched rows back (the format written by [`write_jsonl`]).
pub fn read_enriched<R: BufRead>(
    mut reader: R,
    mode: Strictness,
) -> Result<Parsed<EnrichedReview>, IngestError> {
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    let mut buf = Vec::new();
    let mut line_no = 0usize;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let trimmed = buf.trim_ascii();
        if trimmed.is_empty() {
            continue;
        }
        match serde_json::from_slice::<EnrichedReview>(trimmed) {
            Ok(r) => records.push(r),
            Err(_) => {
                let diag = Diagnostic {
                    kind: DiagnosticKind::MalformedJson,
                    line: Some(line_no),
                    message: format!("malformed JSON at line {line_no}"),
                };
                if mode == Strictness::Strict {
                    return Err(IngestError::BadLine(diag));
                }
                diagnostics.push(diag);
            }
        }
    }
    Ok(Parsed {
        records,
        diagnostics,
    })
}
