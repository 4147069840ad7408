//! Deterministic SVG charts and CSV tables.
//!
//! Output depends only on the inputs: no timestamps, no randomness, fixed
//! float formatting. The data→pixel map of a chart is exposed as
//! [`PlotFrame`] so plotted coordinates can be checked against the data.

mod svg;
mod table;

use thiserror::Error;

pub use svg::{emit_chart, emit_confusion, frame_for};
pub use table::{emit_csv, format_real, Cell, Table};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("chart has no series")]
    NoSeries,
    #[error("series '{0}' is empty")]
    EmptySeries(String),
    #[error("series '{series}' has a non-finite coordinate at index {index}")]
    NonFinite { series: String, index: usize },
    #[error("y bounds must satisfy lo < hi, got ({lo}, {hi})")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("canvas {width}x{height} too small for the fixed margins")]
    InvalidSize { width: u32, height: u32 },
    #[error("column '{column}' has {len} values, expected {expected}")]
    RaggedColumns {
        column: String,
        len: usize,
        expected: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    Line,
    /// First series drawn as points, the rest as overlay lines.
    ScatterWithMa,
    Roc,
    ThresholdF1,
    ConfusionHeat,
    Bars,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XAxis {
    #[default]
    Number,
    /// Epoch milliseconds, labelled as UTC dates.
    DateMillis,
}

pub const DEFAULT_WIDTH: u32 = 960;
pub const DEFAULT_HEIGHT: u32 = 540;

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    pub kind: ChartKind,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub y_bounds: Option<(f64, f64)>,
    pub width: u32,
    pub height: u32,
    pub x_axis: XAxis,
    /// Bar labels for [`ChartKind::Bars`]; bar i is drawn at x = i.
    pub categories: Vec<String>,
}

impl ChartSpec {
    pub fn new(kind: ChartKind, title: impl Into<String>) -> Self {
        Self {
            kind,
            title: title.into(),
            x_label: String::new(),
            y_label: String::new(),
            y_bounds: None,
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            x_axis: XAxis::Number,
            categories: Vec::new(),
        }
    }

    pub fn labels(mut self, x: impl Into<String>, y: impl Into<String>) -> Self {
        self.x_label = x.into();
        self.y_label = y.into();
        self
    }

    pub fn y_bounds(mut self, lo: f64, hi: f64) -> Self {
        self.y_bounds = Some((lo, hi));
        self
    }

    pub fn x_axis(mut self, axis: XAxis) -> Self {
        self.x_axis = axis;
        self
    }

    pub fn categories<S: Into<String>>(mut self, cats: impl IntoIterator<Item = S>) -> Self {
        self.categories = cats.into_iter().map(Into::into).collect();
        self
    }

    pub fn validate(&self) -> Result<(), ReportError> {
        if let Some((lo, hi)) = self.y_bounds {
            if lo >= hi || !lo.is_finite() || !hi.is_finite() {
                return Err(ReportError::InvalidBounds { lo, hi });
            }
        }
        let min_w = MARGIN_LEFT + MARGIN_RIGHT + 10.0;
        let min_h = MARGIN_TOP + MARGIN_BOTTOM + 10.0;
        if f64::from(self.width) < min_w || f64::from(self.height) < min_h {
            return Err(ReportError::InvalidSize {
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }
}

/// A named sequence of (x, y) points.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
        }
    }

    /// Points (i, y_i).
    pub fn indexed(name: impl Into<String>, ys: &[f64]) -> Self {
        Self::new(
            name,
            ys.iter().enumerate().map(|(i, &y)| (i as f64, y)).collect(),
        )
    }
}

pub const MARGIN_LEFT: f64 = 80.0;
pub const MARGIN_RIGHT: f64 = 160.0;
pub const MARGIN_TOP: f64 = 50.0;
pub const MARGIN_BOTTOM: f64 = 70.0;

/// Affine map between data coordinates and SVG pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotFrame {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub width: f64,
    pub height: f64,
}

impl PlotFrame {
    pub fn plot_width(&self) -> f64 {
        self.width - MARGIN_LEFT - MARGIN_RIGHT
    }

    pub fn plot_height(&self) -> f64 {
        self.height - MARGIN_TOP - MARGIN_BOTTOM
    }

    pub fn to_px(&self, x: f64, y: f64) -> (f64, f64) {
        let px = MARGIN_LEFT + (x - self.x_lo) / (self.x_hi - self.x_lo) * self.plot_width();
        let py = MARGIN_TOP + (self.y_hi - y) / (self.y_hi - self.y_lo) * self.plot_height();
        (px, py)
    }

    pub fn to_data(&self, px: f64, py: f64) -> (f64, f64) {
        let x = self.x_lo + (px - MARGIN_LEFT) / self.plot_width() * (self.x_hi - self.x_lo);
        let y = self.y_hi - (py - MARGIN_TOP) / self.plot_height() * (self.y_hi - self.y_lo);
        (x, y)
    }
}
