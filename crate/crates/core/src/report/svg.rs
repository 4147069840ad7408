use std::fmt::Write as _;

use super::{
    ChartKind, ChartSpec, PlotFrame, ReportError, Series, XAxis, MARGIN_BOTTOM, MARGIN_LEFT,
    MARGIN_RIGHT, MARGIN_TOP,
};
use crate::evaluation::ConfusionMatrix;
use crate::ingest::civil_from_millis;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];
const FONT: &str = "font-family=\"Helvetica, Arial, sans-serif\"";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Tick label: at most six decimals, trailing zeros dropped, no "-0".
fn tick_label(v: f64) -> String {
    let s = format!("{v:.6}");
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_owned()
    }
}

fn px(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 2.5 {
        2.5
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

/// Range widened to whole multiples of a nice step.
fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    let (lo, hi) = if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    };
    let step = nice_step(hi - lo, 5);
    ((lo / step).floor() * step, (hi / step).ceil() * step)
}

fn ticks(lo: f64, hi: f64, exact_ends: bool) -> Vec<f64> {
    if exact_ends {
        return (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect();
    }
    let step = nice_step(hi - lo, 5);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn check_series(series: &[Series]) -> Result<(), ReportError> {
    if series.is_empty() {
        return Err(ReportError::NoSeries);
    }
    for s in series {
        if s.points.is_empty() {
            return Err(ReportError::EmptySeries(s.name.clone()));
        }
        if let Some(index) = s
            .points
            .iter()
            .position(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(ReportError::NonFinite {
                series: s.name.clone(),
                index,
            });
        }
    }
    Ok(())
}

/// The data→pixel map [`emit_chart`] uses for these inputs.
pub fn frame_for(spec: &ChartSpec, series: &[Series]) -> Result<PlotFrame, ReportError> {
    spec.validate()?;
    check_series(series)?;
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    let (x_lo, x_hi) = match spec.kind {
        ChartKind::Roc => (0.0, 1.0),
        ChartKind::Bars => {
            let n = spec.categories.len().max(x_hi as usize + 1);
            (-0.5, n as f64 - 0.5)
        }
        _ if x_hi > x_lo => (x_lo, x_hi),
        _ => (x_lo - 0.5, x_hi + 0.5),
    };
    let (y_lo, y_hi) = match (spec.y_bounds, spec.kind) {
        (Some(b), _) => b,
        (None, ChartKind::Roc) => (0.0, 1.0),
        (None, ChartKind::Bars) => nice_range(y_lo.min(0.0), y_hi.max(0.0)),
        (None, _) => nice_range(y_lo, y_hi),
    };
    Ok(PlotFrame {
        x_lo,
        x_hi,
        y_lo,
        y_hi,
        width: f64::from(spec.width),
        height: f64::from(spec.height),
    })
}

fn x_tick_label(axis: XAxis, v: f64) -> String {
    match axis {
        XAxis::Number => tick_label(v),
        XAxis::DateMillis => {
            let d = civil_from_millis(v.round() as i64);
            format!("{:04}-{:02}-{:02}", d.year, d.month, d.day)
        }
    }
}

fn header(out: &mut String, w: u32, h: u32, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>"
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-size=\"18\" {FONT}>{}</text>",
        px(f64::from(w) / 2.0),
        escape(title)
    );
}

fn axes(out: &mut String, spec: &ChartSpec, f: &PlotFrame) {
    let (left, right) = (MARGIN_LEFT, f.width - MARGIN_RIGHT);
    let (top, bottom) = (MARGIN_TOP, f.height - MARGIN_BOTTOM);
    let _ = writeln!(
        out,
        "<g class=\"axes\" stroke=\"#333333\" stroke-width=\"1\">"
    );
    let _ = writeln!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
        px(left),
        px(bottom),
        px(right),
        px(bottom)
    );
    let _ = writeln!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
        px(left),
        px(top),
        px(left),
        px(bottom)
    );
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, "<g class=\"y-ticks\" font-size=\"12\" {FONT}>");
    for v in ticks(f.y_lo, f.y_hi, spec.y_bounds.is_some()) {
        let (_, y) = f.to_px(f.x_lo, v);
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>",
            px(left),
            px(y),
            px(right),
            px(y)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            px(left - 6.0),
            px(y + 4.0),
            tick_label(v)
        );
    }
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, "<g class=\"x-ticks\" font-size=\"12\" {FONT}>");
    let xt: Vec<(f64, String)> = match (spec.kind, spec.x_axis) {
        (ChartKind::Bars, _) => (0..(f.x_hi + 0.5) as usize)
            .map(|i| {
                let label = spec
                    .categories
                    .get(i)
                    .cloned()
                    .unwrap_or_else(|| i.to_string());
                (i as f64, escape(&label))
            })
            .collect(),
        (_, XAxis::DateMillis) => (0..=5)
            .map(|i| {
                let v = f.x_lo + (f.x_hi - f.x_lo) * i as f64 / 5.0;
                (v, x_tick_label(XAxis::DateMillis, v))
            })
            .collect(),
        (_, XAxis::Number) => ticks(f.x_lo, f.x_hi, false)
            .into_iter()
            .map(|v| (v, tick_label(v)))
            .collect(),
    };
    for (v, label) in xt {
        let (x, _) = f.to_px(v, f.y_lo);
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\"/>",
            px(x),
            px(bottom),
            px(x),
            px(bottom + 5.0)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            px(x),
            px(bottom + 20.0),
            label
        );
    }
    let _ = writeln!(out, "</g>");

    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\" {FONT}>{}</text>",
        px(left + f.plot_width() / 2.0),
        px(f.height - 20.0),
        escape(&spec.x_label)
    );
    let (cx, cy) = (20.0, top + f.plot_height() / 2.0);
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 {} {})\" {FONT}>{}</text>",
        px(cx),
        px(cy),
        px(cx),
        px(cy),
        escape(&spec.y_label)
    );
}

fn legend(out: &mut String, f: &PlotFrame, series: &[Series]) {
    let x = f.width - MARGIN_RIGHT + 12.0;
    let _ = writeln!(out, "<g class=\"legend\" font-size=\"12\" {FONT}>");
    for (i, s) in series.iter().enumerate() {
        let y = MARGIN_TOP + 10.0 + 20.0 * i as f64;
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"4\" fill=\"{}\"/>",
            px(x),
            px(y - 2.0),
            PALETTE[i % PALETTE.len()]
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\">{}</text>",
            px(x + 20.0),
            px(y + 4.0),
            escape(&s.name)
        );
    }
    let _ = writeln!(out, "</g>");
}

fn polyline(out: &mut String, f: &PlotFrame, s: &Series, color: &str) {
    let coords: Vec<String> = s
        .points
        .iter()
        .map(|&(x, y)| {
            let (a, b) = f.to_px(x, y);
            format!("{},{}", px(a), px(b))
        })
        .collect();
    let _ = writeln!(
        out,
        "<polyline class=\"series\" data-name=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>",
        escape(&s.name),
        coords.join(" ")
    );
}

fn markers(out: &mut String, f: &PlotFrame, s: &Series, color: &str, r: f64) {
    let _ = writeln!(
        out,
        "<g class=\"points\" data-name=\"{}\" fill=\"{color}\">",
        escape(&s.name)
    );
    for &(x, y) in &s.points {
        let (a, b) = f.to_px(x, y);
        let _ = writeln!(out, "<circle cx=\"{}\" cy=\"{}\" r=\"{r}\"/>", px(a), px(b));
    }
    let _ = writeln!(out, "</g>");
}

/// Renders `series` as an SVG 1.1 document.
///
/// Every point is drawn inside a clip region matching the plot area, so
/// values outside fixed `y_bounds` are cut at the frame edge.
pub fn emit_chart(spec: &ChartSpec, series: &[Series]) -> Result<String, ReportError> {
    let f = frame_for(spec, series)?;
    let mut out = String::new();
    header(&mut out, spec.width, spec.height, &spec.title);
    axes(&mut out, spec, &f);
    let _ = writeln!(
        out,
        "<clipPath id=\"plot-area\"><rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/></clipPath>",
        px(MARGIN_LEFT),
        px(MARGIN_TOP),
        px(f.plot_width()),
        px(f.plot_height())
    );
    let _ = writeln!(out, "<g clip-path=\"url(#plot-area)\">");
    if spec.kind == ChartKind::Roc {
        let (x0, y0) = f.to_px(0.0, 0.0);
        let (x1, y1) = f.to_px(1.0, 1.0);
        let _ = writeln!(
            out,
            "<line class=\"chance\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999999\" stroke-dasharray=\"6 4\"/>",
            px(x0),
            px(y0),
            px(x1),
            px(y1)
        );
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        match spec.kind {
            ChartKind::ScatterWithMa if i == 0 => markers(&mut out, &f, s, color, 2.5),
            ChartKind::ThresholdF1 => {
                polyline(&mut out, &f, s, color);
                markers(&mut out, &f, s, color, 3.0);
            }
            ChartKind::Bars | ChartKind::ConfusionHeat => {
                let n = series.len() as f64;
                let slot = 0.8 / n;
                let (_, base) = f.to_px(0.0, 0.0f64.clamp(f.y_lo, f.y_hi));
                let _ = writeln!(
                    out,
                    "<g class=\"bars\" data-name=\"{}\" fill=\"{color}\">",
                    escape(&s.name)
                );
                for &(x, y) in &s.points {
                    let left = x - 0.4 + slot * i as f64;
                    let (a, top) = f.to_px(left, y);
                    let (b, _) = f.to_px(left + slot, y);
                    let (y_top, h) = if top <= base {
                        (top, base - top)
                    } else {
                        (base, top - base)
                    };
                    let _ = writeln!(
                        out,
                        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/>",
                        px(a),
                        px(y_top),
                        px(b - a),
                        px(h)
                    );
                }
                let _ = writeln!(out, "</g>");
            }
            _ => polyline(&mut out, &f, s, color),
        }
    }
    let _ = writeln!(out, "</g>");
    legend(&mut out, &f, series);
    out.push_str("</svg>\n");
    Ok(out)
}

/// White for 0 up to a dark blue for the largest count.
fn shade(count: u64, max: u64) -> (u8, u8, u8) {
    let t = if max == 0 {
        0.0
    } else {
        count as f64 / max as f64
    };
    let mix = |hi: f64, lo: f64| (hi - t * (hi - lo)).round() as u8;
    (mix(255.0, 8.0), mix(255.0, 48.0), mix(255.0, 107.0))
}

/// 2×2 heat map: rows are actual classes, columns predicted classes.
pub fn emit_confusion(cm: &ConfusionMatrix) -> String {
    let (w, h) = (520u32, 480u32);
    let mut out = String::new();
    header(&mut out, w, h, "Confusion Matrix");
    let cells = [[cm.tn, cm.fp], [cm.fn_, cm.tp]];
    let max = cells.iter().flatten().copied().max().unwrap_or(0);
    let labels = ["Negative", "Positive"];
    let (x0, y0, size) = (140.0, 70.0, 160.0);
    for (r, row) in cells.iter().enumerate() {
        for (c, &count) in row.iter().enumerate() {
            let (red, green, blue) = shade(count, max);
            let (x, y) = (x0 + size * c as f64, y0 + size * r as f64);
            let _ = writeln!(
                out,
                "<rect class=\"cell\" data-row=\"{r}\" data-col=\"{c}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"rgb({red},{green},{blue})\" stroke=\"#ffffff\"/>",
                px(x),
                px(y),
                px(size),
                px(size)
            );
            let ink = if max > 0 && count * 2 > max {
                "#ffffff"
            } else {
                "#000000"
            };
            let _ = writeln!(
                out,
                "<text class=\"count\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"20\" fill=\"{ink}\" {FONT}>{count}</text>",
                px(x + size / 2.0),
                px(y + size / 2.0 + 7.0)
            );
        }
    }
    for (i, label) in labels.iter().enumerate() {
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\" {FONT}>{label}</text>",
            px(x0 + size * (i as f64 + 0.5)),
            px(y0 + 2.0 * size + 25.0)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"14\" {FONT}>{label}</text>",
            px(x0 - 10.0),
            px(y0 + size * (i as f64 + 0.5) + 5.0)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\" {FONT}>Predicted label</text>",
        px(x0 + size),
        px(y0 + 2.0 * size + 50.0)
    );
    let (cx, cy) = (40.0, y0 + size);
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 {} {})\" {FONT}>True label</text>",
        px(cx),
        px(cy),
        px(cx),
        px(cy)
    );
    out.push_str("</svg>\n");
    out
}
