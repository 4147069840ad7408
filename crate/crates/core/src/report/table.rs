use std::fmt::Write as _;

use super::ReportError;

const SIGNIFICANT_DIGITS: i32 = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Real)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Named columns, emitted in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<(String, Vec<Cell>)>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn column<C: Into<Cell>>(
        mut self,
        name: impl Into<String>,
        values: impl IntoIterator<Item = C>,
    ) -> Self {
        self.columns
            .push((name.into(), values.into_iter().map(Into::into).collect()));
        self
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.1.len())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Up to 12 significant digits, plain notation for moderate magnitudes and
/// `1.5e-7` style otherwise. Always uses '.' as the decimal separator.
pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS - 1 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        let t = trim_fraction(&s);
        if t == "-0" {
            "0".into()
        } else {
            t.to_owned()
        }
    } else {
        let s = format!("{:.*e}", (SIGNIFICANT_DIGITS - 1) as usize, v);
        let (mantissa, e) = s.split_once('e').unwrap_or((&s, "0"));
        format!("{}e{e}", trim_fraction(mantissa))
    }
}

fn push_field(out: &mut String, field: &str) {
    if field.contains([',', '"', '\n', '\r']) {
        out.push('"');
        out.push_str(&field.replace('"', "\"\""));
        out.push('"');
    } else {
        out.push_str(field);
    }
}

fn render(cell: &Cell) -> String {
    match cell {
        Cell::Int(i) => i.to_string(),
        Cell::Real(v) => format_real(*v),
        Cell::Text(s) => s.clone(),
        Cell::Empty => String::new(),
    }
}

/// Header row plus one line per row, '\n' terminated, RFC 4180 quoting.
pub fn emit_csv(table: &Table) -> Result<String, ReportError> {
    let expected = table.n_rows();
    for (name, values) in &table.columns {
        if values.len() != expected {
            return Err(ReportError::RaggedColumns {
                column: name.clone(),
                len: values.len(),
                expected,
            });
        }
    }
    let mut out = String::new();
    for (i, (name, _)) in table.columns.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        push_field(&mut out, name);
    }
    out.push('\n');
    for r in 0..expected {
        for (i, (_, values)) in table.columns.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            push_field(&mut out, &render(&values[r]));
        }
        let _ = writeln!(out);
    }
    Ok(out)
}
