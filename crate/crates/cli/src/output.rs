//! CSV tables and static SVG line charts.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, Result};

/// One CSV cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    /// Floats use 17 significant digits in scientific notation.
    pub fn render(&self) -> String {
        match self {
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Rendered rows, as they appear in the file.
    pub fn rendered(&self) -> Vec<Vec<String>> {
        self.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect()
    }

    /// Column `name` as floats, skipping cells that are not numbers.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let Some(i) = self.header.iter().position(|h| h == name) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter_map(|r| match &r[i] {
                Cell::Float(x) => Some(*x),
                Cell::Int(n) => Some(*n as f64),
                Cell::Text(_) => None,
            })
            .collect()
    }
}

/// CSV bytes: header row, then one line per row, RFC 4180 quoting.
pub fn csv_bytes(table: &Table) -> std::result::Result<Vec<u8>, csv::Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(&table.header)?;
    for row in table.rendered() {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}

pub fn emit_csv(table: &Table, path: &Path) -> Result<()> {
    if table.rows.is_empty() {
        return Err(CliError::Validation(format!("refusing to write {} with no rows", path.display())));
    }
    let bytes = csv_bytes(table).map_err(|source| CliError::Csv { path: path.into(), source })?;
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Header and rows of a CSV file as strings.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let wrap = |source| CliError::Csv { path: path.into(), source };
    let mut r = csv::Reader::from_path(path).map_err(wrap)?;
    let header = r.headers().map_err(wrap)?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<std::result::Result<_, _>>()
        .map_err(wrap)?;
    Ok((header, rows))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Chart {
    /// Chart of `y_columns` against `x_column`, labelled with the column names.
    pub fn from_table(table: &Table, title: &str, x_column: &str, y_columns: &[&str], log: bool) -> Self {
        let xs = table.column(x_column);
        let series = y_columns
            .iter()
            .map(|name| Series {
                name: name.to_string(),
                points: xs.iter().copied().zip(table.column(name)).collect(),
            })
            .collect();
        Self {
            title: title.into(),
            x_label: x_column.into(),
            y_label: y_columns.join(", "),
            log_x: log,
            log_y: log,
            series,
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// SVG document for `chart`. Points that cannot be drawn (non-finite, or
/// nonpositive on a log axis) are dropped.
pub fn svg_string(chart: &Chart) -> String {
    let tx = |x: f64| if chart.log_x { x.log10() } else { x };
    let ty = |y: f64| if chart.log_y { y.log10() } else { y };
    let series: Vec<(&str, Vec<(f64, f64)>)> = chart
        .series
        .iter()
        .map(|s| {
            let pts = s
                .points
                .iter()
                .map(|&(x, y)| (tx(x), ty(y)))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .collect();
            (s.name.as_str(), pts)
        })
        .collect();
    let all: Vec<(f64, f64)> = series.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        let lo = all.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = all.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        match (lo.is_finite(), hi > lo) {
            (false, _) => (0.0, 1.0),
            (true, true) => (lo, hi),
            (true, false) => (lo - 0.5, lo + 0.5),
        }
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let axis_note = |log: bool| if log { " (log10)" } else { "" };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(&chart.title));
    let _ = writeln!(
        out,
        r#"<path d="M{m} {b} H{r} M{m} {b} V{m}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for (v, anchor_y) in [(x0, HEIGHT - MARGIN + 16.0), (x1, HEIGHT - MARGIN + 16.0)] {
        let _ = writeln!(out, r#"<text x="{:.2}" y="{anchor_y}" text-anchor="middle">{v:.3}</text>"#, px(v));
    }
    for v in [y0, y1] {
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, MARGIN - 6.0, py(v) + 4.0);
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(&chart.x_label),
        axis_note(chart.log_x)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{y}" text-anchor="middle" transform="rotate(-90 16 {y})">{}{}</text>"#,
        escape(&chart.y_label),
        axis_note(chart.log_y),
        y = HEIGHT / 2.0
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        if !pts.is_empty() {
            let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#, coords.join(" "));
        }
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(out, r#"<text x="{}" y="{ly}" fill="{colour}">{}</text>"#, WIDTH - MARGIN - 120.0, escape(name));
    }
    out.push_str("</svg>\n");
    out
}

pub fn emit_svg(chart: &Chart, path: &Path) -> Result<()> {
    std::fs::write(path, svg_string(chart)).map_err(|e| CliError::io(path, e))
}
