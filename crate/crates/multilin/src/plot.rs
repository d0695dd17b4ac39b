//! Static SVG line plots of sweep CSV columns.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::Table;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Axis scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Scale {
    pub log_x: bool,
    pub log_y: bool,
}

fn cell(t: &Table, row: usize, col: usize) -> Result<f64> {
    t.rows[row][col]
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("row {}: {} is not a number", row + 1, t.rows[row][col])))
}

fn transform(v: f64, log: bool, row: usize, name: &str) -> Result<f64> {
    if log {
        if v.is_nan() || v <= 0.0 {
            return Err(Error::Format(format!("row {}: log scale needs {name} > 0, got {v}", row + 1)));
        }
        Ok(v.log10())
    } else {
        Ok(v)
    }
}

/// Renders `y_col` against `x_col` with one polyline per distinct `construction` value.
pub fn render_svg(csv: &str, x_col: &str, y_col: &str, scale: Scale) -> Result<String> {
    let t = Table::parse(csv)?;
    let xi = t.column(x_col)?;
    let yi = t.column(y_col)?;
    if t.rows.len() < 2 {
        return Err(Error::Format(format!("need at least two rows, found {}", t.rows.len())));
    }
    let series_col = t.column("construction").ok();
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for row in 0..t.rows.len() {
        let x = transform(cell(&t, row, xi)?, scale.log_x, row, x_col)?;
        let y = transform(cell(&t, row, yi)?, scale.log_y, row, y_col)?;
        let key = series_col.map(|c| t.rows[row][c].clone()).unwrap_or_default();
        series.entry(key).or_default().push((x, y));
    }
    let all: Vec<(f64, f64)> = series.values().flatten().copied().collect();
    let (mut x0, mut x1, mut y0, mut y1) = all.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 <= y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let label = |v: f64, log: bool| if log { format!("{:.4e}", 10f64.powf(v)) } else { format!("{v:.4e}") };

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (l, r, b, top) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{l}" y1="{b}" x2="{l}" y2="{top}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{l}" y="{:.1}" font-size="11">{}</text>"#, b + 16.0, label(x0, scale.log_x));
    let _ = writeln!(s, r#"<text x="{r}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"#, b + 16.0, label(x1, scale.log_x));
    let _ = writeln!(s, r#"<text x="{:.1}" y="{b}" font-size="11" text-anchor="end">{}</text>"#, l - 4.0, label(y0, scale.log_y));
    let _ = writeln!(s, r#"<text x="{:.1}" y="{top}" font-size="11" text-anchor="end">{}</text>"#, l - 4.0, label(y1, scale.log_y));
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{x_col}</text>"#, WIDTH / 2.0, HEIGHT - 20.0);
    let _ = writeln!(s, r#"<text x="16" y="{:.1}" font-size="12" transform="rotate(-90 16 {:.1})" text-anchor="middle">{y_col}</text>"#, HEIGHT / 2.0, HEIGHT / 2.0);
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, coords.join(" "));
        if !name.is_empty() {
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="12" fill="{color}">{name}</text>"#, r - 40.0, top + 14.0 * (k as f64 + 1.0));
        }
    }
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

/// Reads a sweep CSV and writes the SVG plot of `y_col` against `x_col`.
pub fn emit_plot(csv_path: &Path, x_col: &str, y_col: &str, svg_path: &Path, scale: Scale) -> Result<()> {
    let csv = std::fs::read_to_string(csv_path)?;
    let svg = render_svg(&csv, x_col, y_col, scale)?;
    Ok(std::fs::write(svg_path, svg)?)
}
