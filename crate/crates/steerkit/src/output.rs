//! Result files: CSV with `#` provenance comments, a JSON record, and a
//! minimal SVG preview.

use std::fmt::Write as _;
use std::io::Write;

use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::runner::RunRecord;
use crate::scenario::Mode;

/// Twelve significant digits.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.11e}")
    }
}

fn header(record: &RunRecord) -> Vec<String> {
    record.columns.iter().map(|c| format!("{} ({})", c.name, c.unit)).collect()
}

pub fn write_csv<W: Write>(record: &RunRecord, out: W) -> CliResult<()> {
    let mut out = out;
    let mut comments = String::new();
    writeln!(comments, "# steerkit {}", record.version).unwrap();
    writeln!(comments, "# scenario sha256 {}", record.digest).unwrap();
    if let Some(name) = &record.scenario.name {
        writeln!(comments, "# name {name}").unwrap();
    }
    writeln!(comments, "# mode {}", mode_name(record.scenario.mode)).unwrap();
    for w in &record.warnings {
        writeln!(comments, "# warning {}", w.replace('\n', " ")).unwrap();
    }
    if let Some(v) = &record.validation {
        writeln!(
            comments,
            "# validation max_relative {} tolerance {} {}",
            format_value(v.max_relative),
            format_value(v.tolerance),
            if v.passed { "PASS" } else { "FAIL" }
        )
        .unwrap();
    }
    out.write_all(comments.as_bytes()).map_err(CliError::io("writing CSV"))?;
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| CliError::Io { context: "writing CSV".into(), source: e.into() };
    w.write_record(header(record)).map_err(csv_err)?;
    for row in &record.rows {
        w.write_record(row.iter().map(|v| format_value(*v))).map_err(csv_err)?;
    }
    w.flush().map_err(CliError::io("writing CSV"))?;
    Ok(())
}

pub fn csv_string(record: &RunRecord) -> CliResult<String> {
    let mut buf = Vec::new();
    write_csv(record, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV is UTF-8"))
}

pub fn mode_name(mode: Mode) -> String {
    serde_json::to_value(mode).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

/// The record as JSON; non-finite values become `null`.
pub fn json_record(record: &RunRecord) -> Value {
    json!({
        "tool": "steerkit",
        "version": record.version,
        "scenario_sha256": record.digest,
        "scenario": record.scenario,
        "wall_time_s": record.wall_time.as_secs_f64(),
        "columns": record.columns,
        "rows": record.rows.iter().map(|r| r.iter().map(|v| number(*v)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "warnings": record.warnings,
        "validation": record.validation,
        "extra": record.extra,
    })
}

pub fn json_string(record: &RunRecord) -> String {
    serde_json::to_string_pretty(&json_record(record)).expect("record serializes")
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) =
        values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn frame(svg: &mut String, title: &str, x: (f64, f64), y: (f64, f64), x_label: &str, y_label: &str) {
    let (w, h) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#).unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, WIDTH / 2.0, escape(title))
        .unwrap();
    writeln!(svg, r#"<rect x="{MARGIN}" y="{MARGIN}" width="{w}" height="{h}" fill="none" stroke="black"/>"#).unwrap();
    let b = HEIGHT - MARGIN;
    writeln!(svg, r#"<text x="{MARGIN}" y="{}">{}</text>"#, b + 15.0, short(x.0)).unwrap();
    writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, WIDTH - MARGIN, b + 15.0, short(x.1)).unwrap();
    writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, b + 30.0, escape(x_label))
        .unwrap();
    writeln!(svg, r#"<text x="{}" y="{b}" text-anchor="end">{}</text>"#, MARGIN - 4.0, short(y.0)).unwrap();
    writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, MARGIN - 4.0, MARGIN + 10.0, short(y.1))
        .unwrap();
    writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    )
    .unwrap();
}

fn short(v: f64) -> String {
    format!("{v:.3}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn map(v: f64, (lo, hi): (f64, f64), a: f64, b: f64) -> f64 {
    a + (v - lo) / (hi - lo) * (b - a)
}

/// Lines of every numeric column against the first; heatmaps as cells.
pub fn svg(record: &RunRecord) -> Option<String> {
    match record.scenario.mode {
        Mode::Heatmap => Some(heatmap_svg(record)),
        Mode::WorkingPoint => None,
        _ => Some(lines_svg(record)),
    }
}

fn lines_svg(record: &RunRecord) -> String {
    let title = record.scenario.name.clone().unwrap_or_else(|| mode_name(record.scenario.mode));
    let xs: Vec<f64> = record.rows.iter().map(|r| r[0]).collect();
    let ys = 1..record.columns.len();
    let x_range = extent(xs.iter().copied());
    let y_range = extent(record.rows.iter().flat_map(|r| r[1..].iter().copied()));
    let mut svg = String::new();
    frame(&mut svg, &title, x_range, y_range, &record.columns[0].name, "value");
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    for (k, c) in ys.enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let mut path = String::new();
        let mut pen_down = false;
        for (x, row) in xs.iter().zip(&record.rows) {
            let y = row[c];
            if !y.is_finite() {
                pen_down = false;
                continue;
            }
            let (px, py) = (map(*x, x_range, left, right), map(y, y_range, bottom, top));
            write!(path, "{}{px:.2},{py:.2} ", if pen_down { "L" } else { "M" }).unwrap();
            pen_down = true;
        }
        writeln!(svg, r#"<path d="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#, path.trim_end()).unwrap();
        writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{colour}">{}</text>"#,
            right - 4.0,
            top + 14.0 * (k as f64 + 1.0),
            escape(&record.columns[c].name)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

fn heatmap_svg(record: &RunRecord) -> String {
    let title = record.scenario.name.clone().unwrap_or_else(|| "heatmap".into());
    let ys: Vec<f64> = record.rows.iter().map(|r| r[0]).collect();
    let xs: Vec<f64> = record.rows.iter().map(|r| r[1]).collect();
    let nx = record.scenario.sweep.as_ref().map_or(1, |s| s.points);
    let ny = record.scenario.sweep2.as_ref().map_or(1, |s| s.points);
    let (x_range, y_range) = (extent(xs.iter().copied()), extent(ys.iter().copied()));
    let mut svg = String::new();
    frame(&mut svg, &title, x_range, y_range, &record.columns[1].name, &record.columns[0].name);
    let (w, h) = ((WIDTH - 2.0 * MARGIN) / nx as f64, (HEIGHT - 2.0 * MARGIN) / ny as f64);
    for (k, row) in record.rows.iter().enumerate() {
        let (i, j) = (k / nx, k % nx);
        // log scale around the steering bound, capped at a factor 10 either way
        let e = row[2];
        let fill = if e.is_finite() && e > 0.0 {
            let t = ((e / 0.5).log10().clamp(-1.0, 1.0) + 1.0) / 2.0;
            let (r, b) = ((255.0 * t) as u8, (255.0 * (1.0 - t)) as u8);
            format!("rgb({r},{},{b})", 255 - r.max(b) / 2)
        } else {
            "#999".into()
        };
        let x = MARGIN + j as f64 * w;
        let y = HEIGHT - MARGIN - (i as f64 + 1.0) * h;
        writeln!(
            svg,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            w + 0.05,
            h + 0.05
        )
        .unwrap();
    }
    if let Some(points) = record.extra.get("contour").and_then(|c| c.get("points")).and_then(|p| p.as_array()) {
        for p in points {
            let (Some(x), Some(y)) = (p[0].as_f64(), p[1].as_f64()) else { continue };
            let (px, py) = (map(x, x_range, MARGIN, WIDTH - MARGIN), map(y, y_range, HEIGHT - MARGIN, MARGIN));
            writeln!(svg, r#"<circle cx="{px:.2}" cy="{py:.2}" r="1" fill="black"/>"#).unwrap();
        }
    }
    svg.push_str("</svg>\n");
    svg
}
