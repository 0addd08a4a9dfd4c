//! Plot data: a CSV of sweep rows and an SVG line chart of coverage and
//! sum rate against range, one series per pipeline.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{HarnessError, Pipeline, SweepResult};

pub const CSV_HEADER: &str =
    "range_m,pipeline,mean_coverage,mean_sum_rate_bps,mean_q_total,std_coverage,std_sum_rate_bps,std_q_total,n";

#[derive(Serialize)]
struct CsvRow<'a> {
    range_m: f64,
    pipeline: &'a str,
    mean_coverage: f64,
    mean_sum_rate_bps: f64,
    mean_q_total: f64,
    std_coverage: f64,
    std_sum_rate_bps: f64,
    std_q_total: f64,
    n: usize,
}

/// CSV bytes for the sweep; an empty sweep yields the header line alone.
pub fn write_csv(sweep: &SweepResult) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(',')).map_err(csv_err)?;
    for r in &sweep.rows {
        w.serialize(CsvRow {
            range_m: r.range_m,
            pipeline: r.pipeline.as_str(),
            mean_coverage: r.mean_coverage,
            mean_sum_rate_bps: r.mean_sum_rate_bps,
            mean_q_total: r.mean_q_total,
            std_coverage: r.std_coverage,
            std_sum_rate_bps: r.std_sum_rate_bps,
            std_q_total: r.std_q_total,
            n: r.n,
        })
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))
}

fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Io(std::io::Error::other(e))
}

const WIDTH: f64 = 960.0;
const PANEL_H: f64 = 300.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn pipelines(sweep: &SweepResult) -> Vec<Pipeline> {
    let mut p: Vec<Pipeline> = sweep.rows.iter().map(|r| r.pipeline).collect();
    p.sort();
    p.dedup();
    p
}

/// Two stacked panels (coverage ratio, sum rate in Mbps) with one polyline
/// per pipeline each. Every polyline carries its data in `data-x`/`data-y`.
pub fn render_svg(sweep: &SweepResult) -> String {
    let total_h = 2.0 * PANEL_H + 3.0 * MARGIN;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{total_h}" viewBox="0 0 {WIDTH} {total_h}" font-family="sans-serif" font-size="12">"#
    );
    let ranges: Vec<f64> = sweep.rows.iter().map(|r| r.range_m).collect();
    let (x_lo, x_hi) = ranges.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let panels: [(&str, &str, fn(&super::SweepRow) -> f64); 2] = [
        ("coverage", "mean coverage ratio", |r| r.mean_coverage),
        ("sum_rate_mbps", "mean sum rate (Mbps)", |r| r.mean_sum_rate_bps / 1e6),
    ];
    for (i, (key, label, value)) in panels.iter().enumerate() {
        let top = MARGIN + i as f64 * (PANEL_H + MARGIN);
        let (left, right, bottom) = (MARGIN + 20.0, WIDTH - 160.0, top + PANEL_H);
        let vals: Vec<f64> = sweep.rows.iter().map(value).filter(|v| v.is_finite()).collect();
        let (mut y_lo, mut y_hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if !(y_hi > y_lo) {
            y_lo = if y_lo.is_finite() { y_lo - 1.0 } else { 0.0 };
            y_hi = y_lo + 2.0;
        }
        let sx = |x: f64| if x_hi > x_lo { left + (x - x_lo) / (x_hi - x_lo) * (right - left) } else { (left + right) / 2.0 };
        let sy = |y: f64| bottom - (y - y_lo) / (y_hi - y_lo) * (bottom - top);
        let _ = writeln!(
            svg,
            r#"<g id="panel-{key}"><text x="{left}" y="{:.1}">{label} vs communication range (m)</text>"#,
            top - 10.0
        );
        let _ = writeln!(
            svg,
            r##"<rect x="{left}" y="{top}" width="{:.1}" height="{PANEL_H}" fill="none" stroke="#888"/>"##,
            right - left
        );
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}">{y_hi:.3}</text>"#, left - 55.0, top + 4.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}">{y_lo:.3}</text>"#, left - 55.0, bottom);
        if x_lo.is_finite() {
            let _ = writeln!(svg, r#"<text x="{left}" y="{:.1}">{x_lo}</text>"#, bottom + 16.0);
            let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}">{x_hi}</text>"#, right - 20.0, bottom + 16.0);
        }
        for (j, p) in pipelines(sweep).iter().enumerate() {
            let rows: Vec<&super::SweepRow> = sweep.rows.iter().filter(|r| r.pipeline == *p).collect();
            let pts: Vec<String> = rows.iter().map(|r| format!("{:.2},{:.2}", sx(r.range_m), sy(value(r)))).collect();
            let xs: Vec<String> = rows.iter().map(|r| r.range_m.to_string()).collect();
            let ys: Vec<String> = rows.iter().map(|r| value(r).to_string()).collect();
            let color = COLORS[j % COLORS.len()];
            let _ = writeln!(
                svg,
                r#"<polyline class="series" data-series="{key}/{}" data-x="{}" data-y="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                p.as_str(),
                xs.join(" "),
                ys.join(" "),
                pts.join(" ")
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
                right + 10.0,
                top + 20.0 + 18.0 * j as f64,
                p.as_str()
            );
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes `sweep.csv`, and `sweep.svg` when `svg` is set, into `dir`.
pub fn write_plot_data(sweep: &SweepResult, dir: &Path, svg: bool) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join("sweep.csv");
    std::fs::write(&csv_path, write_csv(sweep)?)?;
    let mut out = vec![csv_path];
    if svg {
        let svg_path = dir.join("sweep.svg");
        std::fs::write(&svg_path, render_svg(sweep))?;
        out.push(svg_path);
    }
    Ok(out)
}
