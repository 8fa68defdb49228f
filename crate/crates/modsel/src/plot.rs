//! Static SVG rendering of mean cumulative regret with ±1 std bands.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use modsel_core::bandit::{RegretTable, RoundSummary};

use crate::output::OutputError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the table; the output depends only on the table and title.
pub fn render_svg(table: &RegretTable, title: &str) -> Result<String, OutputError> {
    if table.is_empty() {
        return Err(OutputError::EmptyTable);
    }
    let rows = table.summary();
    let series: Vec<(&str, Vec<&RoundSummary>)> = table
        .algorithms()
        .map(|a| (a, rows.iter().filter(|r| r.algorithm == a).collect()))
        .collect();
    let x_max = rows.iter().map(|r| r.round).max().unwrap_or(1).max(1) as f64;
    let y_max = rows.iter().map(|r| r.mean + r.std).fold(0.0, f64::max);
    let y_max = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |round: f64| LEFT + plot_w * round / x_max;
    let py = |v: f64| TOP + plot_h * (1.0 - v.clamp(0.0, y_max) / y_max);

    let mut s = String::new();
    let w = &mut s;
    writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(w, r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#, LEFT + plot_w / 2.0, escape(title)).unwrap();

    for k in 0..=5 {
        let xv = x_max * k as f64 / 5.0;
        let yv = y_max * k as f64 / 5.0;
        let (x, y) = (px(xv), py(yv));
        writeln!(w, r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/>"##, TOP, TOP + plot_h).unwrap();
        writeln!(w, r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##, LEFT + plot_w).unwrap();
        writeln!(w, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{xv:.0}</text>"#, TOP + plot_h + 18.0).unwrap();
        writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, tick_label(yv)).unwrap();
    }
    writeln!(
        w,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">round</text>"#, LEFT + plot_w / 2.0, HEIGHT - 15.0).unwrap();
    writeln!(
        w,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">cumulative regret</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    )
    .unwrap();

    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let upper = pts.iter().map(|r| format!("{:.2},{:.2}", px(r.round as f64), py(r.mean + r.std)));
        let lower = pts.iter().rev().map(|r| format!("{:.2},{:.2}", px(r.round as f64), py(r.mean - r.std)));
        let band: Vec<String> = upper.chain(lower).collect();
        writeln!(w, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, band.join(" ")).unwrap();
        let line: Vec<String> = pts.iter().map(|r| format!("{:.2},{:.2}", px(r.round as f64), py(r.mean))).collect();
        writeln!(w, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" ")).unwrap();
        let ly = TOP + 14.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 14.0;
        writeln!(w, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, lx + 24.0).unwrap();
        writeln!(w, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 30.0, ly + 4.0, escape(name)).unwrap();
    }
    writeln!(w, "</svg>").unwrap();
    Ok(s)
}

fn tick_label(v: f64) -> String {
    if v >= 100.0 || v == 0.0 {
        format!("{v:.0}")
    } else if v >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

pub fn emit_plot(table: &RegretTable, title: &str, path: &Path) -> Result<(), OutputError> {
    let svg = render_svg(table, title)?;
    fs::write(path, svg)?;
    Ok(())
}
