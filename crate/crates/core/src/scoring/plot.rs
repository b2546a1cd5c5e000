// SPDX-License-Identifier: Apache-2.0

//! QPS/accuracy tradeoff plots as SVG or CSV.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TradeoffPoint;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotFormat {
    Svg,
    Csv,
}

impl PlotFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "svg" => Ok(PlotFormat::Svg),
            "csv" => Ok(PlotFormat::Csv),
            _ => Err(Error::invalid(format!("unknown plot format `{s}` (expected svg or csv)"))),
        }
    }
}

/// One algorithm's points.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotSeries {
    pub name: String,
    pub points: Vec<TradeoffPoint>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    algorithm: String,
    config: String,
    qps: f64,
    accuracy: f64,
}

/// Writes the plot. `cutoff_qps` draws a vertical line in SVG output.
pub fn emit_tradeoff_plot(
    series: &[PlotSeries],
    path: &Path,
    format: PlotFormat,
    cutoff_qps: Option<f64>,
) -> Result<()> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::invalid("nothing to plot"));
    }
    match format {
        PlotFormat::Csv => write_csv(series, path),
        PlotFormat::Svg => {
            let mut out = BufWriter::new(File::create(path)?);
            out.write_all(render_svg(series, cutoff_qps).as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn write_csv(series: &[PlotSeries], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in series {
        for p in &s.points {
            w.serialize(CsvRow {
                algorithm: s.name.clone(),
                config: p.config.clone(),
                qps: p.qps,
                accuracy: p.accuracy,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV written by [`emit_tradeoff_plot`]; series keep their first
/// appearance order.
pub fn read_tradeoff_csv(path: &Path) -> Result<Vec<PlotSeries>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out: Vec<PlotSeries> = Vec::new();
    for row in r.deserialize() {
        let row: CsvRow = row?;
        let point = TradeoffPoint::new(row.qps, row.accuracy, row.config);
        match out.iter_mut().find(|s| s.name == row.algorithm) {
            Some(s) => s.points.push(point),
            None => out.push(PlotSeries {
                name: row.algorithm,
                points: vec![point],
            }),
        }
    }
    Ok(out)
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn render_svg(series: &[PlotSeries], cutoff: Option<f64>) -> String {
    let qps = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.qps))
        .chain(cutoff)
        .filter(|q| *q > 0.0 && q.is_finite());
    let (mut lo, mut hi) = qps.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| {
        (lo.min(q.log10()), hi.max(q.log10()))
    });
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 0.5;
        hi += 0.5;
    }
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let x = |q: f64| MARGIN + (q.log10() - lo) / (hi - lo) * plot_w;
    let y = |a: f64| HEIGHT - MARGIN - a.clamp(0.0, 1.0) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for decade in lo.ceil() as i32..=hi.floor() as i32 {
        let tx = x(10f64.powi(decade));
        let _ = writeln!(
            svg,
            r#"<text x="{tx:.1}" y="{:.1}" font-size="11" text-anchor="middle">1e{decade}</text>"#,
            y0 + 16.0
        );
    }
    for tick in 0..=5 {
        let a = tick as f64 / 5.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{a:.1}</text>"#,
            x0 - 6.0,
            y(a) + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">queries per second (log scale)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">accuracy</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    if let Some(c) = cutoff.filter(|c| *c > 0.0 && c.is_finite()) {
        let cx = x(c);
        let _ = writeln!(
            svg,
            r#"<line x1="{cx:.2}" y1="{y0}" x2="{cx:.2}" y2="{y1}" stroke="gray" stroke-dasharray="6 4"/>"#
        );
    }
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut pts: Vec<&TradeoffPoint> = s.points.iter().filter(|p| p.qps > 0.0).collect();
        pts.sort_by(|a, b| a.qps.total_cmp(&b.qps));
        let mut d = String::new();
        for (j, p) in pts.iter().enumerate() {
            let _ = write!(d, "{}{:.2} {:.2} ", if j == 0 { "M" } else { "L" }, x(p.qps), y(p.accuracy));
        }
        let _ = writeln!(
            svg,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            d.trim_end()
        );
        for p in &pts {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                x(p.qps),
                y(p.accuracy)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" fill="{color}">{}</text>"#,
            x1 - 150.0,
            y1 + 16.0 * (i as f64 + 1.0),
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let series = vec![
            PlotSeries {
                name: "a".into(),
                points: vec![TradeoffPoint::new(1234.5, 0.75, "x"), TradeoffPoint::new(99.0, 0.9, "y")],
            },
            PlotSeries {
                name: "b,c".into(),
                points: vec![TradeoffPoint::new(0.1 + 0.2, 1.0 / 3.0, "z")],
            },
        ];
        emit_tradeoff_plot(&series, &path, PlotFormat::Csv, None).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "algorithm,config,qps,accuracy");
        assert_eq!(text.lines().count(), 4);
        assert_eq!(read_tradeoff_csv(&path).unwrap(), series);
    }

    #[test]
    fn svg_has_one_path_per_series() {
        let series = vec![
            PlotSeries {
                name: "a<b>".into(),
                points: vec![TradeoffPoint::new(100.0, 0.5, "x")],
            },
            PlotSeries {
                name: "c".into(),
                points: vec![TradeoffPoint::new(1000.0, 0.7, "y"), TradeoffPoint::new(50.0, 0.9, "z")],
            },
        ];
        let svg = render_svg(&series, Some(200.0));
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.contains("a&lt;b&gt;"));
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn empty_input_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_tradeoff_plot(&[], &dir.path().join("x.svg"), PlotFormat::Svg, None).is_err());
    }
}
