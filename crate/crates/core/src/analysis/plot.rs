use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{AnalysisError, FeatureSource, LegitimacyViews};
use crate::training::SweepPoint;

/// Fixed colour per emotion class name, shared by both schemes.
pub fn emotion_color(class: &str) -> &'static str {
    match class {
        "joy" => "#f1c40f",
        "surprise" => "#e67e22",
        "anger" => "#e74c3c",
        "sadness" => "#3498db",
        "disgust" => "#8e44ad",
        "fear" => "#2c3e50",
        "trust" => "#27ae60",
        "anticipation" => "#16a085",
        _ => "#7f8c8d",
    }
}

const SERIES_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

const PANEL: f64 = 320.0;
const MARGIN: f64 = 48.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn write_file(path: &Path, contents: &str) -> Result<(), AnalysisError> {
    std::fs::write(path, contents).map_err(|e| AnalysisError::io(path, e))
}

#[derive(Debug, Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if hi - lo < 1e-12 {
            Range { lo: lo - 0.5, hi: hi + 0.5 }
        } else {
            let pad = 0.05 * (hi - lo);
            Range { lo: lo - pad, hi: hi + pad }
        }
    }

    fn map(&self, v: f64, len: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo) * len
    }
}

fn axes(out: &mut String, x0: f64, y0: f64, w: f64, h: f64, xlabel: &str, ylabel: &str) {
    let _ =
        writeln!(out, r##"<rect x="{x0:.1}" y="{y0:.1}" width="{w:.1}" height="{h:.1}" fill="none" stroke="#333"/>"##);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"#,
        x0 + w / 2.0,
        y0 + h + 32.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        x0 - 32.0,
        y0 + h / 2.0,
        x0 - 32.0,
        y0 + h / 2.0,
        escape(ylabel)
    );
}

/// Files written by [`emit_scatter`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterFiles {
    pub csv: PathBuf,
    pub svgs: Vec<PathBuf>,
}

/// CSV of every projected point: `id,label,emotion,pc1,pc2,pc3`.
pub fn scatter_csv(views: &LegitimacyViews) -> String {
    let mut out = String::from("id,label,emotion,pc1,pc2,pc3\n");
    for view in &views.views {
        for p in &view.points {
            let class = views.scheme.class_name(p.emotion).unwrap_or("unknown");
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6},{:.6}",
                p.id, view.label, class, p.coords[0], p.coords[1], p.coords[2]
            );
        }
    }
    out
}

/// Writes the scatter CSV and one SVG per veracity label into `dir`. Each
/// SVG shows the PC1–PC2 and PC1–PC3 projections side by side, on axes
/// shared by both labels.
pub fn emit_scatter(views: &LegitimacyViews, dir: &Path, source: FeatureSource) -> Result<ScatterFiles, AnalysisError> {
    let all: Vec<&Vec<f64>> = views.views.iter().flat_map(|v| v.points.iter().map(|p| &p.coords)).collect();
    if all.is_empty() {
        return Err(AnalysisError::InvalidInput("no points to plot".into()));
    }
    if let Some(short) = all.iter().find(|c| c.len() < 3) {
        return Err(AnalysisError::DimensionMismatch { expected: 3, got: short.len() });
    }
    let ranges: Vec<Range> = (0..3).map(|d| Range::of(all.iter().map(|c| c[d]))).collect();
    let scheme = views.scheme.name().to_lowercase();

    let csv = dir.join(format!("scatter_{scheme}.csv"));
    write_file(&csv, &scatter_csv(views))?;

    let mut svgs = Vec::new();
    for view in &views.views {
        let width = 2.0 * PANEL + 3.0 * MARGIN + 120.0;
        let height = PANEL + 2.0 * MARGIN + 24.0;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let title =
            format!("Label {} — {} ({}), n = {}", view.label, views.scheme, source.describe(), view.points.len());
        let _ = writeln!(out, r#"<text x="{MARGIN}" y="24" font-size="14">{}</text>"#, escape(&title));
        for (panel, dim) in [1usize, 2].into_iter().enumerate() {
            let x0 = MARGIN + panel as f64 * (PANEL + MARGIN);
            let y0 = MARGIN;
            axes(&mut out, x0, y0, PANEL, PANEL, "PC1", &format!("PC{}", dim + 1));
            for p in &view.points {
                let class = views.scheme.class_name(p.emotion).unwrap_or("unknown");
                let cx = x0 + ranges[0].map(p.coords[0], PANEL);
                let cy = y0 + PANEL - ranges[dim].map(p.coords[dim], PANEL);
                let _ = writeln!(
                    out,
                    r#"<circle class="point" cx="{cx:.2}" cy="{cy:.2}" r="2.5" fill="{}" fill-opacity="0.7"><title>{} ({class})</title></circle>"#,
                    emotion_color(class),
                    escape(&p.id)
                );
            }
        }
        let lx = 2.0 * PANEL + 2.5 * MARGIN;
        for (i, class) in views.scheme.classes().iter().enumerate() {
            let y = MARGIN + 12.0 + 18.0 * i as f64;
            let _ = writeln!(out, r#"<circle cx="{lx:.1}" cy="{y:.1}" r="5" fill="{}"/>"#, emotion_color(class));
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="12">{class} ({})</text>"#,
                lx + 10.0,
                y + 4.0,
                view.histogram[i]
            );
        }
        out.push_str("</svg>\n");
        let path = dir.join(format!("pca_{scheme}_label{}.svg", view.label));
        write_file(&path, &out)?;
        svgs.push(path);
    }
    Ok(ScatterFiles { csv, svgs })
}

/// One model's accuracy-versus-α curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSeries {
    pub name: String,
    pub points: Vec<SweepPoint>,
}

fn check_series(series: &[SweepSeries]) -> Result<(), AnalysisError> {
    if series.is_empty() {
        return Err(AnalysisError::InvalidInput("no sweep series to plot".into()));
    }
    if let Some(s) = series.iter().find(|s| s.points.is_empty()) {
        return Err(AnalysisError::InvalidInput(format!("sweep series `{}` is empty", s.name)));
    }
    Ok(())
}

/// Line chart of test accuracy against α with one marker per point.
pub fn sweep_svg(series: &[SweepSeries]) -> Result<String, AnalysisError> {
    check_series(series)?;
    let points = || series.iter().flat_map(|s| s.points.iter());
    let xr = Range::of(points().map(|p| p.alpha));
    let yr = Range::of(points().map(|p| p.metrics.accuracy));
    let (w, h) = (2.0 * PANEL, PANEL);
    let width = w + 2.0 * MARGIN + 160.0;
    let height = h + 2.0 * MARGIN + 24.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ =
        writeln!(out, r#"<text x="{MARGIN}" y="24" font-size="14">Test accuracy across auxiliary loss weights</text>"#);
    axes(&mut out, MARGIN, MARGIN, w, h, "alpha", "accuracy");
    for (i, s) in series.iter().enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        let xy: Vec<(f64, f64)> = s
            .points
            .iter()
            .map(|p| (MARGIN + xr.map(p.alpha, w), MARGIN + h - yr.map(p.metrics.accuracy, h)))
            .collect();
        let path: Vec<String> = xy.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ =
            writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        for ((x, y), p) in xy.iter().zip(&s.points) {
            let _ = writeln!(
                out,
                r#"<circle class="marker" data-series="{}" cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{color}"><title>alpha {:.2}: {:.4}</title></circle>"#,
                escape(&s.name),
                p.alpha,
                p.metrics.accuracy
            );
        }
        let ly = MARGIN + 12.0 + 18.0 * i as f64;
        let lx = MARGIN + w + 20.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            lx + 16.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12">{}</text>"#,
            lx + 22.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    for tick in [xr.lo, xr.hi] {
        let x = MARGIN + xr.map(tick, w);
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="10">{tick:.2}</text>"#,
            MARGIN + h + 14.0
        );
    }
    for tick in [yr.lo, yr.hi] {
        let y = MARGIN + h - yr.map(tick, h);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{y:.1}" text-anchor="end" font-size="10">{tick:.3}</text>"#,
            MARGIN - 4.0
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Writes the sweep chart and a CSV of every plotted point
/// (`series,alpha,beta,accuracy,precision,recall,f1`).
pub fn emit_sweep_plot(series: &[SweepSeries], svg_path: &Path, csv_path: &Path) -> Result<(), AnalysisError> {
    let svg = sweep_svg(series)?;
    let mut csv = String::from("series,alpha,beta,accuracy,precision,recall,f1\n");
    for s in series {
        for p in &s.points {
            let m = &p.metrics;
            let _ = writeln!(
                csv,
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                s.name, p.alpha, p.beta, m.accuracy, m.precision, m.recall, m.f1
            );
        }
    }
    write_file(csv_path, &csv)?;
    write_file(svg_path, &svg)
}
