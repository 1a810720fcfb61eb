//! Text tables and SVG line plots from study reports.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::nn::ModelKind;
use crate::sweep::{StudyKind, StudyReport};
use crate::train::Task;

/// `mean ± std` in percent with one decimal.
pub fn format_cell(mean: f64, std: f64) -> String {
    format!("{:.1} ± {:.1}", 100.0 * mean, 100.0 * std)
}

struct Column<'a> {
    label: String,
    report: &'a StudyReport,
    x: f64,
}

fn columns(reports: &[StudyReport]) -> Vec<Column<'_>> {
    let mut cols = Vec::new();
    for r in reports {
        for x in r.xs() {
            let label = match r.kind {
                StudyKind::Train => r.dataset.clone(),
                StudyKind::Features => format!("{} d={x}", r.dataset),
                StudyKind::Gamma => format!("γ={x}"),
            };
            cols.push(Column { label, report: r, x });
        }
    }
    cols
}

/// One row per model (plus a `Random` row of 50.0 ± 0.0 when every report
/// is a link-prediction report) and one column per report point.
pub fn render_table(reports: &[StudyReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::param("no reports to tabulate"));
    }
    let cols = columns(reports);
    let mut models: Vec<ModelKind> = reports.iter().flat_map(|r| r.models()).collect();
    models.sort();
    models.dedup();

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["Model".to_string()];
    header.extend(cols.iter().map(|c| c.label.clone()));
    rows.push(header);
    if reports.iter().all(|r| r.task == Task::Link) {
        let mut row = vec!["Random".to_string()];
        row.extend(cols.iter().map(|_| format_cell(0.5, 0.0)));
        rows.push(row);
    }
    for m in models {
        let mut row = vec![m.name().to_uppercase()];
        for c in &cols {
            let cell = c
                .report
                .points
                .iter()
                .find(|p| p.model == m && p.x == c.x)
                .map(|p| format_cell(p.test.mean, p.test.std))
                .unwrap_or_else(|| "-".into());
            row.push(cell);
        }
        rows.push(row);
    }

    let ncol = rows[0].len();
    let widths: Vec<usize> = (0..ncol)
        .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}", w = w))
            .collect();
        let _ = writeln!(out, "| {} |", cells.join(" | "));
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            let _ = writeln!(out, "|-{}-|", rule.join("-|-"));
        }
    }
    Ok(out)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Series {
    label: String,
    /// (x, mean, std) in percent, sorted by x.
    points: Vec<(f64, f64, f64)>,
}

fn padded(lo: f64, hi: f64, pad: f64) -> (f64, f64) {
    if hi - lo < 1e-12 {
        (lo - pad, hi + pad)
    } else {
        let m = 0.05 * (hi - lo);
        (lo - m, hi + m)
    }
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

/// Line plot of test metric (percent) against the study x-axis, one line per
/// model with a shaded ±1 std band. A series with a single point is drawn
/// as a marker only. Output is deterministic for identical input.
pub fn render_svg(reports: &[StudyReport]) -> Result<String> {
    if reports.is_empty() || reports.iter().all(|r| r.points.is_empty()) {
        return Err(Error::param("no points to plot"));
    }
    let many = reports.len() > 1;
    let mut series = Vec::new();
    for r in reports {
        for m in r.models() {
            let mut points: Vec<(f64, f64, f64)> = r
                .series(m)
                .iter()
                .map(|p| (p.x, 100.0 * p.test.mean, 100.0 * p.test.std))
                .collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            let label = if many {
                format!("{} {}", r.dataset, m.name().to_uppercase())
            } else {
                m.name().to_uppercase()
            };
            series.push(Series { label, points });
        }
    }
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, m, s) in all {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(m - s);
        y_hi = y_hi.max(m + s);
    }
    let (x_lo, x_hi) = padded(x_lo, x_hi, 1.0);
    let (y_lo, y_hi) = padded(y_lo, y_hi, 1.0);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let kind = reports[0].kind;
    let x_label = match kind {
        StudyKind::Features => "number of features",
        StudyKind::Gamma => "γ",
        StudyKind::Train => "feature dimension",
    };
    let y_label = match reports[0].task {
        Task::Link => "test ROC AUC (%)",
        Task::Node => "test accuracy (%)",
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, y0, x1, y1) = (LEFT, TOP + plot_h, LEFT + plot_w, TOP);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = x_lo + t * (x_hi - x_lo);
        let yv = y_lo + t * (y_hi - y_lo);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + 5.0,
            y0 + 20.0,
            tick_label(xv)
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{y_label}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if s.points.len() > 1 {
            let upper = s.points.iter().map(|&(x, m, d)| (sx(x), sy(m + d)));
            let lower = s.points.iter().rev().map(|&(x, m, d)| (sx(x), sy(m - d)));
            let poly: Vec<String> = upper
                .chain(lower)
                .map(|(px, py)| format!("{px:.2},{py:.2}"))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                poly.join(" ")
            );
            let line: Vec<String> = s
                .points
                .iter()
                .map(|&(x, m, _)| format!("{:.2},{:.2}", sx(x), sy(m)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                line.join(" ")
            );
        }
        for &(x, m, _) in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
                sx(x),
                sy(m)
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx:.2}" y="{:.2}" width="14" height="4" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            ly - 2.0,
            lx + 20.0,
            ly + 4.0,
            s.label
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{HyperConfig, StudyPoint};
    use crate::train::MetricSummary;

    fn point(x: f64, model: ModelKind, values: Vec<f64>) -> StudyPoint {
        StudyPoint {
            x,
            model,
            test: MetricSummary::from_values(values).unwrap(),
            val_mean: 0.5,
            best: HyperConfig { lr: 0.01, weight_decay: 0.0, dropout: 0.0, hidden_dim: 16, num_layers: 2 },
        }
    }

    fn table3() -> StudyReport {
        StudyReport {
            kind: StudyKind::Train,
            dataset: "WS1000".into(),
            task: Task::Link,
            budget: 1,
            points: vec![
                point(1000.0, ModelKind::Mlp, vec![0.47, 0.51]),
                point(1000.0, ModelKind::Gcn, vec![0.547, 0.547]),
            ],
        }
    }

    #[test]
    fn table3_layout() {
        let t = render_table(&[table3()]).unwrap();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].contains("Model") && lines[0].contains("WS1000"));
        assert!(lines[2].starts_with("| Random") && lines[2].contains("50.0 ± 0.0"));
        assert!(lines[3].starts_with("| MLP") && lines[3].contains("49.0 ± 2.8"));
        assert!(lines[4].starts_with("| GCN") && lines[4].contains("54.7 ± 0.0"));
    }

    #[test]
    fn node_tables_have_no_random_row() {
        let mut r = table3();
        r.task = Task::Node;
        assert!(!render_table(&[r]).unwrap().contains("Random"));
    }

    #[test]
    fn single_point_is_a_marker() {
        let mut r = table3();
        r.points.truncate(1);
        let svg = render_svg(&[r]).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(!svg.contains("<polygon"));
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn bands_and_lines_for_series() {
        let r = StudyReport {
            kind: StudyKind::Gamma,
            dataset: "WS1000".into(),
            task: Task::Link,
            budget: 1,
            points: vec![
                point(0.0, ModelKind::Mlp, vec![0.5, 0.52]),
                point(0.5, ModelKind::Mlp, vec![0.55, 0.6]),
                point(1.0, ModelKind::Mlp, vec![0.6, 0.62]),
            ],
        };
        let svg = render_svg(&[r.clone()]).unwrap();
        assert_eq!(svg.matches("<polygon").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 3);
        assert_eq!(svg, render_svg(&[r]).unwrap());
    }
}
