//! Minimal SVG line charts of the aggregate metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::harness::{self, MetricRow, PolicySummary};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Renders `series` as polylines with a legend and min/max axis labels.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x0, x1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{title}</text>"#, WIDTH / 2.0);
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{left},{top} L{left},{bottom} L{right},{bottom}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(svg, r#"<text x="{left}" y="{}" text-anchor="middle">{x0:.4}</text>"#, bottom + 16.0);
    let _ = writeln!(svg, r#"<text x="{right}" y="{}" text-anchor="middle">{x1:.4}</text>"#, bottom + 16.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{bottom}" text-anchor="end">{y0:.4}</text>"#, left - 4.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{y1:.4}</text>"#, left - 4.0, top + 4.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, WIDTH / 2.0, HEIGHT - 20.0);
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{y_label}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
        let ly = top + 14.0 * i as f64;
        let _ = writeln!(svg, r#"<text x="{}" y="{ly}" fill="{color}">{}</text>"#, right - 120.0, s.label);
    }
    svg.push_str("</svg>\n");
    svg
}

fn by_policy(summary: &[PolicySummary]) -> Vec<Series> {
    let mut groups: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for s in summary {
        groups.entry(&s.policy).or_default().push((s.users as f64, s.mean));
    }
    groups
        .into_iter()
        .map(|(label, points)| Series { label: label.to_string(), points })
        .collect()
}

/// Writes convergence, hit ratio and objective charts next to the CSVs.
pub fn write_plots(rows: &[MetricRow], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut curves: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for p in harness::convergence_curve(rows) {
        let label = match p.lr {
            Some(lr) => format!("N={} lr={lr}", p.users),
            None => format!("N={}", p.users),
        };
        curves.entry(label).or_default().push((p.episode as f64, p.mean_reward));
    }
    let fig3: Vec<Series> = curves.into_iter().map(|(label, points)| Series { label, points }).collect();

    let charts = [
        ("fig3_convergence.svg", line_chart("Training reward", "episode", "mean reward", &fig3)),
        (
            "fig4_hit_ratio.svg",
            line_chart("Cache hit ratio", "users", "hit ratio", &by_policy(&harness::hit_ratio_summary(rows))),
        ),
        (
            "fig5_objective.svg",
            line_chart("Objective", "users", "mean utility", &by_policy(&harness::objective_summary(rows))),
        ),
    ];
    let mut written = Vec::new();
    for (name, svg) in charts {
        let path = out_dir.join(name);
        fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_well_formed() {
        let svg = line_chart("t", "x", "y", &[Series { label: "a".into(), points: vec![(0.0, 1.0), (1.0, 2.0)] }]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        let empty = line_chart("t", "x", "y", &[]);
        assert!(empty.contains("</svg>"));
    }
}
