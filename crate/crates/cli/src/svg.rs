//! Minimal line-plot SVG writer.

use std::fmt::Write as _;

use crate::comparison::ComparisonRow;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stroke {
    Solid,
    Dashed,
    Dotted,
}

impl Stroke {
    fn dasharray(self) -> Option<&'static str> {
        match self {
            Stroke::Solid => None,
            Stroke::Dashed => Some("8,5"),
            Stroke::Dotted => Some("2,4"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub stroke: Stroke,
    pub points: Vec<(f64, f64)>,
}

/// Line plot with linear axes, `x ∈ [0, x_max]` and `y ∈ [0, 1]`.
pub fn render(title: &str, x_label: &str, y_label: &str, x_max: f64, series: &[Series]) -> String {
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + pw * x / x_max;
    let sy = |y: f64| TOP + ph * (1.0 - y);
    let mut s = String::new();
    let w = &mut s;
    writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="13">"#
    )
    .unwrap();
    writeln!(w, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(w, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#, LEFT + pw / 2.0, escape(title))
        .unwrap();

    writeln!(w, r##"<g stroke="#cccccc" stroke-width="0.5">"##).unwrap();
    for i in 0..=10 {
        let x = sx(x_max * i as f64 / 10.0);
        writeln!(w, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}"/>"#, sy(0.0), sy(1.0)).unwrap();
    }
    for i in 0..=5 {
        let y = sy(i as f64 / 5.0);
        writeln!(w, r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/>"#, sx(0.0), sx(x_max)).unwrap();
    }
    writeln!(w, "</g>").unwrap();
    writeln!(
        w,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black" stroke-width="1"/>"#
    )
    .unwrap();

    for i in 0..=10 {
        let v = x_max * i as f64 / 10.0;
        writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, sx(v), sy(0.0) + 18.0, tick(v)).unwrap();
    }
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, sx(0.0) - 6.0, sy(v) + 4.0, tick(v)).unwrap();
    }
    writeln!(w, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 18.0, escape(x_label))
        .unwrap();
    writeln!(
        w,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    )
    .unwrap();

    for (i, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y.clamp(0.0, 1.0))))
            .collect();
        let dash = ser.stroke.dasharray().map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
        writeln!(
            w,
            r#"<polyline id="series-{i}" fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
            ser.color,
            pts.join(" ")
        )
        .unwrap();
    }

    let lx = WIDTH - RIGHT + 15.0;
    writeln!(w, r#"<g id="legend">"#).unwrap();
    for (i, ser) in series.iter().enumerate() {
        let y = TOP + 15.0 + 22.0 * i as f64;
        let dash = ser.stroke.dasharray().map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
        writeln!(
            w,
            r#"<line x1="{lx:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{}" stroke-width="1.5"{dash}/>"#,
            lx + 30.0,
            ser.color
        )
        .unwrap();
        writeln!(w, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 38.0, y + 4.0, escape(&ser.label)).unwrap();
    }
    writeln!(w, "</g>").unwrap();
    writeln!(w, "</svg>").unwrap();
    s
}

/// Perturbative (dashed), small-rotation (dotted) and exact (solid) Pe(τ).
pub fn comparison_plot(title: &str, tau_max: f64, rows: &[ComparisonRow]) -> String {
    let take = |f: fn(&ComparisonRow) -> f64| rows.iter().map(|r| (r.tau, f(r))).collect::<Vec<_>>();
    let mut series = vec![Series {
        label: "perturbative".into(),
        color: "#d62728",
        stroke: Stroke::Dashed,
        points: take(|r| r.pe_pert),
    }];
    if rows.iter().any(|r| r.pe_small_rot.is_finite()) {
        series.push(Series {
            label: "small-rotation".into(),
            color: "#1f77b4",
            stroke: Stroke::Dotted,
            points: take(|r| r.pe_small_rot),
        });
    }
    series.push(Series { label: "exact".into(), color: "#333333", stroke: Stroke::Solid, points: take(|r| r.pe_exact) });
    render(title, "τ = Ωt", "Pe(τ)", tau_max, &series)
}

fn tick(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<ComparisonRow> {
        (0..5).map(|i| ComparisonRow::new(i as f64, 0.5, 0.4, 0.6, 0.0)).collect()
    }

    #[test]
    fn declares_exactly_three_labelled_series() {
        let svg = comparison_plot("λ = 0.1", 4.0, &rows());
        assert_eq!(svg.matches("<polyline").count(), 3);
        for label in ["perturbative", "small-rotation", "exact"] {
            assert!(svg.contains(&format!(">{label}</text>")));
        }
        assert!(svg.contains(r#"stroke-dasharray="8,5""#) && svg.contains(r#"stroke-dasharray="2,4""#));
    }

    #[test]
    fn output_is_deterministic() {
        assert_eq!(comparison_plot("t", 4.0, &rows()), comparison_plot("t", 4.0, &rows()));
    }

    #[test]
    fn points_map_into_the_plot_area() {
        let svg = render(
            "t",
            "x",
            "y",
            1.0,
            &[Series { label: "s".into(), color: "black", stroke: Stroke::Solid, points: vec![(0.0, 0.0), (1.0, 1.0)] }],
        );
        assert!(svg.contains(&format!("points=\"{:.2},{:.2} {:.2},{:.2}\"", LEFT, HEIGHT - BOTTOM, WIDTH - RIGHT, TOP)));
    }

    #[test]
    fn ticks_drop_trailing_zeros() {
        assert_eq!(tick(2.0), "2");
        assert_eq!(tick(0.4), "0.4");
    }
}
