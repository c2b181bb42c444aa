//! Static SVG line plots of target, raw and smoothed trajectories.

use std::fmt::Write;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub dashed: bool,
    pub values: &'a [f64],
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 220.0;
const MARGIN: f64 = 40.0;

fn bounds(series: &[Series<'_>]) -> (f64, f64) {
    let (lo, hi) = series
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// One panel as an SVG group, offset vertically by `y0`.
fn panel(out: &mut String, title: &str, frame_rate: f64, series: &[Series<'_>], y0: f64) {
    let (lo, hi) = bounds(series);
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(0).max(2);
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let x = |i: usize| MARGIN + plot_w * i as f64 / (n - 1) as f64;
    let y = |v: f64| y0 + MARGIN + plot_h * (1.0 - (v - lo) / (hi - lo));
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN}" y="{}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#999"/>"##,
        y0 + MARGIN
    );
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="13">{title}</text>"#,
        y0 + MARGIN - 8.0
    );
    let _ = writeln!(
        out,
        r#"<text x="4" y="{}" font-family="sans-serif" font-size="10">{hi:.2}</text><text x="4" y="{}" font-family="sans-serif" font-size="10">{lo:.2}</text>"#,
        y0 + MARGIN + 10.0,
        y0 + HEIGHT - MARGIN
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="end">{:.2} s</text>"#,
        WIDTH - MARGIN,
        y0 + HEIGHT - MARGIN + 14.0,
        (n - 1) as f64 / frame_rate
    );
    for (k, s) in series.iter().enumerate() {
        let points: Vec<String> = s
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, v)| format!("{:.2},{:.2}", x(i), y(*v)))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.2"{dash} points="{}"/>"#,
            s.color,
            points.join(" ")
        );
        let lx = WIDTH - MARGIN - 90.0;
        let ly = y0 + MARGIN + 12.0 + 12.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="{}"{dash}/><text x="{}" y="{ly}" font-family="sans-serif" font-size="10">{}</text>"#,
            ly - 3.0,
            lx + 16.0,
            ly - 3.0,
            s.color,
            lx + 20.0,
            s.label
        );
    }
}

fn document(height: f64, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" viewBox=\"0 0 {WIDTH} {height}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

pub fn single(title: &str, frame_rate: f64, series: &[Series<'_>]) -> String {
    let mut body = String::new();
    panel(&mut body, title, frame_rate, series, 0.0);
    document(HEIGHT, &body)
}

/// All panels stacked vertically in one document.
pub fn stacked(panels: &[(String, Vec<Series<'_>>)], frame_rate: f64) -> String {
    let mut body = String::new();
    for (k, (title, series)) in panels.iter().enumerate() {
        panel(&mut body, title, frame_rate, series, k as f64 * HEIGHT);
    }
    document(HEIGHT * panels.len().max(1) as f64, &body)
}
