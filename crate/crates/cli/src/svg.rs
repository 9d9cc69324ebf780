//! Minimal deterministic SVG line charts.

use std::fmt::Write as _;

use crate::error::Failure;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

pub struct Series<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

/// Plot area x coordinate for a fraction of the time axis.
pub fn axis_x(fraction: f64) -> f64 {
    LEFT + fraction * (WIDTH - LEFT - RIGHT)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Render series on a shared grid `x`, with an optional dashed marker at
/// `split` (a fraction of the time axis).
pub fn emit_svg(series: &[Series<'_>], x: &[f64], split: Option<f64>, title: &str) -> Result<String, Failure> {
    if series.is_empty() {
        return Err(Failure::Usage("nothing to plot".into()));
    }
    let n = x.len();
    if n == 0 || series.iter().any(|s| s.values.len() != n) {
        return Err(Failure::Usage(format!(
            "every series must have {n} > 0 points on the shared grid"
        )));
    }
    if let Some(f) = split {
        if !(0.0..=1.0).contains(&f) {
            return Err(Failure::Usage(format!("split marker {f} is outside [0, 1]")));
        }
    }
    let finite = || series.iter().flat_map(|s| s.values.iter().copied()).filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return Err(Failure::Usage("series contain no finite values".into()));
    }
    if hi - lo < 1e-12 {
        let pad = if lo.abs() > 0.0 { 0.1 * lo.abs() } else { 0.5 };
        lo -= pad;
        hi += pad;
    }
    let (x0, x1) = (x[0], x[n - 1]);
    let span = if x1 > x0 { x1 - x0 } else { 1.0 };
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |t: f64| axis_x((t - x0) / span);
    let py = |v: f64| TOP + (hi - v) / (hi - lo) * plot_h;

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{LEFT}" y="18" font-size="14">{}</text>"#, escape(title));
    let (ax_right, ax_bottom) = (WIDTH - RIGHT, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        r#"<path d="M{LEFT},{TOP} L{LEFT},{ax_bottom} L{ax_right},{ax_bottom}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let v = lo + f * (hi - lo);
        let y = py(v);
        let _ = writeln!(out, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            y + 4.0,
            format_tick(v)
        );
        let t = x0 + f * span;
        let xx = px(t);
        let _ = writeln!(out, r#"<line x1="{xx:.2}" y1="{ax_bottom}" x2="{xx:.2}" y2="{}" stroke="black"/>"#, ax_bottom + 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{xx:.2}" y="{}" text-anchor="middle">{}</text>"#,
            ax_bottom + 20.0,
            format_tick(t)
        );
    }
    if let Some(f) = split {
        let xx = axis_x(f);
        let _ = writeln!(
            out,
            r##"<line class="split" x1="{xx:.2}" y1="{TOP}" x2="{xx:.2}" y2="{ax_bottom}" stroke="#555555" stroke-dasharray="6 4"/>"##
        );
    }
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut points = String::new();
        for (t, v) in x.iter().zip(s.values) {
            if v.is_finite() {
                let _ = write!(points, "{:.2},{:.2} ", px(*t), py(*v));
            }
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.trim_end()
        );
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = ax_right + 15.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(s.name));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}
