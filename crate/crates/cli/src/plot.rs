//! Minimal standalone SVG plots: log₂-scaled horizon axis, markers and
//! interval whiskers.

use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub x: f64,
    pub y: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<PlotPoint>,
}

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error("nothing to plot")]
    Empty,
    #[error("horizon {0} is not positive; the axis is logarithmic")]
    NonPositive(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the series; `header` becomes a leading XML comment.
pub fn render_svg(series: &PlotSeries, header: &str) -> Result<String, PlotError> {
    if series.points.is_empty() {
        return Err(PlotError::Empty);
    }
    if let Some(p) = series.points.iter().find(|p| !(p.x > 0.0)) {
        return Err(PlotError::NonPositive(p.x));
    }
    let lx: Vec<f64> = series.points.iter().map(|p| p.x.log2()).collect();
    let (mut x0, mut x1) = (lx.iter().copied().fold(f64::INFINITY, f64::min), lx.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    x0 = x0.floor();
    x1 = x1.ceil();
    if x1 <= x0 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    let ys = series
        .points
        .iter()
        .flat_map(|p| [Some(p.y), p.lo, p.hi])
        .flatten();
    let y_max = ys.fold(0.0f64, f64::max);
    let y1 = if y_max > 0.0 { y_max * 1.1 } else { 1.0 };
    let px = |lx: f64| LEFT + (lx - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - y / y1 * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(s, "<!-- {} -->", escape(header));
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&series.title));
    // axes
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT} {TOP} V{} H{}" fill="none" stroke="black"/>"#,
        H - BOTTOM,
        W - RIGHT
    );
    let mut e = x0 as i64;
    while e as f64 <= x1 {
        let x = px(e as f64);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, H - BOTTOM, H - BOTTOM + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">2^{e}</text>"#, H - BOTTOM + 18.0);
        e += 1;
    }
    for k in 0..=4 {
        let v = y1 * k as f64 / 4.0;
        let y = py(v);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, format_tick(v));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (LEFT + W - RIGHT) / 2.0, H - 12.0, escape(&series.x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (TOP + H - BOTTOM) / 2.0,
        (TOP + H - BOTTOM) / 2.0,
        escape(&series.y_label)
    );
    for (p, &l) in series.points.iter().zip(&lx) {
        let x = px(l);
        if let (Some(lo), Some(hi)) = (p.lo, p.hi) {
            let (a, b) = (py(lo), py(hi));
            let _ = writeln!(
                s,
                r##"<path class="whisker" d="M{x:.2} {a:.2} V{b:.2} M{:.2} {a:.2} H{:.2} M{:.2} {b:.2} H{:.2}" stroke="#555" fill="none"/>"##,
                x - 4.0,
                x + 4.0,
                x - 4.0,
                x + 4.0
            );
        }
        let _ = writeln!(s, r##"<circle class="marker" cx="{x:.2}" cy="{:.2}" r="4" fill="#1f5fa8"/>"##, py(p.y));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn format_tick(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.2}")
    }
}

/// Writes a standalone SVG plot of `series` to `path`.
pub fn emit_plot(series: &PlotSeries, path: &Path, header: &str) -> Result<(), PlotError> {
    let svg = render_svg(series, header)?;
    std::fs::write(path, svg)?;
    Ok(())
}
