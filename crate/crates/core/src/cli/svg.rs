//! Minimal static SVG line plots and heatmaps. No fonts, scripts or
//! external references; output depends only on the data.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn axes(out: &mut String, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) {
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(
        out,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (v, px, anchor, py) in [
        (x.0, x0, "start", y0 + 16.0),
        (x.1, x1, "end", y0 + 16.0),
    ] {
        let _ = writeln!(
            out,
            r#"<text x="{px}" y="{py}" text-anchor="{anchor}" font-size="10">{v:.4}</text>"#
        );
    }
    for (v, py) in [(y.0, y0), (y.1, y1 + 8.0)] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{py}" text-anchor="end" font-size="10">{v:.4}</text>"#,
            x0 - 4.0
        );
    }
}

/// Line plot of several `(x, y)` series on shared axes.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Vec<(f64, f64)>]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let xr = range(series.iter().flatten().map(|p| p.0));
    let yr = range(series.iter().flatten().map(|p| p.1));
    axes(&mut out, x_label, y_label, xr, yr);
    let sx = |x: f64| MARGIN + (x - xr.0) / (xr.1 - xr.0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - yr.0) / (yr.1 - yr.0) * (HEIGHT - 2.0 * MARGIN);
    for (i, s) in series.iter().enumerate() {
        let mut d = String::new();
        let mut pen_down = false;
        for &(x, y) in s {
            if !(x.is_finite() && y.is_finite()) {
                pen_down = false;
                continue;
            }
            let _ = write!(d, "{}{:.2} {:.2} ", if pen_down { "L" } else { "M" }, sx(x), sy(y));
            pen_down = true;
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            d.trim_end(),
            PALETTE[i % PALETTE.len()]
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Heatmap with one column per `x` and one row per index of `values[k]`,
/// row 0 at the bottom. Values are mapped linearly onto white → dark blue.
pub fn heatmap(title: &str, x_label: &str, y_label: &str, x: &[f64], values: &[Vec<f64>]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let rows = values.first().map_or(0, |r| r.len());
    let xr = range(x.iter().copied());
    axes(&mut out, x_label, y_label, xr, (0.0, rows.saturating_sub(1) as f64));
    let (lo, hi) = range(values.iter().flatten().copied());
    let cw = (WIDTH - 2.0 * MARGIN) / x.len().max(1) as f64;
    let ch = (HEIGHT - 2.0 * MARGIN) / rows.max(1) as f64;
    for (k, col) in values.iter().enumerate() {
        for (m, v) in col.iter().enumerate() {
            let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
            let shade = |full: f64, dark: f64| (full + (dark - full) * t).round() as u8;
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#{:02x}{:02x}{:02x}\"/>",
                MARGIN + k as f64 * cw,
                HEIGHT - MARGIN - (m + 1) as f64 * ch,
                cw + 0.01,
                ch + 0.01,
                shade(255.0, 8.0),
                shade(255.0, 48.0),
                shade(255.0, 107.0),
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
