//! Self-contained SVG with two panels: `log10 |v_n|` and `f(x_n)` against `n`.

use std::fmt::Write;

use crate::trace::IterationRecord;

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 260.0;
const MARGIN: f64 = 56.0;

pub fn render_svg(title: &str, records: &[IterationRecord]) -> String {
    // log10 of zero norms is pinned just below the smallest positive one
    let floor = records
        .iter()
        .map(|r| r.subgrad_norm)
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() {
        floor.log10() - 1.0
    } else {
        -16.0
    };
    let logv: Vec<f64> = records
        .iter()
        .map(|r| {
            if r.subgrad_norm > 0.0 {
                r.subgrad_norm.log10()
            } else {
                floor
            }
        })
        .collect();
    let fs: Vec<f64> = records.iter().map(|r| r.f_value).collect();

    let height = 2.0 * PANEL_HEIGHT + 3.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    panel(&mut s, MARGIN, "log10 |v_n|", &logv, "#1f77b4");
    panel(
        &mut s,
        2.0 * MARGIN + PANEL_HEIGHT,
        "f(x_n)",
        &fs,
        "#d62728",
    );
    s.push_str("</svg>\n");
    s
}

fn panel(s: &mut String, top: f64, label: &str, ys: &[f64], color: &str) {
    let (x0, x1) = (MARGIN, WIDTH - MARGIN / 2.0);
    let (y0, y1) = (top, top + PANEL_HEIGHT);
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo <= f64::EPSILON * (1.0 + lo.abs()) {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    };
    let n = ys.len().saturating_sub(1).max(1) as f64;
    let px = |i: usize| x0 + (x1 - x0) * i as f64 / n;
    let py = |v: f64| y1 - (y1 - y0) * (v - lo) / (hi - lo);

    let _ = writeln!(
        s,
        r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    );
    let _ = writeln!(
        s,
        r#"<text x="{x0}" y="{}">{}</text>"#,
        y0 - 6.0,
        escape(label)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        x0 - 4.0,
        y0 + 10.0,
        tick(hi)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{y1}" text-anchor="end">{}</text>"#,
        x0 - 4.0,
        tick(lo)
    );
    let _ = writeln!(s, r#"<text x="{x0}" y="{}">0</text>"#, y1 + 14.0);
    let _ = writeln!(
        s,
        r#"<text x="{x1}" y="{}" text-anchor="end">n = {}</text>"#,
        y1 + 14.0,
        ys.len().saturating_sub(1)
    );
    let mut pts = String::new();
    for (i, &v) in ys.iter().enumerate() {
        let _ = write!(pts, "{:.2},{:.2} ", px(i), py(v));
    }
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
        pts.trim_end()
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
