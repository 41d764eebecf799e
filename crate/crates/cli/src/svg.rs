//! Minimal two-axis line chart.

use std::fmt::Write;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

fn scale(values: &[f64]) -> impl Fn(f64) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    move |v| HEIGHT - MARGIN - (v - lo) / span * (HEIGHT - 2.0 * MARGIN)
}

fn polyline(out: &mut String, xs: &[f64], ys: &[f64], color: &str) {
    let y = scale(ys);
    let mut pts = String::new();
    for (x, v) in xs.iter().zip(ys) {
        let _ = write!(pts, "{:.2},{:.2} ", x, y(*v));
    }
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
        pts.trim_end()
    );
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Price (green, right axis) and index (blue, left axis) against trading
/// day, with an optional red dashed marker at row `crash`.
pub fn render(labels: (&str, &str), price: &[f64], index: &[f64], crash: Option<usize>, first: &str, last: &str) -> String {
    let n = price.len().max(2);
    let xs: Vec<f64> = (0..price.len())
        .map(|i| MARGIN + i as f64 / (n - 1) as f64 * (WIDTH - 2.0 * MARGIN))
        .collect();
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (bottom, right) = (HEIGHT - MARGIN, WIDTH - MARGIN);
    let _ = writeln!(
        out,
        r#"<path d="M{MARGIN},{MARGIN} V{bottom} H{right} V{MARGIN}" fill="none" stroke="black"/>"#
    );
    polyline(&mut out, &xs, index, "blue");
    polyline(&mut out, &xs, price, "green");
    if let Some(i) = crash {
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{MARGIN}" x2="{x:.2}" y2="{bottom}" stroke="red" stroke-dasharray="6,4"/>"#,
            x = xs[i]
        );
    }
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="{}" font-size="12" fill="blue">{}</text>"#, MARGIN - 10.0, escape(labels.1));
    let _ = writeln!(
        out,
        r#"<text x="{right}" y="{}" font-size="12" fill="green" text-anchor="end">{}</text>"#,
        MARGIN - 10.0,
        escape(labels.0)
    );
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="{}" font-size="12">{first}</text>"#, bottom + 20.0);
    let _ = writeln!(out, r#"<text x="{right}" y="{}" font-size="12" text-anchor="end">{last}</text>"#, bottom + 20.0);
    out.push_str("</svg>\n");
    out
}
