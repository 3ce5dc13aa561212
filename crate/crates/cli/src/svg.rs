//! Static log-x line charts of norm-growth records.

use std::fmt::Write as _;

use schur_lab::multiplier::{format_exponent, NormGrowthRecord};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Lower bound against `N` on a log2 axis.
pub fn norm_growth_svg(records: &[NormGrowthRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let title = records
        .first()
        .map(|r| format!("{} p={}", r.symbol_id, format_exponent(r.p)))
        .unwrap_or_default();
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(&title)
    );
    if records.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let xs: Vec<f64> = records.iter().map(|r| (r.n as f64).log2()).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.lower_bound).collect();
    let (x0, x1) = (xs[0], xs[xs.len() - 1].max(xs[0] + 1.0));
    let y1 = ys.iter().copied().fold(f64::MIN, f64::max);
    let y0 = ys.iter().copied().fold(f64::MAX, f64::min).min(1.0);
    let y1 = if y1 > y0 { y1 } else { y0 + 1.0 };
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        out,
        r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" stroke="black" fill="none"/>"#
    );
    for (r, &x) in records.iter().zip(&xs) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            px(x),
            bottom + 18.0,
            r.n
        );
    }
    for k in 0..=4 {
        let y = y0 + (y1 - y0) * f64::from(k) / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{:.3}</text>"#,
            left - 6.0,
            py(y) + 4.0,
            y
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">N (log scale)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let points: Vec<String> = xs.iter().zip(&ys).map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
    let _ = writeln!(
        out,
        r#"<polyline points="{}" stroke="steelblue" stroke-width="2" fill="none"/>"#,
        points.join(" ")
    );
    for (x, y) in xs.iter().zip(&ys) {
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, px(*x), py(*y));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_marker_per_record() {
        let recs: Vec<NormGrowthRecord> = [8, 16, 32]
            .iter()
            .enumerate()
            .map(|(i, &n)| NormGrowthRecord {
                symbol_id: "a<b".into(),
                p: f64::INFINITY,
                n,
                lower_bound: 1.0 + i as f64 * 0.2,
                trials: 2,
                seed: 0,
                wall_ms: 0,
            })
            .collect();
        let svg = norm_growth_svg(&recs);
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("a&lt;b p=inf"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
