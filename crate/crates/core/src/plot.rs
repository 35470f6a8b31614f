//! Minimal standalone SVG line and bar charts.
//!
//! Every chart embeds its data as CSV inside `<metadata>`, so the numbers
//! survive without the picture. Output is a pure function of the input.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Axes<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log2_x: bool,
    /// Fixed y range; computed from the data when `None`.
    pub y_range: Option<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn header(out: &mut String, axes: &Axes, data_csv: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, "<metadata>\n{}</metadata>", escape(data_csv));
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(axes.title));
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + (W - LEFT - RIGHT) / 2.0,
        H - 12.0,
        escape(axes.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        TOP + (H - TOP - BOTTOM) / 2.0,
        TOP + (H - TOP - BOTTOM) / 2.0,
        escape(axes.y_label)
    );
}

fn frame(out: &mut String, y_lo: f64, y_hi: f64, sy: &dyn Fn(f64) -> f64) {
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(out, r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y1 - y0);
    for k in 0..=4 {
        let v = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
        let y = sy(v);
        let _ = writeln!(out, r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#ddd"/>"##);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 6.0, y + 4.0, fmt_num(v));
    }
}

fn fmt_num(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn legend(out: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(out, r#"<rect x="{}" y="{}" width="12" height="12" fill="{color}"/>"#, W - RIGHT + 12.0, y - 10.0);
        let _ = writeln!(out, r#"<text x="{}" y="{y}">{}</text>"#, W - RIGHT + 30.0, escape(name));
    }
}

/// Polyline chart with markers, one line per series.
pub fn line_chart(axes: &Axes, series: &[Series]) -> String {
    let tx = |x: f64| if axes.log2_x { x.max(f64::MIN_POSITIVE).log2() } else { x };
    let mut csv = String::from("series,x,y\n");
    for s in series {
        for &(x, y) in &s.points {
            let _ = writeln!(csv, "{},{x},{y}", s.name);
        }
    }
    let (x_lo, x_hi) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| tx(p.0))));
    let (y_lo, y_hi) = axes.y_range.unwrap_or_else(|| bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1))));
    let sx = |x: f64| LEFT + (tx(x) - x_lo) / (x_hi - x_lo) * (W - LEFT - RIGHT);
    let sy = |y: f64| H - BOTTOM - (y - y_lo) / (y_hi - y_lo) * (H - TOP - BOTTOM);
    let mut out = String::new();
    header(&mut out, axes, &csv);
    frame(&mut out, y_lo, y_hi, &sy);
    let mut ticks: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    if ticks.len() <= 12 {
        for t in ticks {
            let label = if axes.log2_x { format!("2^{}", fmt_num(tx(t))) } else { fmt_num(t) };
            let _ = writeln!(out, r#"<text x="{:.2}" y="{}" text-anchor="middle">{label}</text>"#, sx(t), H - BOTTOM + 16.0);
        }
    }
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, pts.join(" "));
        for &(x, y) in &s.points {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
        }
    }
    let names: Vec<&str> = series.iter().map(|s| s.name.as_str()).collect();
    legend(&mut out, &names);
    out.push_str("</svg>\n");
    out
}

/// Grouped bars: one group per category, one bar per series.
pub fn bar_chart(axes: &Axes, categories: &[String], series: &[Series]) -> String {
    let mut csv = String::from("series,category,value\n");
    for s in series {
        for (c, &(_, y)) in categories.iter().zip(&s.points) {
            let _ = writeln!(csv, "{},{c},{y}", s.name);
        }
    }
    let (y_lo, y_hi) = axes.y_range.unwrap_or((0.0, 1.0));
    let sy = |y: f64| H - BOTTOM - (y - y_lo) / (y_hi - y_lo) * (H - TOP - BOTTOM);
    let mut out = String::new();
    header(&mut out, axes, &csv);
    frame(&mut out, y_lo, y_hi, &sy);
    let group_w = (W - LEFT - RIGHT) / categories.len().max(1) as f64;
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;
    for (ci, cat) in categories.iter().enumerate() {
        let gx = LEFT + group_w * ci as f64 + group_w * 0.1;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            gx + group_w * 0.4,
            H - BOTTOM + 16.0,
            escape(cat)
        );
        for (si, s) in series.iter().enumerate() {
            let v = s.points.get(ci).map(|p| p.1).unwrap_or(0.0);
            let (top, base) = (sy(v), sy(y_lo.max(0.0)));
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                gx + bar_w * si as f64,
                top.min(base),
                bar_w,
                (base - top).abs(),
                COLORS[si % COLORS.len()]
            );
        }
    }
    let names: Vec<&str> = series.iter().map(|s| s.name.as_str()).collect();
    legend(&mut out, &names);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axes() -> Axes<'static> {
        Axes { title: "t <1>", x_label: "n", y_label: "TV", log2_x: false, y_range: None }
    }

    #[test]
    fn embeds_data_and_is_deterministic() {
        let s = vec![Series { name: "shadow".into(), points: vec![(2.0, 0.1), (4.0, 0.3)] }];
        let a = line_chart(&axes(), &s);
        assert_eq!(a, line_chart(&axes(), &s));
        assert!(a.contains("shadow,4,0.3"));
        assert!(a.contains("t &lt;1&gt;"));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
    }

    #[test]
    fn degenerate_inputs_do_not_divide_by_zero() {
        let flat = vec![Series { name: "fq".into(), points: vec![(2.0, 0.0), (2.0, 0.0)] }];
        assert!(!line_chart(&axes(), &flat).contains("NaN"));
        assert!(!line_chart(&axes(), &[]).contains("NaN"));
        let bars = bar_chart(&axes(), &["a".into()], &[Series { name: "p".into(), points: vec![(0.0, 0.5)] }]);
        assert!(bars.contains("<rect") && !bars.contains("NaN"));
    }
}
