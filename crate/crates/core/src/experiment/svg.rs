//! Standalone SVG line charts.

use std::fmt::Write as _;

use super::table::ResultTable;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// One curve: `(x, mean, stderr)` points sorted by `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64, f64)>,
}

/// Groups the table by base metric; each series label becomes a curve.
pub fn curves_by_metric(table: &ResultTable) -> Vec<(String, Vec<Curve>)> {
    let mut out: Vec<(String, Vec<Curve>)> = Vec::new();
    for row in &table.rows {
        let base = row.base_metric().to_string();
        let idx = match out.iter().position(|(m, _)| *m == base) {
            Some(i) => i,
            None => {
                out.push((base, Vec::new()));
                out.len() - 1
            }
        };
        let curves = &mut out[idx].1;
        let label = row.series().to_string();
        let c = match curves.iter().position(|c| c.label == label) {
            Some(i) => i,
            None => {
                curves.push(Curve { label, points: Vec::new() });
                curves.len() - 1
            }
        };
        curves[c].points.push((row.sweep_value, row.mean, row.stderr));
    }
    for (_, curves) in &mut out {
        for c in curves.iter_mut() {
            c.points.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
    }
    out
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r < 1.5 { 1.0 } else if r < 3.5 { 2.0 } else if r < 7.5 { 5.0 } else { 10.0 };
    m * mag
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the curves on shared axes. The x axis is logarithmic when every
/// x is positive and they span at least two decades. Error bars show one
/// standard error.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, curves: &[Curve]) -> String {
    let pts = curves.iter().flat_map(|c| c.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y, se) in pts {
        let se = if se.is_finite() { se } else { 0.0 };
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y - se);
        y1 = y1.max(y + se);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let log_x = x0 > 0.0 && x1 / x0 >= 100.0;
    let (fx0, fx1) = if log_x { (x0.log10(), x1.log10()) } else { (x0, x1) };
    let (fx0, fx1) = if fx1 > fx0 { (fx0, fx1) } else { (fx0 - 0.5, fx1 + 0.5) };
    if y1 <= y0 {
        let pad = if y0 == 0.0 { 1.0 } else { 0.1 * y0.abs() };
        y0 -= pad;
        y1 += pad;
    }
    let ystep = nice_step(y1 - y0);
    let (y0, y1) = ((y0 / ystep).floor() * ystep, (y1 / ystep).ceil() * ystep);

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| {
        let v = if log_x { x.log10() } else { x };
        LEFT + (v - fx0) / (fx1 - fx0) * pw
    };
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(title));
    let _ = writeln!(s, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);

    let mut y = y0;
    while y <= y1 + 0.5 * ystep {
        let py = sy(y);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#ddd"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, py + 4.0, fmt_tick(y));
        y += ystep;
    }
    let xticks: Vec<f64> = if log_x {
        (fx0.ceil() as i32..=fx1.floor() as i32).map(|e| 10f64.powi(e)).collect()
    } else {
        let step = nice_step(fx1 - fx0);
        let mut v = Vec::new();
        let mut x = (fx0 / step).ceil() * step;
        while x <= fx1 + 1e-9 * step {
            v.push(x);
            x += step;
        }
        v
    };
    for x in xticks {
        let px = sx(x);
        let _ = writeln!(s, r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="#eee"/>"##, TOP + ph);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, fmt_tick(x));
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 18.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );

    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let finite: Vec<_> = c.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
        let path: Vec<String> = finite.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
        if !path.is_empty() {
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#, path.join(" "));
        }
        for p in &finite {
            let (px, py) = (sx(p.0), sy(p.1));
            if p.2 > 0.0 && p.2.is_finite() {
                let _ = writeln!(
                    s,
                    r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="{color}"/>"#,
                    sy(p.1 - p.2),
                    sy(p.1 + p.2)
                );
            }
            let _ = writeln!(s, r#"<circle cx="{px:.2}" cy="{py:.2}" r="2.5" fill="{color}"/>"#);
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let label = if c.label.is_empty() { y_label } else { &c.label };
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 18.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 24.0, ly + 4.0, escape(label));
    }
    s.push_str("</svg>\n");
    s
}
