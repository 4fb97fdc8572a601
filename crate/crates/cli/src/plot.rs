//! Self-contained SVG charts of a run directory.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Axis-aligned data window.
#[derive(Debug, Clone, Copy)]
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit<'a>(pts: impl Iterator<Item = &'a (f64, f64)>, extra_y: &[f64], equal: bool) -> Self {
        let mut f = Frame {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        for &(x, y) in pts.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            f.x0 = f.x0.min(x);
            f.x1 = f.x1.max(x);
            f.y0 = f.y0.min(y);
            f.y1 = f.y1.max(y);
        }
        for &y in extra_y {
            f.y0 = f.y0.min(y);
            f.y1 = f.y1.max(y);
        }
        if !f.x0.is_finite() {
            f.x0 = 0.0;
            f.x1 = 1.0;
        }
        if !f.y0.is_finite() {
            f.y0 = 0.0;
            f.y1 = 1.0;
        }
        if f.x1 - f.x0 < 1e-12 {
            f.x0 -= 0.5;
            f.x1 += 0.5;
        }
        if f.y1 - f.y0 < 1e-12 {
            f.y0 -= 0.5;
            f.y1 += 0.5;
        }
        let pad = 0.05 * (f.y1 - f.y0);
        f.y0 -= pad;
        f.y1 += pad;
        if equal {
            let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
            let sx = (f.x1 - f.x0) / pw;
            let sy = (f.y1 - f.y0) / ph;
            let s = sx.max(sy);
            let (cx, cy) = (0.5 * (f.x0 + f.x1), 0.5 * (f.y0 + f.y1));
            f = Frame {
                x0: cx - 0.5 * s * pw,
                x1: cx + 0.5 * s * pw,
                y0: cy - 0.5 * s * ph,
                y1: cy + 0.5 * s * ph,
            };
        }
        f
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r <= 1.0 {
        1.0
    } else if r <= 2.0 {
        2.0
    } else if r <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo, 6);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step && out.len() < 50 {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.to_string() }
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, esc(title));
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(out, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
    for x in ticks(f.x0, f.x1) {
        let p = f.px(x);
        let _ = writeln!(out, r#"<line x1="{p:.2}" y1="{b}" x2="{p:.2}" y2="{}" stroke="black"/>"#, b + 5.0);
        let _ = writeln!(out, r#"<text x="{p:.2}" y="{}" text-anchor="middle">{}</text>"#, b + 18.0, fmt_tick(x));
    }
    for y in ticks(f.y0, f.y1) {
        let p = f.py(y);
        let _ = writeln!(out, r#"<line x1="{}" y1="{p:.2}" x2="{l}" y2="{p:.2}" stroke="black"/>"#, l - 5.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, l - 8.0, p + 4.0, fmt_tick(y));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (l + r) / 2.0, H - 10.0, esc(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        (t + b) / 2.0,
        esc(ylabel)
    );
}

fn polyline(out: &mut String, f: &Frame, pts: &[(f64, f64)], color: &str, extra: &str) {
    if pts.is_empty() {
        return;
    }
    let mut d = String::new();
    for &(x, y) in pts.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
        let _ = write!(d, "{:.2},{:.2} ", f.px(x), f.py(y));
    }
    let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{extra}/>"#, d.trim_end());
}

/// Line chart with optional labelled horizontal reference lines.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series], refs: &[(String, f64)]) -> String {
    let ys: Vec<f64> = refs.iter().map(|r| r.1).collect();
    let f = Frame::fit(series.iter().flat_map(|s| s.points.iter()), &ys, false);
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, xlabel, ylabel);
    for (k, s) in series.iter().enumerate() {
        polyline(&mut out, &f, &s.points, PALETTE[k % PALETTE.len()], "");
    }
    for (label, y) in refs {
        let p = f.py(*y);
        let _ = writeln!(
            out,
            r#"<line x1="{LEFT}" y1="{p:.2}" x2="{}" y2="{p:.2}" stroke="red" stroke-dasharray="6 4"/>"#,
            W - RIGHT
        );
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end" fill="red">{}</text>"#, W - RIGHT - 4.0, p - 4.0, esc(label));
    }
    legend(&mut out, series.iter().map(|s| s.label.as_str()));
    out.push_str("</svg>\n");
    out
}

fn legend<'a>(out: &mut String, labels: impl Iterator<Item = &'a str>) {
    for (k, label) in labels.enumerate().take(8) {
        let y = TOP + 14.0 + 16.0 * k as f64;
        let x = LEFT + 10.0;
        let c = PALETTE[k % PALETTE.len()];
        let _ = writeln!(out, r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{c}" stroke-width="2"/>"#, x + 18.0);
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, x + 24.0, y + 4.0, esc(label));
    }
}

/// Planar agent paths with the formation drawn at selected snapshots.
/// `snapshots` holds `(positions, edges)` with positions as `(x, y)` per agent.
pub fn trajectory_chart(title: &str, paths: &[Vec<(f64, f64)>], snapshots: &[(Vec<(f64, f64)>, Vec<(usize, usize)>)]) -> String {
    let all = paths.iter().flatten().chain(snapshots.iter().flat_map(|s| s.0.iter()));
    let f = Frame::fit(all, &[], true);
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, "x", "y");
    for (k, p) in paths.iter().enumerate() {
        polyline(&mut out, &f, p, PALETTE[k % PALETTE.len()], r#" stroke-opacity="0.8""#);
    }
    for (s, (pos, edges)) in snapshots.iter().enumerate() {
        let last = s + 1 == snapshots.len();
        let stroke = if last { "black" } else { "gray" };
        for &(i, j) in edges {
            if let (Some(a), Some(b)) = (pos.get(i), pos.get(j)) {
                let _ = writeln!(
                    out,
                    r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{stroke}" stroke-width="0.8"/>"#,
                    f.px(a.0),
                    f.py(a.1),
                    f.px(b.0),
                    f.py(b.1)
                );
            }
        }
        for (k, p) in pos.iter().enumerate() {
            let fill = if last { PALETTE[k % PALETTE.len()] } else { "white" };
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{fill}" stroke="{stroke}"/>"#,
                f.px(p.0),
                f.py(p.1)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
