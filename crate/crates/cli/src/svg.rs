//! Self-contained SVG plots: line charts and categorical heat maps.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        Frame { x: pad(x), y: pad(y) }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (WIDTH - RIGHT + LEFT) / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (x0, x1) = (f.px(f.x.0), f.px(f.x.1));
    let (y0, y1) = (f.py(f.y.0), f.py(f.y.1));
    let _ = writeln!(
        out,
        r#"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = f.x.0 + t * (f.x.1 - f.x.0);
        let yv = f.y.0 + t * (f.y.1 - f.y.0);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            f.px(xv),
            y0 + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            f.py(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn legend(out: &mut String, i: usize, color: &str, label: &str) {
    let y = TOP + 10.0 + 20.0 * i as f64;
    let x = WIDTH - RIGHT + 14.0;
    let _ = writeln!(
        out,
        r#"<rect x="{x:.1}" y="{:.1}" width="14" height="10" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
        y - 9.0,
        x + 20.0,
        y,
        escape(label)
    );
}

/// One polyline per series; non-finite points split the line.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let pts = series.iter().flat_map(|(_, p)| p.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x, mut y) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
    for &(a, b) in pts {
        x = (x.0.min(a), x.1.max(a));
        y = (y.0.min(b), y.1.max(b));
    }
    if !x.0.is_finite() {
        x = (0.0, 1.0);
        y = (0.0, 1.0);
    }
    let f = Frame::new(x, y);
    let mut out = String::new();
    open(&mut out, title);
    axes(&mut out, &f, xlabel, ylabel);
    for (i, (label, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for run in points.split(|(a, b)| !(a.is_finite() && b.is_finite())) {
            if run.is_empty() {
                continue;
            }
            let coords: Vec<String> = run.iter().map(|&(a, b)| format!("{:.2},{:.2}", f.px(a), f.py(b))).collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            );
        }
        legend(&mut out, i, color, label);
    }
    out.push_str("</svg>\n");
    out
}

/// Cells on the grid `xs x ys`; `class[j][i]` indexes `classes` for `(xs[i], ys[j])`.
pub fn heat_map(title: &str, xlabel: &str, ylabel: &str, xs: &[f64], ys: &[f64], class: &[Vec<usize>], classes: &[(&str, &str)]) -> String {
    let span = |v: &[f64]| -> (f64, f64, f64) {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let step = if v.len() > 1 { (hi - lo) / (v.len() - 1) as f64 } else { 1.0 };
        (lo - step / 2.0, hi + step / 2.0, step)
    };
    let (x0, x1, dx) = span(xs);
    let (y0, y1, dy) = span(ys);
    let f = Frame::new((x0, x1), (y0, y1));
    let mut out = String::new();
    open(&mut out, title);
    for (j, &yv) in ys.iter().enumerate() {
        for (i, &xv) in xs.iter().enumerate() {
            let color = classes[class[j][i]].1;
            let (a, b) = (f.px(xv - dx / 2.0), f.px(xv + dx / 2.0));
            let (c, d) = (f.py(yv + dy / 2.0), f.py(yv - dy / 2.0));
            let _ = writeln!(
                out,
                r#"<rect x="{a:.2}" y="{c:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
                b - a,
                d - c
            );
        }
    }
    axes(&mut out, &f, xlabel, ylabel);
    for (i, (label, color)) in classes.iter().enumerate() {
        legend(&mut out, i, color, label);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_series() {
        let s = line_chart(
            "t",
            "x",
            "y",
            &[
                ("a".into(), vec![(0.0, 1.0), (1.0, 2.0)]),
                ("b".into(), vec![(0.0, 0.0), (1.0, 1.0)]),
            ],
        );
        assert_eq!(s.matches("<polyline").count(), 2);
        assert!(s.starts_with("<svg"));
    }

    #[test]
    fn gaps_split_lines() {
        let s = line_chart("t", "x", "y", &[("a".into(), vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, 2.0), (3.0, 1.0)])]);
        assert_eq!(s.matches("<polyline").count(), 2);
    }

    #[test]
    fn heat_map_draws_every_cell() {
        let s = heat_map(
            "t",
            "E",
            "lambda",
            &[0.0, 1.0, 2.0],
            &[1.0, 2.0],
            &[vec![0, 1, 0], vec![1, 1, 0]],
            &[("A", "#000"), ("B", "#fff")],
        );
        assert_eq!(s.matches(r##"fill="#000""##).count(), 1 + 3);
        assert_eq!(s.matches("<rect").count(), 1 + 6 + 1 + 2);
    }

    #[test]
    fn labels_are_escaped() {
        assert!(line_chart("a<b", "x", "y", &[]).contains("a&lt;b"));
    }
}
