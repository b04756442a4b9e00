//! Minimal SVG 1.1 line charts: one `<polyline>` per line series, circles for
//! marker series, linear axes with ticks and labels.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesStyle {
    Line,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: SeriesStyle,
}

impl Series {
    pub fn line(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
            style: SeriesStyle::Line,
        }
    }

    pub fn markers(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
            style: SeriesStyle::Markers,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#9467bd", "#2ca02c", "#ff7f0e", "#8c564b"];

/// Round tick spacing giving roughly `target` intervals over `span`.
fn tick_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo <= 0.0 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Chart {
    pub fn to_svg(&self) -> String {
        let all = || self.series.iter().flat_map(|s| s.points.iter());
        let (x0, x1) = range(all().map(|p| p.0));
        let (y0, y1) = range(all().map(|p| p.1).chain(std::iter::once(0.0)));
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
        let sy = |y: f64| MARGIN_TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;

        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            out,
            r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text class="title" x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            escape(&self.title)
        );

        // axes
        let _ = writeln!(
            out,
            r#"<g class="axes" stroke="black" stroke-width="1"><line x1="{l:.1}" y1="{b:.1}" x2="{r:.1}" y2="{b:.1}"/><line x1="{l:.1}" y1="{t:.1}" x2="{l:.1}" y2="{b:.1}"/></g>"#,
            l = MARGIN_LEFT,
            r = MARGIN_LEFT + plot_w,
            t = MARGIN_TOP,
            b = MARGIN_TOP + plot_h
        );
        let _ = writeln!(out, r#"<g class="ticks" stroke="black">"#);
        let xs = tick_step(x1 - x0, 8.0);
        let mut t = (x0 / xs).ceil() * xs;
        while t <= x1 + 1e-9 * xs {
            let px = sx(t);
            let _ = writeln!(
                out,
                r#"<line x1="{px:.1}" y1="{b:.1}" x2="{px:.1}" y2="{b2:.1}"/><text x="{px:.1}" y="{ty:.1}" text-anchor="middle" stroke="none">{}</text>"#,
                fmt_tick(t),
                b = MARGIN_TOP + plot_h,
                b2 = MARGIN_TOP + plot_h + 5.0,
                ty = MARGIN_TOP + plot_h + 19.0
            );
            t += xs;
        }
        let ys = tick_step(y1 - y0, 6.0);
        let mut t = (y0 / ys).ceil() * ys;
        while t <= y1 + 1e-9 * ys {
            let py = sy(t);
            let _ = writeln!(
                out,
                r#"<line x1="{l2:.1}" y1="{py:.1}" x2="{l:.1}" y2="{py:.1}"/><text x="{tx:.1}" y="{ty:.1}" text-anchor="end" stroke="none">{}</text>"#,
                fmt_tick(t),
                l = MARGIN_LEFT,
                l2 = MARGIN_LEFT - 5.0,
                tx = MARGIN_LEFT - 8.0,
                ty = py + 4.0
            );
            t += ys;
        }
        let _ = writeln!(out, "</g>");
        let _ = writeln!(
            out,
            r#"<text class="x-label" x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text class="y-label" x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
            MARGIN_TOP + plot_h / 2.0,
            MARGIN_TOP + plot_h / 2.0,
            escape(&self.y_label)
        );

        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let finite = s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite());
            match s.style {
                SeriesStyle::Line => {
                    let pts: Vec<String> = finite.map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
                        pts.join(" "),
                        escape(&s.name)
                    );
                }
                SeriesStyle::Markers => {
                    let _ = writeln!(out, r#"<g fill="{color}"><title>{}</title>"#, escape(&s.name));
                    for &(x, y) in finite {
                        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3"/>"#, sx(x), sy(y));
                    }
                    let _ = writeln!(out, "</g>");
                }
            }
            let ly = MARGIN_TOP + 14.0 + 18.0 * i as f64;
            let lx = MARGIN_LEFT + plot_w + 12.0;
            let _ = writeln!(
                out,
                r#"<g class="legend"><rect x="{lx:.1}" y="{:.1}" width="14" height="4" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text></g>"#,
                ly - 4.0,
                lx + 20.0,
                ly + 1.0,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn fmt_tick(v: f64) -> String {
    let v = if v.abs() < 1e-12 { 0.0 } else { v };
    if v.abs() >= 1e5 || (v != 0.0 && v.abs() < 1e-3) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}
