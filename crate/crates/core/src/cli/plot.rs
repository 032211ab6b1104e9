//! Minimal SVG 1.1 plots: line charts, heatmaps and bar charts.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 40.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

const PALETTE: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub legend: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Cell centres along x.
    pub x: Vec<f64>,
    /// Row labels, bottom to top.
    pub y_labels: Vec<String>,
    /// `values[row][col]`.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| {
            if !(lo.is_finite() && hi.is_finite()) {
                (0.0, 1.0)
            } else if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = widen(x);
        let (y0, y1) = widen(y);
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" {
            "0".into()
        } else {
            s.to_string()
        }
    } else {
        format!("{v:.2e}")
    }
}

fn open(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        TOP / 2.0,
        escape(title)
    );
}

fn axes(svg: &mut String, f: &Frame, x_label: &str, y_label: &str, x_ticks: bool, y_ticks: bool) {
    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(svg, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
    for k in 0..=TICKS {
        let frac = k as f64 / TICKS as f64;
        if x_ticks {
            let v = f.x0 + frac * (f.x1 - f.x0);
            let x = f.px(v);
            let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{}" stroke="black"/>"#, b + 5.0);
            let _ = writeln!(svg, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, b + 18.0, tick_label(v));
        }
        if y_ticks {
            let v = f.y0 + frac * (f.y1 - f.y0);
            let y = f.py(v);
            let _ = writeln!(svg, r#"<line x1="{}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="black"/>"#, l - 5.0);
            let _ =
                writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, l - 8.0, y + 4.0, tick_label(v));
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        (t + b) / 2.0,
        escape(y_label)
    );
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

impl LinePlot {
    pub fn to_svg(&self) -> String {
        let all = || self.series.iter().flat_map(|s| s.points.iter());
        let f = Frame::new(extent(all().map(|p| p.0)), extent(all().map(|p| p.1)));
        let mut svg = String::new();
        open(&mut svg, &self.title);
        axes(&mut svg, &f, &self.x_label, &self.y_label, true, true);
        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let mut d = String::new();
            let mut pen_down = false;
            for &(x, y) in &s.points {
                if !(x.is_finite() && y.is_finite()) {
                    pen_down = false;
                    continue;
                }
                let _ = write!(d, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, f.px(x), f.py(y));
                pen_down = true;
            }
            let _ = writeln!(svg, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.trim_end());
            if self.legend {
                let y = TOP + 14.0 + 16.0 * k as f64;
                let x = WIDTH - RIGHT - 110.0;
                let _ = writeln!(
                    svg,
                    r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#,
                    x + 20.0
                );
                let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, x + 25.0, y + 4.0, escape(&s.name));
            }
        }
        svg.push_str("</svg>\n");
        svg
    }
}

/// Maps `t` in `[0, 1]` onto a dark-blue to yellow ramp.
fn color_ramp(t: f64) -> String {
    const STOPS: [(f64, [f64; 3]); 5] = [
        (0.0, [68.0, 1.0, 84.0]),
        (0.25, [59.0, 82.0, 139.0]),
        (0.5, [33.0, 145.0, 140.0]),
        (0.75, [94.0, 201.0, 98.0]),
        (1.0, [253.0, 231.0, 37.0]),
    ];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let k = STOPS.iter().rposition(|s| s.0 <= t).unwrap_or(0).min(STOPS.len() - 2);
    let (t0, c0) = STOPS[k];
    let (t1, c1) = STOPS[k + 1];
    let u = (t - t0) / (t1 - t0);
    let c: Vec<u8> = (0..3).map(|i| (c0[i] + u * (c1[i] - c0[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

impl Heatmap {
    pub fn to_svg(&self) -> String {
        let nx = self.x.len().max(1);
        let ny = self.values.len().max(1);
        let (lo, hi) = extent(self.values.iter().flatten().copied());
        let span = if hi > lo { hi - lo } else { 1.0 };
        // x axis spans cell edges
        let half = if self.x.len() > 1 {
            0.5 * (self.x[self.x.len() - 1] - self.x[0]) / (self.x.len() - 1) as f64
        } else {
            0.5
        };
        let (x0, x1) = extent(self.x.iter().copied());
        let f = Frame::new((x0 - half, x1 + half), (0.0, ny as f64));
        let mut svg = String::new();
        open(&mut svg, &self.title);
        let cw = (WIDTH - LEFT - RIGHT) / nx as f64;
        let ch = (HEIGHT - TOP - BOTTOM) / ny as f64;
        for (r, row) in self.values.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let x = LEFT + c as f64 * cw;
                let y = f.py((r + 1) as f64);
                let _ = writeln!(
                    svg,
                    r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    cw + 0.05,
                    ch + 0.05,
                    color_ramp((v - lo) / span)
                );
            }
        }
        axes(&mut svg, &f, &self.x_label, &self.y_label, true, false);
        let stride = ny.div_ceil(20).max(1);
        for (r, label) in self.y_labels.iter().enumerate().step_by(stride) {
            let y = f.py(r as f64 + 0.5);
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 8.0,
                y + 4.0,
                escape(label)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">range {} .. {}</text>"#,
            WIDTH - RIGHT,
            TOP - 8.0,
            tick_label(lo),
            tick_label(hi)
        );
        svg.push_str("</svg>\n");
        svg
    }
}

impl BarChart {
    pub fn to_svg(&self) -> String {
        let (lo, hi) = extent(self.values.iter().copied());
        let f = Frame::new((0.0, self.values.len().max(1) as f64), (lo.min(0.0), hi.max(0.0)));
        let mut svg = String::new();
        open(&mut svg, &self.title);
        axes(&mut svg, &f, &self.x_label, &self.y_label, false, true);
        let bw = (WIDTH - LEFT - RIGHT) / self.values.len().max(1) as f64;
        let zero = f.py(0.0);
        for (k, v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                continue;
            }
            let top = f.py(*v).min(zero);
            let h = (f.py(*v) - zero).abs();
            let x = LEFT + k as f64 * bw;
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{h:.2}" fill="{}"/>"#,
                x + 0.1 * bw,
                0.8 * bw,
                PALETTE[0]
            );
        }
        for (k, label) in self.labels.iter().enumerate() {
            let x = LEFT + (k as f64 + 0.5) * bw;
            let _ = writeln!(
                svg,
                r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
                HEIGHT - BOTTOM + 18.0,
                escape(label)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}
