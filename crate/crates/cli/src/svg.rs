//! Minimal SVG line/scatter plots with optional log axes.

use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Scatter,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(vals: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in vals.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if log {
            (lo, hi) = (lo.floor(), hi.ceil());
        }
        if hi - lo < 1e-12 {
            hi = lo + 1.0;
        }
        Axis { lo, hi, log }
    }

    /// Position in [0, 1], `None` for values a log axis cannot show.
    fn frac(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        Some((v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            (self.lo as i32..=self.hi as i32).map(|e| (10f64.powi(e), format!("1e{e}"))).collect()
        } else {
            (0..=5)
                .map(|i| {
                    let v = self.lo + (self.hi - self.lo) * i as f64 / 5.0;
                    (v, format!("{v:.4}"))
                })
                .collect()
        }
    }
}

pub fn render(plot: &Plot) -> String {
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let xa = Axis::new(plot.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)), plot.log_x);
    let ya = Axis::new(plot.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)), plot.log_y);
    let px = |v: f64| xa.frac(v).map(|f| LEFT + f * pw);
    let py = |v: f64| ya.frac(v).map(|f| TOP + ph - f * ph);

    let mut o = String::new();
    let _ = writeln!(o, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(o, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(o, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(o, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, LEFT + pw / 2.0, esc(&plot.title));
    let _ = writeln!(o, r#"<g class="axes" stroke="black" fill="none"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></g>"#);

    let _ = writeln!(o, r#"<g class="xticks">"#);
    for (v, label) in xa.ticks() {
        if let Some(x) = px(v) {
            let _ = writeln!(o, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
            let _ = writeln!(o, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, esc(&label));
        }
    }
    let _ = writeln!(o, "</g>");
    let _ = writeln!(o, r#"<g class="yticks">"#);
    for (v, label) in ya.ticks() {
        if let Some(y) = py(v) {
            let _ = writeln!(o, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
            let _ = writeln!(o, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, esc(&label));
        }
    }
    let _ = writeln!(o, "</g>");
    let _ = writeln!(o, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 15.0, esc(&plot.x_label));
    let _ = writeln!(
        o,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        esc(&plot.y_label)
    );

    for (i, s) in plot.series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let pts: Vec<(f64, f64)> = s.points.iter().filter_map(|&(x, y)| Some((px(x)?, py(y)?))).collect();
        let _ = writeln!(o, r#"<g class="series" data-name="{}">"#, esc(&s.name));
        match s.style {
            Style::Line if pts.len() > 1 => {
                let d: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(o, r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#, d.join(" "));
            }
            _ => {
                for (x, y) in &pts {
                    let _ = writeln!(o, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2" fill="{c}"/>"#);
                }
            }
        }
        let _ = writeln!(o, "</g>");
    }

    let _ = writeln!(o, r#"<g class="legend">"#);
    for (i, s) in plot.series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = W - RIGHT + 12.0;
        let _ = writeln!(o, r#"<rect x="{x}" y="{}" width="12" height="12" fill="{c}"/>"#, y - 10.0);
        let _ = writeln!(o, r#"<text x="{}" y="{y}">{}</text>"#, x + 18.0, esc(&s.name));
    }
    let _ = writeln!(o, "</g>\n</svg>");
    o
}
