//! Minimal self-contained SVG charts. Each plot embeds its data as an XML
//! comment so that figures can be diffed as text.

use std::fmt::Write as _;

use crate::signals::fmt_sig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone)]
enum Mark {
    Line,
    Stem,
}

#[derive(Debug, Clone)]
struct Series {
    label: String,
    x: Vec<f64>,
    y: Vec<f64>,
    mark: Mark,
}

#[derive(Debug, Clone)]
pub struct Plot {
    title: String,
    x_label: String,
    y_label: String,
    y_scale: Scale,
    series: Vec<Series>,
    shades: Vec<(f64, f64, String)>,
    hlines: Vec<(f64, String)>,
}

const W: f64 = 800.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
/// Longest polyline written; longer series are decimated by striding.
const MAX_POINTS: usize = 4000;

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            y_scale: Scale::Linear,
            series: Vec::new(),
            shades: Vec::new(),
            hlines: Vec::new(),
        }
    }

    pub fn y_scale(mut self, s: Scale) -> Self {
        self.y_scale = s;
        self
    }

    pub fn line(mut self, label: &str, x: &[f64], y: &[f64]) -> Self {
        self.series.push(Series { label: label.into(), x: x.to_vec(), y: y.to_vec(), mark: Mark::Line });
        self
    }

    pub fn stems(mut self, label: &str, x: &[f64], y: &[f64]) -> Self {
        self.series.push(Series { label: label.into(), x: x.to_vec(), y: y.to_vec(), mark: Mark::Stem });
        self
    }

    pub fn shade_x(mut self, from: f64, to: f64, label: &str) -> Self {
        self.shades.push((from, to, label.into()));
        self
    }

    pub fn hline(mut self, y: f64, label: &str) -> Self {
        self.hlines.push((y, label.into()));
        self
    }

    fn ty(&self, y: f64) -> f64 {
        match self.y_scale {
            Scale::Linear => y,
            Scale::Log => y.max(1e-300).log10(),
        }
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for (&x, &y) in s.x.iter().zip(&s.y) {
                let y = self.ty(y);
                if x.is_finite() && y.is_finite() {
                    b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
                }
            }
        }
        for (y, _) in &self.hlines {
            let y = self.ty(*y);
            b.2 = b.2.min(y);
            b.3 = b.3.max(y);
        }
        if !b.0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        if b.1 <= b.0 {
            b.1 = b.0 + 1.0;
        }
        if b.3 <= b.2 {
            b.3 = b.2 + 1.0;
        }
        let pad = 0.05 * (b.3 - b.2);
        (b.0, b.1, b.2 - pad, b.3 + pad)
    }

    pub fn to_svg(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
        let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        out.push_str("<!-- data\n");
        for s in &self.series {
            let _ = writeln!(out, "series {}: {} points", s.label.replace("--", "-"), s.x.len());
            for (x, y) in s.x.iter().zip(&s.y) {
                let _ = writeln!(out, "{},{}", fmt_sig(*x), fmt_sig(*y));
            }
        }
        out.push_str("-->\n");
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, esc(&self.title));
        for (a, b, label) in &self.shades {
            let (xa, xb) = (px(a.max(x0)), px(b.min(x1)));
            let _ = writeln!(
                out,
                r##"<rect x="{xa:.2}" y="{TOP}" width="{:.2}" height="{}" fill="#ffe08a" opacity="0.5"><title>{}</title></rect>"##,
                (xb - xa).max(0.0),
                H - TOP - BOTTOM,
                esc(label)
            );
            let _ = writeln!(out, r#"<text x="{:.2}" y="{}" font-size="11">{}</text>"#, xa + 3.0, TOP + 12.0, esc(label));
        }
        // axes and ticks
        let _ = writeln!(
            out,
            r#"<path d="M{LEFT} {TOP} V{} H{}" stroke="black" fill="none"/>"#,
            H - BOTTOM,
            W - RIGHT
        );
        for k in 0..=5 {
            let fx = x0 + (x1 - x0) * k as f64 / 5.0;
            let fy = y0 + (y1 - y0) * k as f64 / 5.0;
            let ylab = match self.y_scale {
                Scale::Linear => tick(fy),
                Scale::Log => format!("1e{:.1}", fy),
            };
            let _ = writeln!(out, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, px(fx), H - BOTTOM + 18.0, tick(fx));
            let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, py(fy) + 4.0, ylab);
        }
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 10.0, esc(&self.x_label));
        let _ = writeln!(
            out,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            esc(&self.y_label)
        );
        for (y, label) in &self.hlines {
            let yy = py(self.ty(*y));
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" x2="{}" y1="{yy:.2}" y2="{yy:.2}" stroke="#555" stroke-dasharray="4 3"><title>{}</title></line>"##,
                W - RIGHT,
                esc(label)
            );
        }
        for (k, s) in self.series.iter().enumerate() {
            let c = COLORS[k % COLORS.len()];
            let stride = (s.x.len() / MAX_POINTS).max(1);
            match s.mark {
                Mark::Line => {
                    let mut d = String::new();
                    let mut pen_up = true;
                    for (x, y) in s.x.iter().zip(&s.y).step_by(stride) {
                        let y = self.ty(*y);
                        if !(x.is_finite() && y.is_finite()) {
                            pen_up = true;
                            continue;
                        }
                        let _ = write!(d, "{}{:.2} {:.2} ", if pen_up { "M" } else { "L" }, px(*x), py(y));
                        pen_up = false;
                    }
                    let _ = writeln!(out, r#"<path d="{}" stroke="{c}" fill="none" stroke-width="1.2"/>"#, d.trim_end());
                }
                Mark::Stem => {
                    let base = py(y0);
                    for (x, y) in s.x.iter().zip(&s.y).step_by(stride) {
                        let yy = py(self.ty(*y));
                        let _ = writeln!(
                            out,
                            r#"<line x1="{0:.2}" x2="{0:.2}" y1="{base:.2}" y2="{yy:.2}" stroke="{c}"/><circle cx="{0:.2}" cy="{yy:.2}" r="2.5" fill="{c}"/>"#,
                            px(*x)
                        );
                    }
                }
            }
            let ly = TOP + 16.0 * k as f64 + 8.0;
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="12" height="3" fill="{c}"/><text x="{}" y="{}">{}</text>"#,
                W - RIGHT - 150.0,
                ly,
                W - RIGHT - 134.0,
                ly + 5.0,
                esc(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn tick(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 1e-2 && v.abs() < 1e4) {
        format!("{:.3}", v).trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
