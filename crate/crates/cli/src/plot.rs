//! Minimal SVG charts: axes with optional log scales, lines, markers and
//! step histograms.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 50.0;

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Style {
    Line,
    Dashed,
    Markers,
    Steps,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: Option<String>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub style: Style,
    pub color: String,
    pub width: f64,
    pub opacity: f64,
}

impl Series {
    pub fn new(x: Vec<f64>, y: Vec<f64>, style: Style, color: &str) -> Self {
        Series {
            label: None,
            x,
            y,
            style,
            color: color.into(),
            width: 1.5,
            opacity: 1.0,
        }
    }

    pub fn label(mut self, l: impl Into<String>) -> Self {
        self.label = Some(l.into());
        self
    }

    pub fn faint(mut self) -> Self {
        self.width = 0.6;
        self.opacity = 0.25;
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct Chart {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub xlog: bool,
    pub ylog: bool,
    pub series: Vec<Series>,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            if !v.is_finite() || (log && v <= 0.0) {
                continue;
            }
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = if log { 0.0 } else { 0.04 * (hi - lo) };
        Axis {
            lo: lo - pad,
            hi: hi + pad,
            log,
        }
    }

    fn frac(&self, v: f64) -> Option<f64> {
        if !v.is_finite() || (self.log && v <= 0.0) {
            return None;
        }
        let v = if self.log { v.log10() } else { v };
        Some((v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i64, self.hi.floor() as i64);
            let step = ((b - a) / 8 + 1).max(1);
            (a..=b)
                .step_by(step as usize)
                .map(|k| ((k as f64 - self.lo) / (self.hi - self.lo), format!("1e{k}")))
                .collect()
        } else {
            let raw = (self.hi - self.lo) / 6.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|m| m * mag)
                .find(|s| *s >= raw)
                .unwrap_or(10.0 * mag);
            let mut t = (self.lo / step).ceil() * step;
            let mut out = Vec::new();
            while t <= self.hi + 1e-9 * step {
                let v = if t.abs() < 1e-12 * step { 0.0 } else { t };
                out.push(((v - self.lo) / (self.hi - self.lo), format!("{}", (v / step).round() * step)));
                t += step;
            }
            out
        }
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Chart {
    pub fn render(&self) -> String {
        let xa = Axis::fit(self.series.iter().flat_map(|s| s.x.iter().cloned()), self.xlog);
        let ya = Axis::fit(self.series.iter().flat_map(|s| s.y.iter().cloned()), self.ylog);
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let px = |f: f64| LEFT + f * pw;
        let py = |f: f64| TOP + (1.0 - f) * ph;
        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        )
        .unwrap();
        writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
            W / 2.0,
            esc(&self.title)
        )
        .unwrap();
        writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        )
        .unwrap();
        for (f, label) in xa.ticks() {
            let x = px(f);
            writeln!(s, r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#, TOP + ph, TOP + ph + 4.0).unwrap();
            writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#, TOP + ph + 16.0).unwrap();
        }
        for (f, label) in ya.ticks() {
            let y = py(f);
            writeln!(s, r#"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/>"#, LEFT - 4.0).unwrap();
            writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#, LEFT - 6.0, y + 4.0).unwrap();
        }
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 12.0,
            esc(&self.xlabel)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            esc(&self.ylabel)
        )
        .unwrap();
        writeln!(s, r#"<clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath>"#).unwrap();
        s.push_str("<g clip-path=\"url(#plot)\">\n");
        for ser in &self.series {
            let pts: Vec<(f64, f64)> = ser
                .x
                .iter()
                .zip(&ser.y)
                .filter_map(|(&x, &y)| Some((px(xa.frac(x)?), py(ya.frac(y)?))))
                .collect();
            match ser.style {
                Style::Markers => {
                    for (x, y) in &pts {
                        writeln!(
                            s,
                            r#"<circle cx="{x:.1}" cy="{y:.1}" r="2.5" fill="{}" fill-opacity="{}"/>"#,
                            ser.color, ser.opacity
                        )
                        .unwrap();
                    }
                }
                Style::Line | Style::Dashed | Style::Steps => {
                    if pts.is_empty() {
                        continue;
                    }
                    let mut d = String::new();
                    for (i, (x, y)) in pts.iter().enumerate() {
                        if i == 0 {
                            write!(d, "M{x:.1},{y:.1}").unwrap();
                        } else if ser.style == Style::Steps {
                            write!(d, " H{x:.1} V{y:.1}").unwrap();
                        } else {
                            write!(d, " L{x:.1},{y:.1}").unwrap();
                        }
                    }
                    let dash = if ser.style == Style::Dashed { r#" stroke-dasharray="5,3""# } else { "" };
                    writeln!(
                        s,
                        r#"<path d="{d}" fill="none" stroke="{}" stroke-width="{}" stroke-opacity="{}"{dash}/>"#,
                        ser.color, ser.width, ser.opacity
                    )
                    .unwrap();
                }
            }
        }
        s.push_str("</g>\n");
        let mut ly = TOP + 14.0;
        for ser in self.series.iter().filter(|s| s.label.is_some()) {
            let x = LEFT + pw - 150.0;
            writeln!(
                s,
                r#"<line x1="{x}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                x + 18.0,
                ser.color,
                x + 24.0,
                ly + 4.0,
                esc(ser.label.as_deref().unwrap())
            )
            .unwrap();
            ly += 15.0;
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_svg() {
        let c = Chart {
            title: "a < b".into(),
            xlabel: "t".into(),
            ylabel: "S".into(),
            xlog: true,
            ylog: false,
            series: vec![
                Series::new(vec![0.1, 1.0, 10.0], vec![0.0, 0.5, 0.7], Style::Line, PALETTE[0]).label("mean"),
                Series::new(vec![0.0, 1.0], vec![1.0, 2.0], Style::Markers, PALETTE[1]),
            ],
        };
        let s = c.render();
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("a &lt; b"));
        assert!(s.contains("1e-1"));
        // The non-positive x of the marker series is dropped on a log axis.
        assert_eq!(s.matches("<circle").count(), 1);
    }
}
