//! Minimal SVG writer for diagnostic plots.

use std::fmt::Write;

use num_complex::Complex64;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

pub fn palette(k: usize) -> &'static str {
    PALETTE[k % PALETTE.len()]
}

/// Canvas mapping a rectangle of the complex plane to pixels (y up).
pub struct SvgCanvas {
    width: f64,
    height: f64,
    view: [f64; 4],
    body: String,
}

impl SvgCanvas {
    pub fn new(view: [f64; 4], width: f64) -> Self {
        let [x0, x1, y0, y1] = view;
        let aspect = ((y1 - y0) / (x1 - x0)).clamp(0.1, 10.0);
        SvgCanvas {
            width,
            height: (width * aspect).round(),
            view,
            body: String::new(),
        }
    }

    /// Canvas whose view contains `pts` with a relative margin.
    pub fn fit(pts: &[Complex64], width: f64, margin: f64) -> Self {
        let mut v = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for p in pts.iter().filter(|p| p.re.is_finite() && p.im.is_finite()) {
            v[0] = v[0].min(p.re);
            v[1] = v[1].max(p.re);
            v[2] = v[2].min(p.im);
            v[3] = v[3].max(p.im);
        }
        if !v[0].is_finite() {
            v = [-1.0, 1.0, -1.0, 1.0];
        }
        let span = (v[1] - v[0]).max(v[3] - v[2]).max(1e-9);
        let pad = margin * span;
        Self::new([v[0] - pad, v[1] + pad, v[2] - pad, v[3] + pad], width)
    }

    fn map(&self, p: Complex64) -> (f64, f64) {
        let [x0, x1, y0, y1] = self.view;
        (
            (p.re - x0) / (x1 - x0) * self.width,
            (y1 - p.im) / (y1 - y0) * self.height,
        )
    }

    pub fn polyline(&mut self, pts: &[Complex64], color: &str, width: f64) {
        if pts.len() < 2 {
            return;
        }
        let mut d = String::new();
        for p in pts {
            let (x, y) = self.map(*p);
            let _ = write!(d, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
            d.trim_end()
        );
    }

    pub fn circle(&mut self, center: Complex64, radius: f64, color: &str) {
        let (x, y) = self.map(center);
        let rx = radius / (self.view[1] - self.view[0]) * self.width;
        let _ = writeln!(
            self.body,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{rx:.2}" fill="none" stroke="{color}" stroke-width="0.6"/>"#
        );
    }

    pub fn dot(&mut self, p: Complex64, color: &str, radius: f64) {
        let (x, y) = self.map(p);
        let _ = writeln!(
            self.body,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{radius}" fill="{color}"/>"#
        );
    }

    pub fn label(&mut self, p: Complex64, text: &str) {
        let (x, y) = self.map(p);
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" font-family="sans-serif">{text}</text>"#,
            x + 4.0,
            y - 4.0
        );
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    /// Nested `<svg>` element placed at `(x, y)` inside a larger document.
    pub fn finish_at(self, x: f64, y: f64) -> String {
        format!(
            "<svg x=\"{x}\" y=\"{y}\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\" stroke=\"#999\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}
