//! Minimal SVG emitter for line plots. Coordinates are printed with a
//! fixed number of decimals so output is byte-stable.

use std::fmt::Write;

pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

fn px(v: f64) -> String {
    format!("{v:.2}")
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Svg {
            width,
            height,
            body: String::new(),
        }
    }

    pub fn text(&mut self, x: f64, y: f64, anchor: &str, size: f64, text: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" text-anchor="{anchor}" font-size="{size}">{}</text>"#,
            px(x),
            px(y),
            escape(text)
        );
    }

    pub fn raw(&mut self, element: &str) {
        self.body.push_str(element);
        self.body.push('\n');
    }

    pub fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">\n\
             <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{body}</svg>\n",
            w = self.width,
            h = self.height,
            body = self.body
        )
    }
}

/// A rectangular plotting area mapping data coordinates to pixels.
pub struct Panel {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x: (f64, f64),
    y: (f64, f64),
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo > 1e-12 * lo.abs().max(hi.abs()).max(1e-300) {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = 0.5 * lo.abs().max(1.0);
        (lo - pad, hi + pad)
    }
}

pub fn extent(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

impl Panel {
    pub fn new(rect: (f64, f64, f64, f64), x: (f64, f64), y: (f64, f64)) -> Self {
        Panel {
            left: rect.0,
            top: rect.1,
            width: rect.2,
            height: rect.3,
            x: padded(x.0, x.1),
            y: padded(y.0, y.1),
        }
    }

    /// Square data window of half-width `half` centred on the origin.
    pub fn square(rect: (f64, f64, f64, f64), half: f64) -> Self {
        Panel {
            left: rect.0,
            top: rect.1,
            width: rect.2,
            height: rect.3,
            x: (-half, half),
            y: (-half, half),
        }
    }

    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let u = (x - self.x.0) / (self.x.1 - self.x.0);
        let v = (y - self.y.0) / (self.y.1 - self.y.0);
        (self.left + u * self.width, self.top + (1.0 - v) * self.height)
    }

    /// Pixels per data unit along x.
    pub fn scale(&self) -> f64 {
        self.width / (self.x.1 - self.x.0)
    }

    pub fn frame(&self, svg: &mut Svg, title: &str, xlabel: &str, ylabel: &str) {
        svg.raw(&format!(
            r#"<rect class="frame" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            px(self.left),
            px(self.top),
            px(self.width),
            px(self.height)
        ));
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let (xp, _) = self.map(xv, self.y.0);
            let (_, yp) = self.map(self.x.0, yv);
            let bottom = self.top + self.height;
            svg.raw(&format!(
                r#"<line class="tick" x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/>"#,
                px(xp),
                px(bottom),
                px(bottom + 4.0)
            ));
            svg.text(xp, bottom + 16.0, "middle", 10.0, &tick_label(xv));
            svg.raw(&format!(
                r#"<line class="tick" x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/>"#,
                px(self.left - 4.0),
                px(yp),
                px(self.left)
            ));
            svg.text(self.left - 6.0, yp + 3.0, "end", 10.0, &tick_label(yv));
        }
        svg.text(
            self.left + self.width / 2.0,
            self.top - 8.0,
            "middle",
            13.0,
            title,
        );
        svg.text(
            self.left + self.width / 2.0,
            self.top + self.height + 32.0,
            "middle",
            11.0,
            xlabel,
        );
        svg.text(
            self.left - 44.0,
            self.top + self.height / 2.0,
            "middle",
            11.0,
            ylabel,
        );
    }

    pub fn polyline(&self, svg: &mut Svg, class: &str, color: &str, points: &[(f64, f64)]) {
        let mut coords = String::new();
        for (i, &(x, y)) in points.iter().enumerate() {
            let (a, b) = self.map(x, y);
            if i > 0 {
                coords.push(' ');
            }
            let _ = write!(coords, "{},{}", px(a), px(b));
        }
        svg.raw(&format!(
            r#"<polyline class="{class}" fill="none" stroke="{color}" stroke-width="1.2" points="{coords}"/>"#
        ));
    }

    pub fn markers(&self, svg: &mut Svg, class: &str, color: &str, points: &[(f64, f64)]) {
        for &(x, y) in points {
            let (a, b) = self.map(x, y);
            svg.raw(&format!(
                r#"<circle class="{class}" cx="{}" cy="{}" r="3" fill="{color}"/>"#,
                px(a),
                px(b)
            ));
        }
    }
}
