//! Minimal line-art SVG writer.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 50.0;

pub struct Plot {
    x_range: (f64, f64),
    y_range: (f64, f64),
    body: String,
}

fn pad(range: (f64, f64)) -> (f64, f64) {
    if range.1 > range.0 {
        range
    } else {
        (range.0 - 1.0, range.0 + 1.0)
    }
}

impl Plot {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        Self {
            x_range: pad(x_range),
            y_range: pad(y_range),
            body: String::new(),
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_range.0) / (self.x_range.1 - self.x_range.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y_range.0) / (self.y_range.1 - self.y_range.0) * (HEIGHT - 2.0 * MARGIN)
    }

    pub fn rect(&mut self, x0: f64, x1: f64, y0: f64, y1: f64, fill: &str) {
        let (a, b) = (self.px(x0.max(self.x_range.0)), self.px(x1.min(self.x_range.1)));
        let (c, d) = (self.py(y1.min(self.y_range.1)), self.py(y0.max(self.y_range.0)));
        if b > a && d > c {
            let _ = writeln!(
                self.body,
                r#"<rect x="{a:.2}" y="{c:.2}" width="{:.2}" height="{:.2}" fill="{fill}" fill-opacity="0.3"/>"#,
                b - a,
                d - c
            );
        }
    }

    pub fn hline(&mut self, y: f64, stroke: &str, dashed: bool) {
        let (x0, x1) = (self.px(self.x_range.0), self.px(self.x_range.1));
        let y = self.py(y);
        let dash = if dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(self.body, r#"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="{stroke}"{dash}/>"#);
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, width: f64) {
        if pts.is_empty() {
            return;
        }
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y))).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#,
            coords.join(" ")
        );
    }

    pub fn marker(&mut self, x: f64, y: f64, label: &str, fill: &str) {
        let (cx, cy) = (self.px(x), self.py(y));
        let _ = writeln!(self.body, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3" fill="{fill}"/>"#);
        if !label.is_empty() {
            let _ = writeln!(
                self.body,
                r#"<text x="{:.2}" y="{:.2}" font-size="11" font-family="sans-serif">{label}</text>"#,
                cx + 4.0,
                cy - 4.0
            );
        }
    }

    pub fn finish(self, title: &str, x_label: &str, y_label: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(s, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="30" font-size="14" font-family="sans-serif" text-anchor="middle">{title}</text>"#,
            WIDTH / 2.0
        );
        let ticks = [
            (l, b + 15.0, format!("{:.3}", self.x_range.0), "start"),
            (r, b + 15.0, format!("{:.3}", self.x_range.1), "end"),
            (l - 5.0, b, format!("{:.3}", self.y_range.0), "end"),
            (l - 5.0, t + 10.0, format!("{:.3}", self.y_range.1), "end"),
        ];
        for (x, y, text, anchor) in ticks {
            let _ = writeln!(
                s,
                r#"<text x="{x}" y="{y}" font-size="10" font-family="sans-serif" text-anchor="{anchor}">{text}</text>"#
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" font-family="sans-serif" text-anchor="middle">{x_label}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 12.0
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" font-size="12" font-family="sans-serif" text-anchor="middle" transform="rotate(-90 14 {})">{y_label}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0
        );
        s.push_str(&self.body);
        s.push_str("</svg>\n");
        s
    }
}
