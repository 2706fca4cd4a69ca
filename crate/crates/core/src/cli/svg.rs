//! Static 800×800 phase portraits in the (V, C) plane.

use std::fmt::Write;

use crate::similarity::PhasePoint;

pub const SIZE: f64 = 800.0;
const MARGIN: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stroke {
    Solid,
    Dashed,
    Dotted,
    Thin,
}

impl Stroke {
    fn attrs(self) -> &'static str {
        match self {
            Stroke::Solid => r#"stroke="black" stroke-width="1.6""#,
            Stroke::Dashed => r#"stroke="black" stroke-width="1" stroke-dasharray="6,4""#,
            Stroke::Dotted => r#"stroke="black" stroke-width="1" stroke-dasharray="1.5,3""#,
            Stroke::Thin => r#"stroke="gray" stroke-width="0.7""#,
        }
    }
}

/// A plot window with accumulated elements.
pub struct Portrait {
    v: (f64, f64),
    c: (f64, f64),
    body: String,
}

impl Portrait {
    /// Window covering `pts`, padded by 10% on each side.
    pub fn covering(pts: &[PhasePoint]) -> Self {
        let fin: Vec<&PhasePoint> = pts.iter().filter(|p| p.v.is_finite() && p.c.is_finite()).collect();
        let (mut v0, mut v1, mut c0, mut c1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in fin {
            v0 = v0.min(p.v);
            v1 = v1.max(p.v);
            c0 = c0.min(p.c);
            c1 = c1.max(p.c);
        }
        if v0 > v1 {
            (v0, v1, c0, c1) = (-1.0, 1.0, -1.0, 1.0);
        }
        let pad = |a: f64, b: f64| {
            let w = (b - a).max(1e-6);
            (a - 0.1 * w, b + 0.1 * w)
        };
        Self { v: pad(v0, v1), c: pad(c0, c1), body: String::new() }
    }

    fn map(&self, p: PhasePoint) -> (f64, f64) {
        let w = SIZE - 2.0 * MARGIN;
        let x = MARGIN + (p.v - self.v.0) / (self.v.1 - self.v.0) * w;
        let y = SIZE - MARGIN - (p.c - self.c.0) / (self.c.1 - self.c.0) * w;
        (x, y)
    }

    fn visible(&self, p: PhasePoint) -> bool {
        let (wv, wc) = (self.v.1 - self.v.0, self.c.1 - self.c.0);
        p.v.is_finite()
            && p.c.is_finite()
            && (self.v.0 - wv..=self.v.1 + wv).contains(&p.v)
            && (self.c.0 - wc..=self.c.1 + wc).contains(&p.c)
    }

    /// Polyline through `pts`, split where points leave a band around the window.
    pub fn curve(&mut self, pts: impl IntoIterator<Item = PhasePoint>, stroke: Stroke) {
        let mut run: Vec<(f64, f64)> = Vec::new();
        let flush = |run: &mut Vec<(f64, f64)>, body: &mut String| {
            if run.len() >= 2 {
                let coords: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(body, r#"<polyline fill="none" {} points="{}"/>"#, stroke.attrs(), coords.join(" "));
            }
            run.clear();
        };
        for p in pts {
            if self.visible(p) {
                let q = self.map(p);
                if run.last().is_none_or(|l| (l.0 - q.0).abs() + (l.1 - q.1).abs() > 0.25) {
                    run.push(q);
                }
            } else {
                flush(&mut run, &mut self.body);
            }
        }
        flush(&mut run, &mut self.body);
    }

    pub fn segment(&mut self, a: PhasePoint, b: PhasePoint, stroke: Stroke) {
        self.curve([a, b], stroke);
    }

    pub fn point(&mut self, p: PhasePoint, label: &str) {
        if !self.visible(p) {
            return;
        }
        let (x, y) = self.map(p);
        let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="black"/>"#);
        let _ = writeln!(self.body, r#"<text x="{:.2}" y="{:.2}" font-size="13" font-family="serif">{label}</text>"#, x + 5.0, y - 5.0);
    }

    /// V-axis, horizontal axis and the critical lines C = ±(1+V) across the window.
    pub fn axes(&mut self) {
        let (v0, v1) = self.v;
        let (c0, c1) = self.c;
        self.segment(PhasePoint::new(v0, 0.0), PhasePoint::new(v1, 0.0), Stroke::Thin);
        self.segment(PhasePoint::new(0.0, c0), PhasePoint::new(0.0, c1), Stroke::Thin);
        self.segment(PhasePoint::new(v0, 1.0 + v0), PhasePoint::new(v1, 1.0 + v1), Stroke::Thin);
        self.segment(PhasePoint::new(v0, -1.0 - v0), PhasePoint::new(v1, -1.0 - v1), Stroke::Thin);
    }

    pub fn v_range(&self) -> (f64, f64) {
        self.v
    }

    pub fn finish(&self, title: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="800" viewBox="0 0 800 800">"#);
        let _ = writeln!(s, r#"<rect width="800" height="800" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="40" y="25" font-size="14" font-family="serif">{title}</text>"#);
        let _ = writeln!(
            s,
            r#"<text x="40" y="790" font-size="11" font-family="serif">V in [{:.4}, {:.4}], C in [{:.4}, {:.4}]</text>"#,
            self.v.0, self.v.1, self.c.0, self.c.1
        );
        let (a, b) = (MARGIN, SIZE - 2.0 * MARGIN);
        let _ = writeln!(s, r#"<defs><clipPath id="plot"><rect x="{a}" y="{a}" width="{b}" height="{b}"/></clipPath></defs>"#);
        let _ = writeln!(s, r#"<rect x="{a}" y="{a}" width="{b}" height="{b}" fill="none" stroke="black" stroke-width="0.8"/>"#);
        s.push_str("<g clip-path=\"url(#plot)\">\n");
        s.push_str(&self.body);
        s.push_str("</g>\n</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_and_clipping() {
        let mut p = Portrait::covering(&[PhasePoint::new(0.0, 0.0), PhasePoint::new(1.0, 1.0)]);
        assert_eq!(p.map(PhasePoint::new(-0.1, -0.1)), (MARGIN, SIZE - MARGIN));
        p.curve([PhasePoint::new(0.0, 0.0), PhasePoint::new(0.5, 0.5), PhasePoint::new(0.5, 1e9), PhasePoint::new(1.0, 1.0)], Stroke::Solid);
        let s = p.finish("t");
        assert_eq!(s.matches("<polyline").count(), 1);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
    }
}
