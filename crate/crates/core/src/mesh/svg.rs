//! Minimal deterministic SVG writer for meshes and plots.

use super::{Polygon, Tiling, Triangulation};
use crate::geom::{BBox, Point};
use std::fmt::Write as _;

/// World-to-pixel canvas; y grows upward in world coordinates.
pub struct SvgCanvas {
    bbox: BBox,
    width: f64,
    height: f64,
    margin: f64,
    body: String,
}

fn fmt(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

impl SvgCanvas {
    pub fn new(bbox: BBox, width: f64) -> Self {
        let aspect = if bbox.width() > 0.0 { bbox.height() / bbox.width() } else { 1.0 };
        Self { bbox, width, height: width * aspect, margin: 10.0, body: String::new() }
    }

    /// Canvas of fixed pixel size with independent axis scaling.
    pub fn with_size(bbox: BBox, width: f64, height: f64) -> Self {
        Self { bbox, width, height, margin: 40.0, body: String::new() }
    }

    pub fn map(&self, p: Point) -> (f64, f64) {
        let sx = if self.bbox.width() > 0.0 { self.width / self.bbox.width() } else { 1.0 };
        let sy = if self.bbox.height() > 0.0 { self.height / self.bbox.height() } else { 1.0 };
        (
            self.margin + (p.x - self.bbox.min.x) * sx,
            self.margin + (self.bbox.max.y - p.y) * sy,
        )
    }

    pub fn polygon(&mut self, pts: &[Point], fill: &str, stroke: &str, stroke_width: f64) {
        let mut d = String::new();
        for (k, p) in pts.iter().enumerate() {
            let (x, y) = self.map(*p);
            let _ = write!(d, "{}{},{}", if k == 0 { "" } else { " " }, fmt(x), fmt(y));
        }
        let _ = writeln!(
            self.body,
            r#"<polygon points="{d}" fill="{fill}" stroke="{stroke}" stroke-width="{}"/>"#,
            fmt(stroke_width)
        );
    }

    pub fn polyline(&mut self, pts: &[Point], stroke: &str, stroke_width: f64) {
        let mut d = String::new();
        for (k, p) in pts.iter().enumerate() {
            let (x, y) = self.map(*p);
            let _ = write!(d, "{}{},{}", if k == 0 { "" } else { " " }, fmt(x), fmt(y));
        }
        let _ = writeln!(
            self.body,
            r#"<polyline points="{d}" fill="none" stroke="{stroke}" stroke-width="{}"/>"#,
            fmt(stroke_width)
        );
    }

    pub fn circle(&mut self, p: Point, radius: f64, fill: &str) {
        let (x, y) = self.map(p);
        let _ = writeln!(self.body, r#"<circle cx="{}" cy="{}" r="{}" fill="{fill}"/>"#, fmt(x), fmt(y), fmt(radius));
    }

    /// Text at pixel coordinates.
    pub fn text_px(&mut self, x: f64, y: f64, size: f64, anchor: &str, text: &str) {
        let escaped = text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" font-size="{}" font-family="sans-serif" text-anchor="{anchor}">{escaped}</text>"#,
            fmt(x),
            fmt(y),
            fmt(size)
        );
    }

    pub fn pixel_size(&self) -> (f64, f64) {
        (self.width + 2.0 * self.margin, self.height + 2.0 * self.margin)
    }

    pub fn finish(self) -> String {
        let (w, h) = self.pixel_size();
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            fmt(w),
            fmt(h),
            fmt(w),
            fmt(h),
            self.body
        )
    }
}

pub fn triangulation_svg(t: &Triangulation, highlight: &[usize]) -> String {
    let mut c = SvgCanvas::new(t.bbox(), 600.0);
    for k in 0..t.num_triangles() {
        let fill = if highlight.binary_search(&k).is_ok() { "#f4a3a3" } else { "#e8eef7" };
        c.polygon(&t.triangle_points(k), fill, "#34495e", 0.4);
    }
    for k in 0..t.boundary().len() {
        let mut l = t.boundary_loop_points(k);
        l.push(l[0]);
        c.polyline(&l, "#000000", 1.2);
    }
    c.finish()
}

pub fn tiling_svg(domain: &Polygon, tiling: &Tiling) -> String {
    let mut c = SvgCanvas::new(domain.bbox(), 600.0);
    c.polygon(domain.outer(), "#f7f7f7", "#000000", 1.2);
    for h in domain.holes() {
        c.polygon(h, "#ffffff", "#000000", 1.2);
    }
    for sq in &tiling.squares {
        c.polygon(&sq.corners(), "#9ec5e8", "#1f4e79", 0.5);
    }
    c.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_output() {
        let t = Triangulation::grid(0.0, 0.0, 1.0, 1.0, 2, 2);
        let a = triangulation_svg(&t, &[1]);
        assert_eq!(a, triangulation_svg(&t, &[1]));
        assert!(a.starts_with("<svg"));
        assert_eq!(a.matches("<polygon").count(), 8);
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt(1.5), "1.5");
        assert_eq!(fmt(2.0), "2");
        assert_eq!(fmt(-0.0001), "0");
    }
}
