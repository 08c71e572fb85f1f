//! Plain-text mesh format.
//!
//! ```text
//! v x y          one line per vertex
//! t i j k        one line per triangle (0-based vertex indices)
//! b i1 i2 ...    one line per boundary loop
//! w x y          optional, one line per image vertex
//! ```
//!
//! Coordinates are written with the shortest decimal that parses back to the
//! same binary64 value, so a write/read cycle is lossless.

use super::{MeshError, Triangulation};
use crate::geom::Point;
use std::fmt::Write as _;

/// Raw records of a mesh file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeshRecords {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<Vec<usize>>,
    pub images: Vec<Point>,
}

pub fn write_triangulation(t: &Triangulation, out: &mut String) {
    for v in t.vertices() {
        let _ = writeln!(out, "v {} {}", v.x, v.y);
    }
    for tri in t.triangles() {
        let _ = writeln!(out, "t {} {} {}", tri[0], tri[1], tri[2]);
    }
    for l in t.boundary() {
        out.push('b');
        for i in l {
            let _ = write!(out, " {i}");
        }
        out.push('\n');
    }
}

pub fn triangulation_to_text(t: &Triangulation) -> String {
    let mut s = String::new();
    write_triangulation(t, &mut s);
    s
}

pub fn parse_records(text: &str) -> Result<MeshRecords, MeshError> {
    let mut rec = MeshRecords::default();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let err = |message: String| MeshError::Parse { line: line_no, message };
        let mut it = line.split_whitespace();
        let Some(tag) = it.next() else { continue };
        if tag.starts_with('#') {
            continue;
        }
        let rest: Vec<&str> = it.collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`")));
        let idx = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad index `{s}`")));
        match tag {
            "v" | "w" => {
                if rest.len() != 2 {
                    return Err(err(format!("`{tag}` needs 2 coordinates")));
                }
                let p = Point::new(num(rest[0])?, num(rest[1])?);
                if tag == "v" { rec.vertices.push(p) } else { rec.images.push(p) }
            }
            "t" => {
                if rest.len() != 3 {
                    return Err(err("`t` needs 3 indices".into()));
                }
                rec.triangles.push([idx(rest[0])?, idx(rest[1])?, idx(rest[2])?]);
            }
            "b" => {
                rec.boundary.push(rest.iter().map(|s| idx(s)).collect::<Result<_, _>>()?);
            }
            other => return Err(err(format!("unknown record `{other}`"))),
        }
    }
    Ok(rec)
}

/// Builds the triangulation and checks the stored boundary loops against it.
pub fn records_to_triangulation(rec: &MeshRecords) -> Result<Triangulation, MeshError> {
    let t = Triangulation::new(rec.vertices.clone(), rec.triangles.clone())?;
    if !rec.boundary.is_empty() && rec.boundary.as_slice() != t.boundary() {
        return Err(MeshError::Parse {
            line: 0,
            message: "boundary loops do not match the triangles".into(),
        });
    }
    Ok(t)
}

pub fn triangulation_from_text(text: &str) -> Result<Triangulation, MeshError> {
    records_to_triangulation(&parse_records(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut t = Triangulation::grid(0.0, 0.0, 1.0, 1.0, 3, 3);
        let moved: Vec<Point> = t
            .vertices()
            .iter()
            .map(|p| Point::new(p.x + 1e-17 * p.y, p.y * (1.0 / 3.0)))
            .collect();
        t = t.with_vertices(moved).unwrap();
        let s = triangulation_to_text(&t);
        let back = triangulation_from_text(&s).unwrap();
        for (a, b) in t.vertices().iter().zip(back.vertices()) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.y.to_bits(), b.y.to_bits());
        }
        assert_eq!(t.triangles(), back.triangles());
        assert_eq!(triangulation_to_text(&back), s);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(parse_records("v 1\n"), Err(MeshError::Parse { line: 1, .. })));
        assert!(parse_records("q 1 2\n").is_err());
    }
}
