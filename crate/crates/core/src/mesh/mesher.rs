//! Conforming meshes made of diagonal-split tiles plus a graded boundary strip.
//!
//! Tiles (and their dyadic refinements) become two triangles each. The strip
//! between the tiles and the domain boundary is seeded with the corners of a
//! quadtree that is refined toward the boundary, then everything is stitched
//! by a constrained Delaunay triangulation whose constraints are the tile
//! edges, the tile diagonals and the subdivided boundary.

use super::tiling::{segment_hits_box, Square, Tiling};
use super::{MeshError, Polygon, Triangulation};
use crate::geom::{BBox, Point};
use serde::{Deserialize, Serialize};
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation as _};
use std::collections::{BTreeMap, HashMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Diagonal {
    /// From the lower-left to the upper-right corner.
    #[default]
    LowerLeftUpperRight,
    /// From the upper-left to the lower-right corner.
    UpperLeftLowerRight,
}

impl Diagonal {
    /// The two triangles of `sq`, each counterclockwise.
    pub fn split(self, sq: &Square) -> [[Point; 3]; 2] {
        let [ll, lr, ur, ul] = sq.corners();
        match self {
            Diagonal::LowerLeftUpperRight => [[ll, lr, ur], [ll, ur, ul]],
            Diagonal::UpperLeftLowerRight => [[ll, lr, ul], [lr, ur, ul]],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradingParams {
    /// Extra dyadic levels applied to strip cells that touch the boundary.
    pub boundary_depth: u32,
    /// Maximum number of repair subdivisions of a tile or strip cell.
    pub max_depth: u32,
}

impl Default for GradingParams {
    fn default() -> Self {
        Self { boundary_depth: 2, max_depth: 6 }
    }
}

/// A leaf square of the tile quadtree, in lattice units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutSquare {
    /// Lower-left corner in units of the fine lattice step.
    pub origin: (i64, i64),
    /// Side is `r / 2^level`.
    pub level: u32,
    pub diagonal: Diagonal,
    /// Index of the tiling square this leaf descends from.
    pub tile: usize,
}

/// Mutable description of a mesh; [`MeshLayout::mesh`] realizes it.
#[derive(Clone, Debug)]
pub struct MeshLayout {
    domain: Polygon,
    r: f64,
    shift: u32,
    params: GradingParams,
    squares: Vec<LayoutSquare>,
    tile_lattice: Vec<(i64, i64)>,
    strip_extra: BTreeMap<(i64, i64), u32>,
}

/// A realized mesh and the tile leaf owning each triangle.
#[derive(Clone, Debug)]
pub struct MeshOutput {
    pub triangulation: Triangulation,
    pub square_of_triangle: Vec<Option<usize>>,
}

impl MeshLayout {
    pub fn new(domain: &Polygon, tiling: &Tiling, params: GradingParams) -> Self {
        let shift = params.boundary_depth + params.max_depth + 1;
        let unit = 1i64 << shift;
        let squares = tiling
            .lattice
            .iter()
            .enumerate()
            .map(|(k, &(i, j))| LayoutSquare {
                origin: ((2 * i - 1) * (unit / 2), (2 * j - 1) * (unit / 2)),
                level: 0,
                diagonal: Diagonal::default(),
                tile: k,
            })
            .collect();
        Self {
            domain: domain.clone(),
            r: tiling.r,
            shift,
            params,
            squares,
            tile_lattice: tiling.lattice.clone(),
            strip_extra: BTreeMap::new(),
        }
    }

    pub fn domain(&self) -> &Polygon {
        &self.domain
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn params(&self) -> GradingParams {
        self.params
    }

    pub fn squares(&self) -> &[LayoutSquare] {
        &self.squares
    }

    pub fn set_diagonal(&mut self, idx: usize, d: Diagonal) {
        self.squares[idx].diagonal = d;
    }

    /// Fine lattice step.
    pub fn step(&self) -> f64 {
        self.r / (1u64 << self.shift) as f64
    }

    #[inline]
    fn coord(&self, k: i64) -> f64 {
        k as f64 * self.step()
    }

    #[inline]
    fn lattice_point(&self, key: (i64, i64)) -> Point {
        Point::new(self.coord(key.0), self.coord(key.1))
    }

    fn side_units(&self, level: u32) -> i64 {
        1i64 << (self.shift - level)
    }

    pub fn square_geometry(&self, s: &LayoutSquare) -> Square {
        let u = self.side_units(s.level);
        let lo = self.lattice_point(s.origin);
        let hi = self.lattice_point((s.origin.0 + u, s.origin.1 + u));
        Square::new(lo.midpoint(hi), hi.x - lo.x)
    }

    /// Splits leaf `idx` into four children; `false` once at `max_depth`.
    /// Children are appended; the returned indices replace `idx`.
    pub fn refine_square(&mut self, idx: usize) -> Option<[usize; 4]> {
        let s = self.squares[idx];
        if s.level >= self.params.max_depth {
            return None;
        }
        let h = self.side_units(s.level + 1);
        let child = |dx: i64, dy: i64| LayoutSquare {
            origin: (s.origin.0 + dx * h, s.origin.1 + dy * h),
            level: s.level + 1,
            diagonal: s.diagonal,
            tile: s.tile,
        };
        self.squares[idx] = child(0, 0);
        let base = self.squares.len();
        self.squares.extend([child(1, 0), child(0, 1), child(1, 1)]);
        Some([idx, base, base + 1, base + 2])
    }

    /// Adds one level of uniform refinement to strip cells meeting `bb`.
    pub fn refine_strip_near(&mut self, bb: &BBox) -> bool {
        let r = self.r;
        let i0 = (bb.min.x / r).round() as i64 - 1;
        let i1 = (bb.max.x / r).round() as i64 + 1;
        let j0 = (bb.min.y / r).round() as i64 - 1;
        let j1 = (bb.max.y / r).round() as i64 + 1;
        let tiles: std::collections::HashSet<(i64, i64)> = self.tile_lattice.iter().copied().collect();
        let mut changed = false;
        for j in j0..=j1 {
            for i in i0..=i1 {
                if tiles.contains(&(i, j)) {
                    continue;
                }
                let cell = Square::new(Point::new(i as f64 * r, j as f64 * r), r);
                let cb = BBox { min: cell.min(), max: cell.max() };
                if !cb.intersects(bb) {
                    continue;
                }
                let e = self.strip_extra.entry((i, j)).or_insert(0);
                if *e < self.params.max_depth {
                    *e += 1;
                    changed = true;
                }
            }
        }
        changed
    }

    fn strip_extra_at(&self, p: Point) -> u32 {
        let key = ((p.x / self.r).round() as i64, (p.y / self.r).round() as i64);
        self.strip_extra.get(&key).copied().unwrap_or(0)
    }

    fn in_closed_tiles(&self, p: Point, tiles: &std::collections::HashSet<(i64, i64)>) -> bool {
        let (fx, fy) = (p.x / self.r, p.y / self.r);
        for i in [(fx - 0.5).floor() as i64, (fx + 0.5).floor() as i64] {
            for j in [(fy - 0.5).floor() as i64, (fy + 0.5).floor() as i64] {
                if tiles.contains(&(i, j)) && Square::new(Point::new(i as f64 * self.r, j as f64 * self.r), self.r).contains(p) {
                    return true;
                }
            }
        }
        false
    }

    /// Builds the conforming triangulation described by the layout.
    pub fn mesh(&self) -> Result<MeshOutput, MeshError> {
        let tiles: std::collections::HashSet<(i64, i64)> = self.tile_lattice.iter().copied().collect();
        let mut pts = PointSet::default();

        // tile corners
        for s in &self.squares {
            let u = self.side_units(s.level);
            for (dx, dy) in [(0, 0), (u, 0), (u, u), (0, u)] {
                let key = (s.origin.0 + dx, s.origin.1 + dy);
                pts.insert_key(key, self.lattice_point(key));
            }
        }

        // graded strip seeds
        let r = self.r;
        let bb = self.domain.bbox();
        let segs = self.domain.segments();
        let i0 = (bb.min.x / r).floor() as i64 - 1;
        let i1 = (bb.max.x / r).ceil() as i64 + 1;
        let j0 = (bb.min.y / r).floor() as i64 - 1;
        let j1 = (bb.max.y / r).ceil() as i64 + 1;
        let unit = 1i64 << self.shift;
        for j in j0..=j1 {
            for i in i0..=i1 {
                if tiles.contains(&(i, j)) {
                    continue;
                }
                let extra = self.strip_extra.get(&(i, j)).copied().unwrap_or(0);
                let origin = ((2 * i - 1) * (unit / 2), (2 * j - 1) * (unit / 2));
                self.seed_cell(origin, 0, extra, &segs, &tiles, &mut pts);
            }
        }

        // boundary vertices
        let mut boundary_edges: Vec<(usize, usize)> = Vec::new();
        let base_len = r / (1u64 << self.params.boundary_depth) as f64;
        for l in self.domain.loops() {
            let mut loop_ids = Vec::new();
            for k in 0..l.len() {
                let (a, b) = (l[k], l[(k + 1) % l.len()]);
                loop_ids.push(pts.insert_point(a));
                let n = ((a.dist(b) / base_len).ceil() as usize).max(1);
                for piece in 0..n {
                    let pa = a.lerp(b, piece as f64 / n as f64);
                    let pb = a.lerp(b, (piece + 1) as f64 / n as f64);
                    let m = 1usize << self.strip_extra_at(pa.midpoint(pb));
                    for q in 0..m {
                        if piece == 0 && q == 0 {
                            continue;
                        }
                        let t = (piece * m + q) as f64 / (n * m) as f64;
                        let p = a.lerp(b, t);
                        if self.in_closed_tiles(p, &tiles) {
                            continue;
                        }
                        loop_ids.push(pts.insert_point(p));
                    }
                }
            }
            for k in 0..loop_ids.len() {
                boundary_edges.push((loop_ids[k], loop_ids[(k + 1) % loop_ids.len()]));
            }
        }

        // constraints: boundary, tile edges split at hanging vertices, diagonals
        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        let mut push = |a: usize, b: usize, edges: &mut Vec<[usize; 2]>| {
            if a != b && seen.insert((a.min(b), a.max(b))) {
                edges.push([a, b]);
            }
        };
        for &(a, b) in &boundary_edges {
            push(a, b, &mut edges);
        }
        for s in &self.squares {
            let u = self.side_units(s.level);
            let (x, y) = s.origin;
            let c = [(x, y), (x + u, y), (x + u, y + u), (x, y + u)];
            for k in 0..4 {
                let mut out = Vec::new();
                split_lattice_edge(c[k], c[(k + 1) % 4], &pts, &mut out);
                for (a, b) in out {
                    push(a, b, &mut edges);
                }
            }
            let (a, b) = match s.diagonal {
                Diagonal::LowerLeftUpperRight => (c[0], c[2]),
                Diagonal::UpperLeftLowerRight => (c[3], c[1]),
            };
            push(pts.keyed[&a], pts.keyed[&b], &mut edges);
        }

        let positions: Vec<Point2<f64>> = pts.points.iter().map(|p| Point2::new(p.x, p.y)).collect();
        let mut conflicts = Vec::new();
        let cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::try_bulk_load_cdt(positions, edges, |e| {
            conflicts.push(e)
        })
        .map_err(|e| MeshError::TriangulationFailed(format!("{e:?}")))?;
        if !conflicts.is_empty() {
            return Err(MeshError::TriangulationFailed(format!(
                "{} conflicting constraint edges",
                conflicts.len()
            )));
        }
        if cdt.num_vertices() != pts.points.len() {
            return Err(MeshError::TriangulationFailed("duplicate mesh vertices".into()));
        }

        let inside = classify_faces(&cdt, &boundary_edges)?;
        let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
        for f in cdt.inner_faces() {
            if inside[f.fix().index()] {
                triangles.push(f.vertices().map(|v| v.fix().index()));
            }
        }
        triangles.sort_unstable();

        // drop vertices not used by any triangle (outside seeds never happen, but holes may)
        let mut remap = vec![usize::MAX; pts.points.len()];
        let mut vertices = Vec::new();
        for t in &mut triangles {
            for v in t.iter_mut() {
                if remap[*v] == usize::MAX {
                    remap[*v] = vertices.len();
                    vertices.push(pts.points[*v]);
                }
                *v = remap[*v];
            }
        }
        let triangulation = Triangulation::new(vertices, triangles)?;
        triangulation.validate(Some(&self.domain))?;

        let square_of_triangle = self.assign_squares(&triangulation);
        Ok(MeshOutput { triangulation, square_of_triangle })
    }

    fn seed_cell(
        &self,
        origin: (i64, i64),
        level: u32,
        extra: u32,
        segs: &[(Point, Point)],
        tiles: &std::collections::HashSet<(i64, i64)>,
        pts: &mut PointSet,
    ) {
        let u = self.side_units(level);
        let lo = self.lattice_point(origin);
        let hi = self.lattice_point((origin.0 + u, origin.1 + u));
        let touches_boundary = segs.iter().any(|&(a, b)| segment_hits_box(a, b, lo, hi));
        if !touches_boundary && !self.domain.contains(lo.midpoint(hi)) {
            return;
        }
        let target = if touches_boundary { extra + self.params.boundary_depth } else { extra };
        if level < target {
            let h = self.side_units(level + 1);
            for (dx, dy) in [(0, 0), (h, 0), (0, h), (h, h)] {
                self.seed_cell((origin.0 + dx, origin.1 + dy), level + 1, extra, segs, tiles, pts);
            }
            return;
        }
        let size = hi.x - lo.x;
        for (dx, dy) in [(0, 0), (u, 0), (u, u), (0, u)] {
            let key = (origin.0 + dx, origin.1 + dy);
            if pts.keyed.contains_key(&key) {
                continue;
            }
            let p = self.lattice_point(key);
            if !self.domain.contains(p) || self.in_closed_tiles(p, tiles) {
                continue;
            }
            if self.domain.boundary_distance(p) < 0.35 * size {
                continue;
            }
            pts.insert_key(key, p);
        }
    }

    fn assign_squares(&self, t: &Triangulation) -> Vec<Option<usize>> {
        // every leaf origin is congruent to half a tile modulo its own side
        let half = 1i64 << (self.shift - 1);
        let mut lookup: HashMap<(i64, i64, u32), usize> = HashMap::with_capacity(self.squares.len());
        let mut levels: Vec<u32> = Vec::new();
        for (k, s) in self.squares.iter().enumerate() {
            let u = self.side_units(s.level);
            lookup.insert(((s.origin.0 - half).div_euclid(u), (s.origin.1 - half).div_euclid(u), s.level), k);
            if !levels.contains(&s.level) {
                levels.push(s.level);
            }
        }
        let step = self.step();
        (0..t.num_triangles())
            .map(|tri| {
                let c = t.centroid(tri);
                let (kx, ky) = ((c.x / step).floor() as i64 - half, (c.y / step).floor() as i64 - half);
                levels.iter().find_map(|&l| {
                    let u = self.side_units(l);
                    lookup.get(&(kx.div_euclid(u), ky.div_euclid(u), l)).copied()
                })
            })
            .collect()
    }
}

/// Splits the lattice segment `a → b` at every existing midpoint vertex.
fn split_lattice_edge(a: (i64, i64), b: (i64, i64), pts: &PointSet, out: &mut Vec<(usize, usize)>) {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    if (dx.abs() > 1 || dy.abs() > 1) && dx % 2 == 0 && dy % 2 == 0 {
        let m = (a.0 + dx / 2, a.1 + dy / 2);
        if pts.keyed.contains_key(&m) {
            split_lattice_edge(a, m, pts, out);
            split_lattice_edge(m, b, pts, out);
            return;
        }
    }
    out.push((pts.keyed[&a], pts.keyed[&b]));
}

#[derive(Default)]
struct PointSet {
    points: Vec<Point>,
    keyed: HashMap<(i64, i64), usize>,
    by_bits: HashMap<(u64, u64), usize>,
}

impl PointSet {
    fn insert_key(&mut self, key: (i64, i64), p: Point) -> usize {
        if let Some(&i) = self.keyed.get(&key) {
            return i;
        }
        let i = self.insert_point(p);
        self.keyed.insert(key, i);
        i
    }

    fn insert_point(&mut self, p: Point) -> usize {
        // normalize -0.0 so bit keys agree
        let p = Point::new(p.x + 0.0, p.y + 0.0);
        *self.by_bits.entry((p.x.to_bits(), p.y.to_bits())).or_insert_with(|| {
            self.points.push(p);
            self.points.len() - 1
        })
    }
}

/// Conforming mesh with every tile split along its lower-left to upper-right diagonal.
pub fn triangulate(domain: &Polygon, tiling: &Tiling, grading: GradingParams) -> Result<Triangulation, MeshError> {
    Ok(MeshLayout::new(domain, tiling, grading).mesh()?.triangulation)
}

/// Triangulation of a domain at roughly uniform spacing `h` (no tiles).
pub fn triangulate_domain(domain: &Polygon, h: f64) -> Result<Triangulation, MeshError> {
    if domain.holes().is_empty() && domain.outer().len() == 4 {
        let bb = domain.bbox();
        let o = domain.outer();
        let axis_aligned = (0..4).all(|k| {
            let (a, b) = (o[k], o[(k + 1) % 4]);
            a.x == b.x || a.y == b.y
        });
        if axis_aligned && (domain.area() - bb.width() * bb.height()).abs() <= 1e-15 * domain.area() {
            let nx = ((bb.width() / h).ceil() as usize).max(1);
            let ny = ((bb.height() / h).ceil() as usize).max(1);
            return Ok(Triangulation::grid(bb.min.x, bb.min.y, bb.max.x, bb.max.y, nx, ny));
        }
    }
    let empty = Tiling::empty(domain, h);
    MeshLayout::new(domain, &empty, GradingParams { boundary_depth: 1, max_depth: 0 })
        .mesh()
        .map(|m| m.triangulation)
}

/// Marks faces inside the domain by flooding from the hull and flipping
/// across boundary constraint edges.
fn classify_faces(
    cdt: &ConstrainedDelaunayTriangulation<Point2<f64>>,
    boundary_edges: &[(usize, usize)],
) -> Result<Vec<bool>, MeshError> {
    let is_boundary: std::collections::HashSet<(usize, usize)> =
        boundary_edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    let crosses = |e: spade::handles::DirectedEdgeHandle<'_, _, _, _, _>| {
        let (a, b) = (e.from().fix().index(), e.to().fix().index());
        is_boundary.contains(&(a.min(b), a.max(b)))
    };
    // faces are indexed from 1; slot 0 is the outer face
    let n = cdt.num_all_faces();
    let mut state: Vec<Option<bool>> = vec![None; n];
    let mut stack = Vec::new();
    for f in cdt.inner_faces() {
        for e in f.adjacent_edges() {
            if e.rev().face().as_inner().is_none() {
                let s = crosses(e);
                let i = f.fix().index();
                match state[i] {
                    None => {
                        state[i] = Some(s);
                        stack.push(f);
                    }
                    Some(t) if t != s => {
                        return Err(MeshError::TriangulationFailed("inconsistent hull classification".into()))
                    }
                    _ => {}
                }
            }
        }
    }
    while let Some(f) = stack.pop() {
        let s = state[f.fix().index()].unwrap_or(false);
        for e in f.adjacent_edges() {
            if let Some(g) = e.rev().face().as_inner() {
                let t = s ^ crosses(e);
                let j = g.fix().index();
                match state[j] {
                    None => {
                        state[j] = Some(t);
                        stack.push(g);
                    }
                    Some(u) if u != t => {
                        return Err(MeshError::TriangulationFailed("inconsistent face classification".into()))
                    }
                    _ => {}
                }
            }
        }
    }
    Ok(state.into_iter().map(|s| s.unwrap_or(false)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::tiling::r_tiling;

    fn check_tiles_split(layout: &MeshLayout, out: &MeshOutput) {
        let t = &out.triangulation;
        let mut count = vec![0usize; layout.squares().len()];
        let mut area = vec![0.0; layout.squares().len()];
        for (tri, s) in out.square_of_triangle.iter().enumerate() {
            if let Some(s) = s {
                count[*s] += 1;
                area[*s] += t.signed_area(tri);
            }
        }
        for (k, s) in layout.squares().iter().enumerate() {
            let sq = layout.square_geometry(s);
            assert_eq!(count[k], 2, "square {k}");
            assert!((area[k] - sq.area()).abs() < 1e-12 * sq.area().max(1e-300));
        }
    }

    #[test]
    fn unit_square_tenth_mesh() {
        let d = Polygon::unit_square();
        let tiling = r_tiling(&d, 0.1).unwrap();
        let layout = MeshLayout::new(&d, &tiling, GradingParams::default());
        let out = layout.mesh().unwrap();
        assert!(out.triangulation.num_triangles() >= 98);
        out.triangulation.validate(Some(&d)).unwrap();
        check_tiles_split(&layout, &out);
    }

    #[test]
    fn single_tile_domain_is_two_triangles() {
        let d = Polygon::rect(-0.5, -0.5, 0.5, 0.5).unwrap();
        let tiling = Tiling {
            r: 1.0,
            squares: vec![Square::new(Point::new(0.0, 0.0), 1.0)],
            lattice: vec![(0, 0)],
            uncovered_area: 0.0,
        };
        let t = triangulate(&d, &tiling, GradingParams::default()).unwrap();
        assert_eq!(t.num_triangles(), 2);
    }

    #[test]
    fn hole_gives_two_loops() {
        let d = Polygon::square_with_hole();
        let tiling = r_tiling(&d, 1.0 / 32.0).unwrap();
        let t = triangulate(&d, &tiling, GradingParams::default()).unwrap();
        assert_eq!(t.boundary().len(), 2);
        t.validate(Some(&d)).unwrap();
    }

    #[test]
    fn refinement_keeps_conformity() {
        let d = Polygon::unit_square();
        let tiling = r_tiling(&d, 0.125).unwrap();
        let mut layout = MeshLayout::new(&d, &tiling, GradingParams::default());
        let kids = layout.refine_square(3).unwrap();
        layout.refine_square(kids[2]).unwrap();
        layout.set_diagonal(0, Diagonal::UpperLeftLowerRight);
        let bb = BBox { min: Point::new(0.0, 0.0), max: Point::new(0.1, 0.1) };
        assert!(layout.refine_strip_near(&bb));
        let out = layout.mesh().unwrap();
        out.triangulation.validate(Some(&d)).unwrap();
        assert!(out.square_of_triangle.iter().flatten().count() >= 2 * layout.squares().len());
    }

    #[test]
    fn domain_triangulation_covers() {
        let t = triangulate_domain(&Polygon::square_with_hole(), 0.05).unwrap();
        t.validate(Some(&Polygon::square_with_hole())).unwrap();
        let g = triangulate_domain(&Polygon::unit_square(), 0.25).unwrap();
        assert_eq!(g.num_triangles(), 32);
    }
    #[test]
    fn slanted_domains_keep_their_area() {
        let shear = Polygon::new(
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.7, 1.0), Point::new(0.7, 1.0)],
            vec![],
        )
        .unwrap();
        let para = Polygon::new(
            vec![Point::new(1.0, 0.0), Point::new(3.0, -0.3), Point::new(3.5, 0.9), Point::new(1.5, 1.2)],
            vec![],
        )
        .unwrap();
        for d in [shear, para] {
            for res in [4.0, 8.0, 16.0, 32.0] {
                let t = triangulate_domain(&d, d.diameter() / res).unwrap();
                let a: f64 = (0..t.num_triangles()).map(|k| t.signed_area(k)).sum();
                assert!((a - d.area()).abs() < 1e-9 * d.area(), "res {res}: {a} vs {}", d.area());
            }
        }
    }
}

