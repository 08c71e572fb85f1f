use super::predicates::{in_triangle_closed, orientation, Orientation};
use super::{MeshError, Polygon};
use crate::geom::{centroid, loop_signed_area, signed_area2, BBox, Point};
use crate::numeric::compensated_sum;
use std::collections::HashMap;
use std::sync::OnceLock;

/// Triangle mesh with neighbor table and oriented boundary loops.
///
/// Construction only checks topology (every directed edge used once, every
/// undirected edge by at most two triangles, manifold boundary). Geometric
/// validity is a separate [`Triangulation::validate`] call because the same
/// connectivity is reused for image meshes that may be folded.
#[derive(Debug)]
pub struct Triangulation {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    /// `adjacency[t][k]`: neighbor across the edge opposite corner `k`.
    adjacency: Vec<[Option<usize>; 3]>,
    boundary: Vec<Vec<usize>>,
    index: OnceLock<GridIndex>,
}

impl Clone for Triangulation {
    fn clone(&self) -> Self {
        Self {
            vertices: self.vertices.clone(),
            triangles: self.triangles.clone(),
            adjacency: self.adjacency.clone(),
            boundary: self.boundary.clone(),
            index: OnceLock::new(),
        }
    }
}

impl PartialEq for Triangulation {
    fn eq(&self, o: &Self) -> bool {
        self.vertices == o.vertices && self.triangles == o.triangles
    }
}

impl Triangulation {
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let n = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(MeshError::InvalidTriangulation(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::InvalidTriangulation(format!("triangle {t} repeats a vertex")));
            }
        }
        // directed edge (a, b) -> (triangle, opposite corner)
        let mut directed: HashMap<(usize, usize), (usize, usize)> = HashMap::with_capacity(3 * triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let e = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                if directed.insert(e, (t, k)).is_some() {
                    return Err(MeshError::InvalidTriangulation(format!(
                        "directed edge {e:?} used twice (inconsistent orientation or non-manifold)"
                    )));
                }
            }
        }
        let mut adjacency = vec![[None; 3]; triangles.len()];
        let mut next_on_boundary: HashMap<usize, usize> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                match directed.get(&(b, a)) {
                    Some(&(u, _)) => adjacency[t][k] = Some(u),
                    None => {
                        if next_on_boundary.insert(a, b).is_some() {
                            return Err(MeshError::InvalidTriangulation(format!(
                                "boundary is pinched at vertex {a}"
                            )));
                        }
                    }
                }
            }
        }
        if !triangles.is_empty() && next_on_boundary.is_empty() {
            return Err(MeshError::InvalidTriangulation("triangles form a closed surface".into()));
        }
        let boundary = chain_loops(next_on_boundary)?;
        Ok(Self {
            vertices,
            triangles,
            adjacency,
            boundary,
            index: OnceLock::new(),
        })
    }

    /// Same connectivity, new vertex positions.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Result<Self, MeshError> {
        if vertices.len() != self.vertices.len() {
            return Err(MeshError::InvalidTriangulation(format!(
                "expected {} vertices, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        Ok(Self {
            vertices,
            triangles: self.triangles.clone(),
            adjacency: self.adjacency.clone(),
            boundary: self.boundary.clone(),
            index: OnceLock::new(),
        })
    }

    /// Rectangle `[x0,x1]×[y0,y1]` split into `nx × ny` cells, each cut by its
    /// lower-left to upper-right diagonal.
    pub fn grid(x0: f64, y0: f64, x1: f64, y1: f64, nx: usize, ny: usize) -> Self {
        assert!(nx > 0 && ny > 0);
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                let x = if i == nx { x1 } else { x0 + (x1 - x0) * i as f64 / nx as f64 };
                let y = if j == ny { y1 } else { y0 + (y1 - y0) * j as f64 / ny as f64 };
                vertices.push(Point::new(x, y));
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        Self::new(vertices, triangles).expect("grid mesh is valid")
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn adjacency(&self) -> &[[Option<usize>; 3]] {
        &self.adjacency
    }

    /// Oriented boundary loops (interior on the left).
    pub fn boundary(&self) -> &[Vec<usize>] {
        &self.boundary
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    #[inline]
    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * signed_area2(a, b, c)
    }

    pub fn orientation(&self, t: usize) -> Orientation {
        let [a, b, c] = self.triangle_points(t);
        orientation(a, b, c)
    }

    /// Sum of signed triangle areas (compensated).
    pub fn area(&self) -> f64 {
        compensated_sum((0..self.triangles.len()).map(|t| self.signed_area(t)))
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(self.vertices.iter())
    }

    pub fn boundary_loop_points(&self, k: usize) -> Vec<Point> {
        self.boundary[k].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn is_boundary_vertex(&self) -> Vec<bool> {
        let mut flags = vec![false; self.vertices.len()];
        for l in &self.boundary {
            for &v in l {
                flags[v] = true;
            }
        }
        flags
    }

    /// The domain bounded by the boundary loops.
    pub fn boundary_polygon(&self) -> Result<Polygon, MeshError> {
        let mut outer = None;
        let mut holes = Vec::new();
        for k in 0..self.boundary.len() {
            let pts = self.boundary_loop_points(k);
            if loop_signed_area(&pts) > 0.0 {
                if outer.replace(pts).is_some() {
                    return Err(MeshError::InvalidTriangulation("more than one outer boundary loop".into()));
                }
            } else {
                holes.push(pts);
            }
        }
        let outer = outer.ok_or_else(|| MeshError::InvalidTriangulation("no outer boundary loop".into()))?;
        Polygon::new(outer, holes)
    }

    /// Geometric invariants: positive orientation everywhere and, when a
    /// domain is given, area agreement within `1e-9 · |domain|` and every
    /// domain corner present as a mesh vertex.
    pub fn validate(&self, domain: Option<&Polygon>) -> Result<(), MeshError> {
        for t in 0..self.triangles.len() {
            if self.orientation(t) != Orientation::Positive {
                return Err(MeshError::InvalidTriangulation(format!("triangle {t} is not positively oriented")));
            }
        }
        if let Some(d) = domain {
            let (a, da) = (self.area(), d.area());
            if (a - da).abs() > 1e-9 * da {
                return Err(MeshError::InvalidTriangulation(format!(
                    "mesh area {a} differs from domain area {da}"
                )));
            }
            let bset: std::collections::HashSet<(u64, u64)> = self
                .boundary
                .iter()
                .flatten()
                .map(|&v| (self.vertices[v].x.to_bits(), self.vertices[v].y.to_bits()))
                .collect();
            for p in d.vertices() {
                if !bset.contains(&(p.x.to_bits(), p.y.to_bits())) {
                    return Err(MeshError::InvalidTriangulation(format!(
                        "domain corner {p:?} is not a boundary vertex"
                    )));
                }
            }
            if self.boundary.len() != 1 + d.holes().len() {
                return Err(MeshError::InvalidTriangulation(format!(
                    "expected {} boundary loops, found {}",
                    1 + d.holes().len(),
                    self.boundary.len()
                )));
            }
        }
        Ok(())
    }

    fn index(&self) -> &GridIndex {
        self.index.get_or_init(|| GridIndex::build(self))
    }

    /// Triangles whose bounding box meets `bb`, in increasing index order.
    pub fn candidates(&self, bb: &BBox) -> Vec<usize> {
        self.index().query_box(bb)
    }

    /// Lowest-index triangle containing `p` (closed), `None` if outside.
    ///
    /// Assumes positively oriented triangles.
    pub fn locate(&self, p: Point) -> Option<usize> {
        let idx = self.index();
        idx.cell_of(p)?
            .iter()
            .copied()
            .filter(|&t| in_triangle_closed(p, &self.triangle_points(t)))
            .min()
    }

    pub fn centroid(&self, t: usize) -> Point {
        centroid(&self.triangle_points(t))
    }
}

fn chain_loops(mut next: HashMap<usize, usize>) -> Result<Vec<Vec<usize>>, MeshError> {
    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut loops = Vec::new();
    for s in starts {
        if !next.contains_key(&s) {
            continue;
        }
        let mut l = vec![s];
        let mut cur = next.remove(&s).unwrap();
        while cur != s {
            l.push(cur);
            cur = next.remove(&cur).ok_or_else(|| {
                MeshError::InvalidTriangulation(format!("boundary does not close at vertex {cur}"))
            })?;
        }
        loops.push(l);
    }
    Ok(loops)
}

/// Uniform bucket grid over triangle bounding boxes.
#[derive(Debug)]
struct GridIndex {
    bb: BBox,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<usize>>,
}

impl GridIndex {
    fn build(t: &Triangulation) -> Self {
        let bb = t.bbox();
        let n = t.num_triangles().max(1);
        let side = (n as f64).sqrt().ceil() as usize;
        let aspect = if bb.height() > 0.0 { bb.width() / bb.height() } else { 1.0 };
        let nx = ((side as f64 * aspect.sqrt()).round() as usize).clamp(1, 4096);
        let ny = ((side as f64 / aspect.sqrt()).round() as usize).clamp(1, 4096);
        let mut g = Self { bb, nx, ny, cells: vec![Vec::new(); nx * ny] };
        for tri in 0..t.num_triangles() {
            let tb = BBox::of_points(t.triangle_points(tri).iter());
            let (i0, j0) = g.cell_coords(tb.min);
            let (i1, j1) = g.cell_coords(tb.max);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    g.cells[j * nx + i].push(tri);
                }
            }
        }
        g
    }

    fn cell_coords(&self, p: Point) -> (usize, usize) {
        let fx = if self.bb.width() > 0.0 { (p.x - self.bb.min.x) / self.bb.width() } else { 0.0 };
        let fy = if self.bb.height() > 0.0 { (p.y - self.bb.min.y) / self.bb.height() } else { 0.0 };
        let i = ((fx * self.nx as f64).floor().max(0.0) as usize).min(self.nx - 1);
        let j = ((fy * self.ny as f64).floor().max(0.0) as usize).min(self.ny - 1);
        (i, j)
    }

    fn cell_of(&self, p: Point) -> Option<&[usize]> {
        if !self.bb.contains(p) {
            return None;
        }
        let (i, j) = self.cell_coords(p);
        Some(&self.cells[j * self.nx + i])
    }

    fn query_box(&self, bb: &BBox) -> Vec<usize> {
        if !self.bb.intersects(bb) {
            return Vec::new();
        }
        let (i0, j0) = self.cell_coords(bb.min);
        let (i1, j1) = self.cell_coords(bb.max);
        let mut out = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                out.extend_from_slice(&self.cells[j * self.nx + i]);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangle_square() -> Triangulation {
        Triangulation::grid(0.0, 0.0, 1.0, 1.0, 1, 1)
    }

    #[test]
    fn adjacency_and_boundary() {
        let t = two_triangle_square();
        assert_eq!(t.num_triangles(), 2);
        assert_eq!(t.adjacency()[0].iter().flatten().count(), 1);
        assert_eq!(t.boundary().len(), 1);
        assert_eq!(t.boundary()[0].len(), 4);
        let pts = t.boundary_loop_points(0);
        assert!(loop_signed_area(&pts) > 0.0);
        t.validate(Some(&Polygon::unit_square())).unwrap();
    }

    #[test]
    fn locate_rules() {
        let t = two_triangle_square();
        assert_eq!(t.locate(t.centroid(0)), Some(0));
        assert_eq!(t.locate(t.centroid(1)), Some(1));
        assert_eq!(t.locate(Point::new(2.0, 2.0)), None);
        // midpoint of the shared diagonal belongs to both; lowest index wins
        assert_eq!(t.locate(Point::new(0.5, 0.5)), Some(0));
    }

    #[test]
    fn grid_boundary_polygon() {
        let t = Triangulation::grid(0.0, 0.0, 2.0, 1.0, 4, 3);
        let p = t.boundary_polygon().unwrap();
        assert!((p.area() - 2.0).abs() < 1e-15);
        assert_eq!(t.num_triangles(), 24);
    }

    #[test]
    fn rejects_inconsistent_orientation() {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        assert!(Triangulation::new(v, vec![[0, 1, 2], [0, 2, 1]]).is_err());
    }

    #[test]
    fn flipped_triangle_fails_validation() {
        let t = two_triangle_square();
        let mut v = t.vertices().to_vec();
        v[2] = Point::new(-1.0, -1.0);
        let bent = t.with_vertices(v).unwrap();
        assert!(bent.validate(None).is_err());
    }
}
