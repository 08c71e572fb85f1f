use super::{MapError, MapOracle, MapProperties};
use crate::geom::Point;
use crate::linalg2::Mat2;
use crate::mesh::{Polygon, Triangulation};
use crate::pamap::{PAMap, PaMapError};

/// A piecewise affine homeomorphism seen through the oracle interface.
#[derive(Clone, Debug)]
pub struct PaOracle {
    map: PAMap,
    inverse: PAMap,
    domain: Polygon,
    image: Polygon,
    name: String,
}

impl PaOracle {
    pub fn new(map: PAMap, name: impl Into<String>) -> Result<Self, PaMapError> {
        let inverse = map.invert()?;
        let domain = map.source().boundary_polygon()?;
        let image = inverse.source().boundary_polygon()?;
        Ok(Self { map, inverse, domain, image, name: name.into() })
    }

    pub fn map(&self) -> &PAMap {
        &self.map
    }
}

impl MapOracle for PaOracle {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn domain(&self) -> &Polygon {
        &self.domain
    }
    fn eval(&self, p: Point) -> Result<Point, MapError> {
        self.map.eval(p).map_err(|_| MapError::OutsideDomain { x: p.x, y: p.y })
    }
    fn grad(&self, p: Point) -> Option<Mat2> {
        self.map.source().locate(p).map(|t| self.map.gradient(t))
    }
    fn inverse_eval(&self, y: Point) -> Option<Point> {
        self.inverse.eval(y).ok()
    }
    fn inverse_grad(&self, y: Point) -> Option<Mat2> {
        self.inverse.source().locate(y).map(|t| self.inverse.gradient(t))
    }
    fn image_domain(&self) -> Option<Polygon> {
        Some(self.image.clone())
    }
    fn pieces(&self) -> Option<Triangulation> {
        Some(self.map.source().clone())
    }
    fn image_pieces(&self) -> Option<Triangulation> {
        Some(self.inverse.source().clone())
    }
    fn properties(&self) -> MapProperties {
        let mut l: f64 = 1.0;
        for t in 0..self.map.num_triangles() {
            let (s1, s2) = self.map.gradient(t).singular_values();
            l = l.max(s1).max(1.0 / s2);
        }
        MapProperties { injective: true, bi_lipschitz: Some(l), piecewise_affine: true, lusin_n: true, degenerate_set: None }
    }
}
