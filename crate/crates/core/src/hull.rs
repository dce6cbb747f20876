//! Convex bodies mapped into themselves by every map of a system.
//!
//! The enclosing disk is always available. A tighter polygon can be built
//! from the convex hull of a deep sample of attractor points; it is only
//! accepted after checking `F_i(P) ⊆ P` vertex by vertex.

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Point};
use crate::ifs::{CylinderGeometry, Disk, Ifs};

const CONTAINMENT_TOL: f64 = 1e-12;

/// Scale factors tried, in order, when the raw sample hull is not yet
/// invariant.
const INFLATIONS: [f64; 8] = [1.0, 1.0 + 1e-9, 1.0 + 1e-6, 1.0 + 1e-3, 1.01, 1.1, 1.5, 2.0];

/// Convex polygon with vertices in counterclockwise order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
    /// Outward normal angle of edge `i` (from vertex `i` to `i+1`), unwrapped
    /// to increase from `normals[0]`.
    normals: Vec<f64>,
}

impl ConvexPolygon {
    /// Convex hull of a point set (collinear points dropped).
    pub fn hull(points: &[Point]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("hull sample"));
        }
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup();
        if pts.len() < 3 {
            return Ok(Self::from_ccw(pts));
        }
        let mut lower: Vec<Point> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && (lower[lower.len() - 1] - lower[lower.len() - 2]).cross(p - lower[lower.len() - 2]) <= 0.0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<Point> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && (upper[upper.len() - 1] - upper[upper.len() - 2]).cross(p - upper[upper.len() - 2]) <= 0.0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Ok(Self::from_ccw(lower))
    }

    fn from_ccw(vertices: Vec<Point>) -> Self {
        let n = vertices.len();
        let mut normals = Vec::with_capacity(n);
        if n >= 3 {
            let mut prev = f64::NEG_INFINITY;
            for i in 0..n {
                let edge = vertices[(i + 1) % n] - vertices[i];
                let mut a = normalize_angle(edge.y.atan2(edge.x) - std::f64::consts::FRAC_PI_2);
                if i == 0 {
                    prev = a;
                } else {
                    while a < prev {
                        a += std::f64::consts::TAU;
                    }
                    prev = a;
                }
                normals.push(a);
            }
        }
        ConvexPolygon { vertices, normals }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// `max_p p·e_psi`.
    pub fn support(&self, psi: f64) -> f64 {
        let e = Point::unit(psi);
        if self.normals.is_empty() {
            return self.vertices.iter().map(|p| p.dot(e)).fold(f64::NEG_INFINITY, f64::max);
        }
        let base = self.normals[0];
        let q = base + normalize_angle(psi - base);
        let i = self.normals.partition_point(|&a| a < q);
        let v = self.vertices[i % self.vertices.len()];
        v.dot(e)
    }

    /// `[min, max]` of `p·e_psi` over the polygon.
    pub fn extent(&self, psi: f64) -> (f64, f64) {
        (-self.support(psi + std::f64::consts::PI), self.support(psi))
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        let n = self.vertices.len();
        let (lo, hi) = self.bbox();
        if p.x < lo.x - tol || p.x > hi.x + tol || p.y < lo.y - tol || p.y > hi.y + tol {
            return false;
        }
        if n <= 1 {
            return true;
        }
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let len = a.dist(b).max(f64::MIN_POSITIVE);
            (b - a).cross(p - a) / len >= -tol
        })
    }

    fn bbox(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = Point::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Point::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        (lo, hi)
    }

    fn centroid(&self) -> Point {
        let n = self.vertices.len() as f64;
        let s = self.vertices.iter().fold(Point::ORIGIN, |acc, &v| acc + v);
        (1.0 / n) * s
    }

    fn scaled(&self, factor: f64) -> Self {
        let c = self.centroid();
        Self::from_ccw(self.vertices.iter().map(|&v| c + factor * (v - c)).collect())
    }

    fn scale(&self) -> f64 {
        let (lo, hi) = self.bbox();
        1.0 + lo.norm().max(hi.norm())
    }

    /// Whether every map of the system sends the polygon into itself.
    pub fn is_invariant(&self, ifs: &Ifs) -> bool {
        let tol = CONTAINMENT_TOL * self.scale();
        ifs.maps()
            .iter()
            .all(|m| self.vertices.iter().all(|&v| self.contains(m.apply(v), tol)))
    }
}

/// The convex body `C` whose images `F_u(C)` cover the attractor.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexBody {
    Disk(Disk),
    Polygon(ConvexPolygon),
}

impl ConvexBody {
    /// Projection of `F_u(C)` onto `l_theta` as `[lo, hi]`.
    pub fn cylinder_interval(&self, geom: &CylinderGeometry, theta: f64) -> (f64, f64) {
        match self {
            ConvexBody::Disk(d) => {
                let c = geom.apply(d.center).dot(Point::unit(theta));
                let h = geom.ratio * d.radius;
                (c - h, c + h)
            }
            ConvexBody::Polygon(p) => {
                let t = geom.translation.dot(Point::unit(theta));
                let psi = geom.orientation.sign() * (theta - geom.angle);
                let (lo, hi) = p.extent(psi);
                (t + geom.ratio * lo, t + geom.ratio * hi)
            }
        }
    }

    /// Half-width bound: every point of the body lies within this distance
    /// of [`ConvexBody::anchor`].
    pub fn radius(&self) -> f64 {
        match self {
            ConvexBody::Disk(d) => d.radius,
            ConvexBody::Polygon(p) => {
                let c = p.centroid();
                p.vertices().iter().map(|v| v.dist(c)).fold(0.0, f64::max)
            }
        }
    }

    pub fn anchor(&self) -> Point {
        match self {
            ConvexBody::Disk(d) => d.center,
            ConvexBody::Polygon(p) => p.centroid(),
        }
    }
}

/// Hull of the fixed points of all `F_u` with `|u| ≤ depth`, inflated about
/// its centroid by the first factor that makes it invariant.
pub fn certified_hull(ifs: &Ifs, depth: usize) -> Result<ConvexPolygon> {
    let mut sample = Vec::new();
    for n in 1..=depth {
        for g in ifs.level_geometries(n, crate::ifs::DEFAULT_LEVEL_CAP)? {
            sample.push(g.fixed_point());
        }
    }
    let raw = ConvexPolygon::hull(&sample)?;
    INFLATIONS
        .iter()
        .map(|&f| raw.scaled(f))
        .find(|p| p.is_invariant(ifs))
        .ok_or(Error::HullNotCertified)
}
