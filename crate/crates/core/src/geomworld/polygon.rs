use crate::geometry::{point_segment_distance, Vec2};

use super::GeomError;

/// Strictly convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
    centroid: Vec2,
    radius: f64,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self, GeomError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeomError::InvalidPolygon(format!("needs at least 3 vertices, got {n}")));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::InvalidPolygon("non-finite vertex".into()));
        }
        for i in 0..n {
            for j in i + 1..n {
                if vertices[i].distance(vertices[j]) < 1e-9 {
                    return Err(GeomError::InvalidPolygon(format!("duplicate vertices {i} and {j}")));
                }
            }
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if (b - a).cross(c - b) <= 0.0 {
                return Err(GeomError::InvalidPolygon(format!(
                    "not strictly convex counter-clockwise at vertex {}",
                    (i + 1) % n
                )));
            }
        }
        // a CCW star polygon (e.g. a pentagram) passes the local test; total turning must be 2 pi
        let turning: f64 = (0..n)
            .map(|i| {
                let e0 = vertices[(i + 1) % n] - vertices[i];
                let e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
                e0.cross(e1).atan2(e0.dot(e1))
            })
            .sum();
        if (turning - std::f64::consts::TAU).abs() > 1e-6 {
            return Err(GeomError::InvalidPolygon("polygon winds more than once".into()));
        }
        Ok(Self::from_valid(vertices))
    }

    fn from_valid(vertices: Vec<Vec2>) -> Self {
        let n = vertices.len() as f64;
        let centroid = vertices.iter().fold(Vec2::ZERO, |acc, v| acc + *v) * (1.0 / n);
        let radius = vertices.iter().map(|v| v.distance(centroid)).fold(0.0, f64::max);
        Self { vertices, centroid, radius }
    }

    /// Axis-aligned rectangle from its center and full extents.
    pub fn rectangle(center: Vec2, width: f64, height: f64) -> Result<Self, GeomError> {
        let (hw, hh) = (width / 2.0, height / 2.0);
        Self::new(vec![
            center + Vec2::new(-hw, -hh),
            center + Vec2::new(hw, -hh),
            center + Vec2::new(hw, hh),
            center + Vec2::new(-hw, hh),
        ])
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    /// Vertex mean; lies strictly inside.
    pub fn centroid(&self) -> Vec2 {
        self.centroid
    }

    /// Radius of the centroid-centered circle enclosing all vertices.
    pub fn bounding_radius(&self) -> f64 {
        self.radius
    }

    pub fn translated(&self, by: Vec2) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| *v + by).collect(),
            centroid: self.centroid + by,
            radius: self.radius,
        }
    }

    /// Rigid transform: rotate by `theta` about the origin, then translate.
    pub fn transformed(&self, theta: f64, by: Vec2) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v.rotate(theta) + by).collect(),
            centroid: self.centroid.rotate(theta) + by,
            radius: self.radius,
        }
    }

    pub fn contains_point(&self, p: Vec2) -> bool {
        contains(&self.vertices, p)
    }

    /// Distance from `p` to the polygon (0 inside).
    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        if self.contains_point(p) {
            return 0.0;
        }
        boundary_distance(&self.vertices, p)
    }
}

fn contains(poly: &[Vec2], p: Vec2) -> bool {
    let n = poly.len();
    (0..n).all(|i| (poly[(i + 1) % n] - poly[i]).cross(p - poly[i]) >= 0.0)
}

fn boundary_distance(poly: &[Vec2], p: Vec2) -> f64 {
    let n = poly.len();
    (0..n).map(|i| point_segment_distance(p, poly[i], poly[(i + 1) % n])).fold(f64::INFINITY, f64::min)
}

/// Separating-axis test over both polygons' edge normals; touching counts as
/// overlapping.
fn overlaps(a: &[Vec2], b: &[Vec2]) -> bool {
    !(has_separating_edge(a, b) || has_separating_edge(b, a))
}

fn has_separating_edge(a: &[Vec2], b: &[Vec2]) -> bool {
    let n = a.len();
    (0..n).any(|i| {
        let p = a[i];
        let e = a[(i + 1) % n] - p;
        // b entirely on the outer (right) side of edge i
        b.iter().all(|q| e.cross(*q - p) < 0.0)
    })
}

/// Exact minimum Euclidean distance between two convex polygons given as
/// counter-clockwise vertex slices; 0 when they intersect or touch.
pub fn min_distance_slices(a: &[Vec2], b: &[Vec2]) -> f64 {
    if overlaps(a, b) {
        return 0.0;
    }
    // disjoint convex sets: the closest pair always involves a vertex of one
    let mut best = f64::INFINITY;
    for p in a {
        best = best.min(boundary_distance(b, *p));
    }
    for q in b {
        best = best.min(boundary_distance(a, *q));
    }
    best
}

pub fn min_distance(a: &ConvexPolygon, b: &ConvexPolygon) -> f64 {
    min_distance_slices(&a.vertices, &b.vertices)
}
