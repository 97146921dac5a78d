use super::polygon::min_distance_slices;
use super::{ConvexPolygon, Pose, RobotState};
use crate::geometry::{Rect, Vec2};

/// Convex obstacle translating at constant velocity inside an activity window.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicObstacle {
    pub shape: ConvexPolygon,
    pub velocity: Vec2,
    pub active_from: f64,
    /// Motion stops here; `None` keeps moving forever.
    pub active_until: Option<f64>,
}

impl DynamicObstacle {
    /// Displacement from the initial pose at time `t`.
    pub fn offset_at(&self, t: f64) -> Vec2 {
        let end = self.active_until.unwrap_or(f64::INFINITY);
        let moving = (t.min(end) - self.active_from).max(0.0);
        self.velocity * moving
    }

    pub fn shape_at(&self, t: f64) -> ConvexPolygon {
        self.shape.translated(self.offset_at(t))
    }
}

/// Immutable obstacle map: static polygons plus time-parameterised movers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct World {
    pub obstacles: Vec<ConvexPolygon>,
    pub dynamic: Vec<DynamicObstacle>,
    pub bounds: Option<Rect>,
    /// Age of the obstacle map, seconds: queries at `t` see obstacles at `t - staleness`.
    pub staleness: f64,
}

impl World {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_obstacles(obstacles: Vec<ConvexPolygon>) -> Self {
        Self { obstacles, ..Self::default() }
    }

    /// Obstacles as seen at time `t` (after staleness).
    pub fn snapshot(&self, t: f64) -> Vec<ConvexPolygon> {
        let te = t - self.staleness;
        self.obstacles.iter().cloned().chain(self.dynamic.iter().map(|d| d.shape_at(te))).collect()
    }

    fn for_each_obstacle(&self, t: f64, mut f: impl FnMut(&[Vec2], Vec2, f64, Vec2) -> bool) {
        let te = t - self.staleness;
        for o in &self.obstacles {
            if !f(o.vertices(), o.centroid(), o.bounding_radius(), Vec2::ZERO) {
                return;
            }
        }
        for d in &self.dynamic {
            let off = d.offset_at(te);
            if !f(d.shape.vertices(), d.shape.centroid() + off, d.shape.bounding_radius(), off) {
                return;
            }
        }
    }

    /// Minimum distance from a world-frame footprint to every obstacle at `t`;
    /// `+inf` in an empty world.
    pub fn clearance_of(&self, footprint: &ConvexPolygon, t: f64) -> f64 {
        let fc = footprint.centroid();
        let fr = footprint.bounding_radius();
        let mut best = f64::INFINITY;
        let mut moved = Vec::new();
        self.for_each_obstacle(t, |verts, c, r, off| {
            if c.distance(fc) - r - fr >= best {
                return true;
            }
            let d = if off == Vec2::ZERO {
                min_distance_slices(footprint.vertices(), verts)
            } else {
                moved.clear();
                moved.extend(verts.iter().map(|v| *v + off));
                min_distance_slices(footprint.vertices(), &moved)
            };
            best = best.min(d);
            true
        });
        best
    }

    /// Clearance of a body-frame footprint placed at `pose`.
    pub fn clearance_at(&self, footprint: &ConvexPolygon, pose: Pose, t: f64) -> f64 {
        self.clearance_of(&footprint.transformed(pose.heading, pose.position), t)
    }

    /// Whether the footprint at `pose` keeps at least `margin` from every obstacle.
    pub fn is_clear(&self, footprint: &ConvexPolygon, pose: Pose, t: f64, margin: f64) -> bool {
        let (sin, cos) = pose.heading.sin_cos();
        let place = |v: Vec2| Vec2::new(cos * v.x - sin * v.y, sin * v.x + cos * v.y) + pose.position;
        let fc = place(footprint.centroid());
        let fr = footprint.bounding_radius();
        // the world-frame footprint is only built once something is in range
        let mut fp: Vec<Vec2> = Vec::new();
        let mut ok = true;
        let mut moved = Vec::new();
        self.for_each_obstacle(t, |verts, c, r, off| {
            if c.distance(fc) - r - fr >= margin {
                return true;
            }
            if fp.is_empty() {
                fp.extend(footprint.vertices().iter().map(|v| place(*v)));
            }
            let d = if off == Vec2::ZERO {
                min_distance_slices(&fp, verts)
            } else {
                moved.clear();
                moved.extend(verts.iter().map(|v| *v + off));
                min_distance_slices(&fp, &moved)
            };
            ok = d >= margin;
            ok
        });
        ok
    }
}

/// Minimum distance from the robot's footprint to every obstacle at time `t`.
pub fn clearance(state: &RobotState, world: &World, t: f64) -> f64 {
    world.clearance_of(&state.world_footprint(), t)
}
