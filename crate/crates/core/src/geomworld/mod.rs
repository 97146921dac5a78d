//! Planar world model: convex obstacles (static and moving), unicycle
//! kinematics, footprint clearance and a pure-pursuit path follower.

mod kinematics;
mod polygon;
mod tracker;
mod world;

pub use kinematics::{
    default_footprint, integrate_pose, step_dynamics, step_dynamics_with, ControlInput, ControlLimits, Integrator,
    Pose, RobotState,
};
pub use polygon::{min_distance, min_distance_slices, ConvexPolygon};
pub use tracker::{path_waypoint_tracker, Polyline, TrackerConfig};
pub use world::{clearance, DynamicObstacle, World};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("control (v={v}, omega={omega}) exceeds limits")]
    ControlLimitViolation { v: f64, omega: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid robot state: {0}")]
    InvalidState(String),
}
