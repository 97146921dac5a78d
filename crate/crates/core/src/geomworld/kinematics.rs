use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ConvexPolygon, GeomError};
use crate::geometry::{wrap_angle, Vec2};

/// Position and heading.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub position: Vec2,
    pub heading: f64,
}

impl Pose {
    pub fn new(position: Vec2, heading: f64) -> Self {
        Self { position, heading: wrap_angle(heading) }
    }
}

/// Unicycle command: forward speed (m/s) and yaw rate (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub v: f64,
    pub omega: f64,
}

impl ControlInput {
    pub const STOP: ControlInput = ControlInput { v: 0.0, omega: 0.0 };

    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlLimits {
    pub v_max: f64,
    pub omega_max: f64,
}

impl Default for ControlLimits {
    fn default() -> Self {
        Self { v_max: 0.5, omega_max: 1.5 }
    }
}

impl ControlLimits {
    const SLACK: f64 = 1e-12;

    pub fn check(&self, u: ControlInput) -> Result<(), GeomError> {
        if !(u.v.abs() <= self.v_max + Self::SLACK && u.omega.abs() <= self.omega_max + Self::SLACK) {
            return Err(GeomError::ControlLimitViolation { v: u.v, omega: u.omega });
        }
        Ok(())
    }

    pub fn clamp(&self, u: ControlInput) -> ControlInput {
        ControlInput {
            v: u.v.clamp(-self.v_max, self.v_max),
            omega: u.omega.clamp(-self.omega_max, self.omega_max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Closed-form constant-twist integration (falls back to a line when the
    /// yaw rate is below 1e-6 rad/s).
    #[default]
    ExactArc,
    /// Explicit first-order Euler.
    Euler,
}

/// Advance a pose under a constant command for `dt` seconds.
#[inline]
pub fn integrate_pose(pose: Pose, u: ControlInput, dt: f64, integrator: Integrator) -> Pose {
    let th = pose.heading;
    let (dx, dy) = match integrator {
        Integrator::ExactArc if u.omega.abs() > 1e-6 => {
            let th1 = th + u.omega * dt;
            let r = u.v / u.omega;
            (r * (th1.sin() - th.sin()), r * (th.cos() - th1.cos()))
        }
        _ => (u.v * th.cos() * dt, u.v * th.sin() * dt),
    };
    Pose { position: pose.position + Vec2::new(dx, dy), heading: wrap_angle(th + u.omega * dt) }
}

/// Pose, velocities and body-frame footprint of a differential-drive robot.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub position: Vec2,
    pub heading: f64,
    pub linear_vel: f64,
    pub angular_vel: f64,
    pub footprint: Arc<ConvexPolygon>,
}

impl RobotState {
    pub fn new(position: Vec2, heading: f64, footprint: Arc<ConvexPolygon>) -> Result<Self, GeomError> {
        if !footprint.contains_point(Vec2::ZERO) {
            return Err(GeomError::InvalidState("footprint must contain the body origin".into()));
        }
        if !position.is_finite() || !heading.is_finite() {
            return Err(GeomError::InvalidState("pose must be finite".into()));
        }
        Ok(Self { position, heading: wrap_angle(heading), linear_vel: 0.0, angular_vel: 0.0, footprint })
    }

    pub fn pose(&self) -> Pose {
        Pose { position: self.position, heading: self.heading }
    }

    pub fn with_pose(&self, pose: Pose, u: ControlInput) -> Self {
        Self {
            position: pose.position,
            heading: pose.heading,
            linear_vel: u.v,
            angular_vel: u.omega,
            footprint: Arc::clone(&self.footprint),
        }
    }

    pub fn world_footprint(&self) -> ConvexPolygon {
        self.footprint.transformed(self.heading, self.position)
    }
}

/// Default 0.3 m x 0.3 m square footprint centered on the body origin.
pub fn default_footprint() -> ConvexPolygon {
    ConvexPolygon::rectangle(Vec2::ZERO, 0.3, 0.3).expect("static square")
}

/// One unicycle step with the exact-arc integrator.
pub fn step_dynamics(state: &RobotState, u: ControlInput, dt: f64, limits: &ControlLimits) -> Result<RobotState, GeomError> {
    step_dynamics_with(state, u, dt, limits, Integrator::ExactArc)
}

pub fn step_dynamics_with(
    state: &RobotState,
    u: ControlInput,
    dt: f64,
    limits: &ControlLimits,
    integrator: Integrator,
) -> Result<RobotState, GeomError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(GeomError::InvalidParameter("dt must be positive".into()));
    }
    limits.check(u)?;
    Ok(state.with_pose(integrate_pose(state.pose(), u, dt, integrator), u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn robot() -> RobotState {
        RobotState::new(Vec2::ZERO, 0.0, Arc::new(default_footprint())).unwrap()
    }

    fn wide() -> ControlLimits {
        ControlLimits { v_max: 2.0, omega_max: 4.0 }
    }

    #[test]
    fn straight_line() {
        let s = step_dynamics(&robot(), ControlInput::new(0.5, 0.0), 0.1, &wide()).unwrap();
        assert!((s.position - Vec2::new(0.05, 0.0)).norm() < 1e-15);
        assert_eq!(s.linear_vel, 0.5);
    }

    #[test]
    fn turn_in_place() {
        let s = step_dynamics(&robot(), ControlInput::new(0.0, PI), 1.0, &wide()).unwrap();
        assert_eq!(s.position, Vec2::ZERO);
        assert!((s.heading - PI).abs() < 1e-12);
    }

    #[test]
    fn quarter_circle() {
        let s = step_dynamics(&robot(), ControlInput::new(1.0, 1.0), FRAC_PI_2, &wide()).unwrap();
        assert!((s.position - Vec2::new(1.0, 1.0)).norm() < 1e-12);
        assert!((s.heading - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn limit_violation_and_bad_dt() {
        let lim = ControlLimits::default();
        assert!(matches!(
            step_dynamics(&robot(), ControlInput::new(0.6, 0.0), 0.1, &lim),
            Err(GeomError::ControlLimitViolation { .. })
        ));
        assert!(step_dynamics(&robot(), ControlInput::new(0.1, 0.0), 0.0, &lim).is_err());
    }

    #[test]
    fn footprint_must_contain_origin() {
        let off = ConvexPolygon::rectangle(Vec2::new(1.0, 0.0), 0.3, 0.3).unwrap();
        assert!(RobotState::new(Vec2::ZERO, 0.0, Arc::new(off)).is_err());
    }

    #[test]
    fn exact_arc_splits_exactly() {
        let u = ControlInput::new(0.8, 1.3);
        let p0 = Pose::new(Vec2::new(0.3, -0.2), 0.4);
        for dt in [0.4, 0.1, 0.02] {
            let one = integrate_pose(p0, u, dt, Integrator::ExactArc);
            let two = integrate_pose(integrate_pose(p0, u, dt / 2.0, Integrator::ExactArc), u, dt / 2.0, Integrator::ExactArc);
            assert!((one.position - two.position).norm() < 1e-12);
            assert!((one.heading - two.heading).abs() < 1e-12);
        }
    }

    #[test]
    fn euler_split_error_is_second_order() {
        let u = ControlInput::new(0.8, 1.3);
        let p0 = Pose::new(Vec2::ZERO, 0.0);
        let err = |dt: f64| {
            let one = integrate_pose(p0, u, dt, Integrator::Euler);
            let two = integrate_pose(integrate_pose(p0, u, dt / 2.0, Integrator::Euler), u, dt / 2.0, Integrator::Euler);
            (one.position - two.position).norm()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }
}
