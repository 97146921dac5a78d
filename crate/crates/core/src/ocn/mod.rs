//! Opportunistic collaborative navigation: robots follow their paths with a
//! cheap local tracker and ask the edge for a plan only when they are stuck,
//! the edge plan actually helps, and the uplink is good enough.

mod agent;
mod collab;
mod fleet;
mod route;

pub use agent::{safe_tracker_control, AgentStatus, RobotAgent};
pub use collab::{collaboration_gain, decide, uplink_sinr_db, EdgePlan, GainEstimate, UplinkView};
pub use fleet::{run_ocn, AgentSpec, EngagementEvent, FleetRow, FleetTrace, OcnSetup, OcnVariant};
pub use route::{point_along, RouteGrid};

use std::fmt;

use thiserror::Error;

use crate::geometry::Vec2;
use crate::geomworld::{GeomError, TrackerConfig};
use crate::nfchan::NfError;
use crate::rep::{RepConfig, RepError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OcnError {
    #[error("invalid collaboration setup: {0}")]
    InvalidSetup(String),
    #[error(transparent)]
    Planner(#[from] RepError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Channel(#[from] NfError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcnConfig {
    /// Uplink SINR gate (dB).
    pub sinr_gate_db: f64,
    /// Minimum predicted path-progress gain (m) worth an engagement.
    pub gain_threshold: f64,
    /// Robot transmit power during an engagement (W).
    pub uplink_power: f64,
    /// Energy of one request/plan message exchange (J).
    pub message_energy: f64,
    pub edge_center: Vec2,
    pub noise_dbm: f64,
    /// Robots the edge can plan for at once.
    pub edge_slots: usize,
    /// Seconds of path progress examined for stuck detection; also the
    /// length of one engagement.
    pub stuck_window: f64,
    pub progress_eps: f64,
    /// Clearance the local tracker's safety filter keeps (m); larger than the
    /// planner's safety distance so a stopped robot can still turn away.
    pub tracker_margin: f64,
    pub route_resolution: f64,
    /// How far along the coarse route the edge planner aims each tick (m).
    pub subgoal_distance: f64,
    /// Edge planner settings; radio weight is forced to zero and the goal is
    /// replaced by the route subgoal.
    pub planner: RepConfig,
    pub tracker: TrackerConfig,
}

impl Default for OcnConfig {
    fn default() -> Self {
        Self {
            sinr_gate_db: 20.0,
            gain_threshold: 0.1,
            uplink_power: 0.1,
            message_energy: 0.1,
            edge_center: Vec2::ZERO,
            noise_dbm: -100.0,
            edge_slots: 2,
            stuck_window: 1.0,
            progress_eps: 0.05,
            tracker_margin: 0.3,
            route_resolution: 0.1,
            subgoal_distance: 1.5,
            planner: RepConfig::default(),
            tracker: TrackerConfig::default(),
        }
    }
}

impl OcnConfig {
    pub fn validate(&self) -> Result<(), OcnError> {
        let bad = |m: &str| Err(OcnError::InvalidSetup(m.into()));
        if !self.sinr_gate_db.is_finite() {
            return bad("sinr gate must be finite");
        }
        if !(self.gain_threshold >= 0.0 && self.uplink_power > 0.0 && self.message_energy >= 0.0) {
            return bad("gain threshold, uplink power and message energy must be non-negative (power > 0)");
        }
        if !(self.stuck_window > 0.0 && self.progress_eps > 0.0 && self.route_resolution > 0.0 && self.subgoal_distance > 0.0) {
            return bad("stuck window, progress eps, route resolution and subgoal distance must be > 0");
        }
        if !(self.tracker_margin >= self.planner.safety_distance) {
            return bad("tracker margin must be at least the safety distance");
        }
        if self.edge_slots == 0 {
            return bad("edge needs at least one planning slot");
        }
        if !self.noise_dbm.is_finite() || !self.edge_center.is_finite() {
            return bad("noise and edge position must be finite");
        }
        self.planner.validate()?;
        Ok(())
    }

    /// Ticks in one stuck window.
    pub fn window_ticks(&self) -> usize {
        ((self.stuck_window / self.planner.dt).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecisionReason {
    NoGain,
    SinrBlocked,
    Engaged,
    BlockedEnvironment,
    /// Both gates passed but the edge had no free planning slot this tick.
    SlotLimited,
}

impl DecisionReason {
    pub fn name(self) -> &'static str {
        match self {
            Self::NoGain => "no-gain",
            Self::SinrBlocked => "sinr-blocked",
            Self::Engaged => "engaged",
            Self::BlockedEnvironment => "blocked-environment",
            Self::SlotLimited => "slot-limited",
        }
    }
}

impl fmt::Display for DecisionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollaborationDecision {
    pub engage: bool,
    pub predicted_gain: f64,
    pub sinr_db: f64,
    pub reason: DecisionReason,
}
