use std::collections::VecDeque;

use crate::geomworld::{
    integrate_pose, path_waypoint_tracker, ControlInput, Integrator, Polyline, RobotState, TrackerConfig, World,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentStatus {
    Local,
    Collaborating,
    Done,
}

impl AgentStatus {
    pub fn name(self) -> &'static str {
        match self {
            Self::Local => "local",
            Self::Collaborating => "collaborating",
            Self::Done => "done",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RobotAgent {
    pub id: u32,
    pub state: RobotState,
    pub path: Polyline,
    pub stuck_window: f64,
    pub progress_eps: f64,
    pub comm_energy: f64,
    pub status: AgentStatus,
    /// Arc-length positions over the last window, newest last.
    history: VecDeque<f64>,
    window_ticks: usize,
}

impl RobotAgent {
    pub fn new(id: u32, state: RobotState, path: Polyline, stuck_window: f64, progress_eps: f64, dt: f64) -> Self {
        let window_ticks = ((stuck_window / dt).round() as usize).max(1);
        let mut a = Self {
            id,
            state,
            path,
            stuck_window,
            progress_eps,
            comm_energy: 0.0,
            status: AgentStatus::Local,
            history: VecDeque::with_capacity(window_ticks + 1),
            window_ticks,
        };
        a.reset_history();
        a
    }

    pub fn progress(&self) -> f64 {
        self.path.project(self.state.position)
    }

    /// Records the current arc-length position; call once per tick.
    pub fn observe(&mut self) {
        if self.history.len() == self.window_ticks + 1 {
            self.history.pop_front();
        }
        self.history.push_back(self.progress());
    }

    pub fn reset_history(&mut self) {
        self.history.clear();
        self.history.push_back(self.progress());
    }

    /// Less than `progress_eps` of path progress over a full window.
    pub fn is_stuck(&self) -> bool {
        self.history.len() == self.window_ticks + 1
            && self.history.back().unwrap() - self.history.front().unwrap() < self.progress_eps
    }

    pub fn at_goal(&self, tolerance: f64) -> bool {
        self.state.position.distance(self.path.end()) <= tolerance
    }
}

/// Tracker command filtered for safety: if the next pose would come closer
/// than `d_safe` to an obstacle, try turning in place, else stop.
pub fn safe_tracker_control(
    path: &Polyline,
    state: &RobotState,
    world: &World,
    t: f64,
    tracker: &TrackerConfig,
    dt: f64,
    d_safe: f64,
) -> ControlInput {
    let u = path_waypoint_tracker(path, state.pose(), tracker);
    let clear = |u: ControlInput| {
        world.is_clear(&state.footprint, integrate_pose(state.pose(), u, dt, Integrator::ExactArc), t + dt, d_safe)
    };
    if clear(u) {
        return u;
    }
    let turn = ControlInput::new(0.0, u.omega);
    if u.omega != 0.0 && clear(turn) {
        return turn;
    }
    ControlInput::STOP
}
