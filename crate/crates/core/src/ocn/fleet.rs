use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use super::agent::{safe_tracker_control, AgentStatus, RobotAgent};
use super::collab::{collaboration_gain, decide, edge_plan, uplink_sinr_db, UplinkView};
use super::route::RouteGrid;
use super::{CollaborationDecision, DecisionReason, OcnConfig, OcnError};
use crate::geometry::{Rect, Vec2};
use crate::geomworld::{clearance, step_dynamics, ControlInput, ConvexPolygon, Polyline, RobotState, World};
use crate::nfchan::{db_to_linear, dbm_to_watts, ArrayGeometry, PathlossModel};
use crate::output::fmt_f64;
use crate::rep::BeamModel;
use crate::seed::mix_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OcnVariant {
    /// Gated, on-demand collaboration over the large near-field array.
    Ocn,
    /// Messages every tick over the large near-field array.
    NfcAlways,
    /// Messages every tick over the small far-field array.
    FfcAlways,
}

impl OcnVariant {
    pub const ALL: [OcnVariant; 3] = [Self::Ocn, Self::NfcAlways, Self::FfcAlways];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ocn => "OCN",
            Self::NfcAlways => "NFC-always",
            Self::FfcAlways => "FFC-always",
        }
    }

    fn gated(self) -> bool {
        self == Self::Ocn
    }
}

impl fmt::Display for OcnVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OcnVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ocn" => Ok(Self::Ocn),
            "nfc-always" => Ok(Self::NfcAlways),
            "ffc-always" => Ok(Self::FfcAlways),
            other => Err(format!("unknown OCN variant '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub id: u32,
    /// Target path; the robot starts on its first point facing the second.
    pub path: Vec<Vec2>,
}

pub struct OcnSetup {
    pub world: World,
    pub agents: Vec<AgentSpec>,
    pub cfg: OcnConfig,
    pub nfc: ArrayGeometry,
    pub ffc: ArrayGeometry,
    pub pl: PathlossModel,
    pub footprint: Arc<ConvexPolygon>,
    pub time_limit: f64,
    grid: OnceLock<RouteGrid>,
}

impl OcnSetup {
    pub fn new(
        world: World,
        agents: Vec<AgentSpec>,
        cfg: OcnConfig,
        nfc: ArrayGeometry,
        ffc: ArrayGeometry,
        pl: PathlossModel,
        footprint: Arc<ConvexPolygon>,
        time_limit: f64,
    ) -> Result<Self, OcnError> {
        cfg.validate()?;
        if agents.is_empty() {
            return Err(OcnError::InvalidSetup("no robots".into()));
        }
        for a in &agents {
            if a.path.len() < 2 || a.path.windows(2).any(|w| w[0].distance(w[1]) == 0.0) {
                return Err(OcnError::InvalidSetup(format!("robot {} needs a path of distinct points", a.id)));
            }
        }
        let mut ids: Vec<u32> = agents.iter().map(|a| a.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(OcnError::InvalidSetup("duplicate robot ids".into()));
        }
        if !(time_limit > 0.0) {
            return Err(OcnError::InvalidSetup("time limit must be > 0".into()));
        }
        Ok(Self { world, agents, cfg, nfc, ffc, pl, footprint, time_limit, grid: OnceLock::new() })
    }

    fn route_area(&self) -> Rect {
        if let Some(b) = self.world.bounds {
            return b;
        }
        let pts = self
            .agents
            .iter()
            .flat_map(|a| a.path.iter().copied())
            .chain(self.world.obstacles.iter().flat_map(|o| o.vertices().iter().copied()));
        let (mut lo, mut hi) = (Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in pts {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        Rect::new(lo - Vec2::new(2.0, 2.0), hi + Vec2::new(2.0, 2.0))
    }

    pub fn grid(&self) -> &RouteGrid {
        self.grid.get_or_init(|| RouteGrid::new(&self.world, self.route_area(), self.cfg.route_resolution))
    }

    fn view(&self, variant: OcnVariant) -> UplinkView<'_> {
        let noise_power = dbm_to_watts(self.cfg.noise_dbm);
        match variant {
            OcnVariant::Ocn | OcnVariant::NfcAlways => {
                UplinkView { geom: &self.nfc, pl: &self.pl, beam: BeamModel::NearField, noise_power }
            }
            OcnVariant::FfcAlways => UplinkView { geom: &self.ffc, pl: &self.pl, beam: BeamModel::Planar, noise_power },
        }
    }

    fn spawn(&self) -> Result<Vec<RobotAgent>, OcnError> {
        self.agents
            .iter()
            .map(|s| {
                let dir = s.path[1] - s.path[0];
                let state = RobotState::new(s.path[0], dir.y.atan2(dir.x), self.footprint.clone())?;
                Ok(RobotAgent::new(
                    s.id,
                    state,
                    Polyline::new(s.path.clone()),
                    self.cfg.stuck_window,
                    self.cfg.progress_eps,
                    self.cfg.planner.dt,
                ))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetRow {
    pub t: f64,
    pub robot: u32,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
    pub status: AgentStatus,
    pub engaged: bool,
    /// Uplink SINR the robot would see at this tick (dB).
    pub sinr_db: f64,
    /// Most recent predicted collaboration gain for this robot (m).
    pub gain_m: f64,
    pub comm_energy: f64,
    pub clearance_m: f64,
}

/// One contiguous period of edge planning for a robot.
#[derive(Debug, Clone, PartialEq)]
pub struct EngagementEvent {
    pub robot: u32,
    pub t_start: f64,
    pub t_end: Option<f64>,
    /// Stuck windows granted (1 + renewals).
    pub windows: usize,
    pub predicted_gain: f64,
    pub sinr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRecord {
    pub t: f64,
    pub robot: u32,
    pub decision: CollaborationDecision,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetTrace {
    pub variant: OcnVariant,
    pub seed: u64,
    pub robot_ids: Vec<u32>,
    pub rows: Vec<FleetRow>,
    pub events: Vec<EngagementEvent>,
    pub decisions: Vec<DecisionRecord>,
    /// Final communication energy per robot (J), in `robot_ids` order.
    pub energy: Vec<f64>,
    pub done: Vec<bool>,
}

impl FleetTrace {
    pub fn engagement_counts(&self) -> Vec<usize> {
        self.robot_ids.iter().map(|id| self.events.iter().filter(|e| e.robot == *id).count()).collect()
    }

    pub fn total_energy(&self) -> f64 {
        self.energy.iter().sum()
    }

    pub fn min_clearance(&self) -> f64 {
        self.rows.iter().map(|r| r.clearance_m).fold(f64::INFINITY, f64::min)
    }

    pub const CSV_HEADER: &'static str =
        "t,robot_id,x,y,status,engaged,sinr_db,gain_m,energy_j,theta,v,omega,clearance_m,variant,seed";
    pub const EVENTS_HEADER: &'static str = "robot_id,t_start,t_end,windows,predicted_gain_m,sinr_db,variant,seed";
    pub const DECISIONS_HEADER: &'static str = "t,robot_id,reason,engage,predicted_gain_m,sinr_db,variant,seed";

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                fmt_f64(r.t),
                r.robot,
                fmt_f64(r.x),
                fmt_f64(r.y),
                r.status.name(),
                r.engaged as u8,
                fmt_f64(r.sinr_db),
                fmt_f64(r.gain_m),
                fmt_f64(r.comm_energy),
                fmt_f64(r.theta),
                fmt_f64(r.v),
                fmt_f64(r.omega),
                fmt_f64(r.clearance_m),
                self.variant.name(),
                self.seed
            )?;
        }
        Ok(())
    }

    pub fn write_events<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::EVENTS_HEADER)?;
        for e in &self.events {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                e.robot,
                fmt_f64(e.t_start),
                e.t_end.map(fmt_f64).unwrap_or_default(),
                e.windows,
                fmt_f64(e.predicted_gain),
                fmt_f64(e.sinr_db),
                self.variant.name(),
                self.seed
            )?;
        }
        Ok(())
    }

    pub fn write_decisions<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::DECISIONS_HEADER)?;
        for d in &self.decisions {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                fmt_f64(d.t),
                d.robot,
                d.decision.reason.name(),
                d.decision.engage as u8,
                fmt_f64(d.decision.predicted_gain),
                fmt_f64(d.decision.sinr_db),
                self.variant.name(),
                self.seed
            )?;
        }
        Ok(())
    }
}

fn collaborators(agents: &[RobotAgent], engaged: &[Option<Engagement>], except: usize, power: f64) -> Vec<(Vec2, f64)> {
    (0..agents.len())
        .filter(|&j| j != except && engaged[j].is_some())
        .map(|j| (agents[j].state.position, power))
        .collect()
}

struct Engagement {
    event: usize,
    ticks_left: usize,
    warm: Option<Vec<ControlInput>>,
}

fn shifted(controls: &[ControlInput]) -> Vec<ControlInput> {
    let mut s = controls[1..].to_vec();
    s.push(*controls.last().unwrap());
    s
}

/// Synchronous multi-robot simulation. Every tick each robot either follows
/// its path locally or, while engaged, the edge plan's first control.
pub fn run_ocn(setup: &OcnSetup, variant: OcnVariant, seed: u64) -> Result<FleetTrace, OcnError> {
    let cfg = &setup.cfg;
    let dt = cfg.planner.dt;
    let window = cfg.window_ticks();
    let view = setup.view(variant);
    let grid = setup.grid();
    let world = &setup.world;
    let gamma = db_to_linear(cfg.sinr_gate_db);

    let mut agents = setup.spawn()?;
    let n = agents.len();
    let ids: Vec<u32> = agents.iter().map(|a| a.id).collect();
    let mut engaged: Vec<Option<Engagement>> = (0..n).map(|_| None).collect();
    let mut events: Vec<EngagementEvent> = Vec::new();
    let mut decisions = Vec::new();
    let mut rows = Vec::new();
    // transmit power of every robot last tick, for always-on interference
    let mut last_power = vec![0.0; n];
    let mut last_gain = vec![0.0; n];
    let max_ticks = (setup.time_limit / dt).round() as u64;
    let engagement_energy = cfg.message_energy + cfg.uplink_power * cfg.stuck_window;

    for tick in 0..max_ticks {
        let t = tick as f64 * dt;
        for (i, a) in agents.iter_mut().enumerate() {
            if a.status != AgentStatus::Done && a.at_goal(cfg.tracker.goal_tolerance) {
                a.status = AgentStatus::Done;
                if let Some(e) = engaged[i].take() {
                    events[e.event].t_end = Some(t);
                }
            }
        }
        if agents.iter().all(|a| a.status == AgentStatus::Done) {
            break;
        }
        let plan_seed = |i: usize| mix_seed(mix_seed(seed, ids[i] as u64), tick);

        // renew or release engagements whose window has run out
        let mut fresh_plans: Vec<Option<Vec<ControlInput>>> = vec![None; n];
        for i in 0..n {
            let Some(e) = &engaged[i] else { continue };
            if e.ticks_left > 0 {
                continue;
            }
            let est = collaboration_gain(&agents[i], world, t, cfg, grid, plan_seed(i), e.warm.as_deref())?;
            let sinr_db = uplink_sinr_db(&view, agents[i].state.position, cfg.uplink_power, &collaborators(&agents, &engaged, i, cfg.uplink_power))?;
            let reason = if est.blocked {
                DecisionReason::BlockedEnvironment
            } else if est.gain < cfg.gain_threshold || est.local_clear {
                DecisionReason::NoGain
            } else if variant.gated() && sinr_db < cfg.sinr_gate_db {
                DecisionReason::SinrBlocked
            } else {
                DecisionReason::Engaged
            };
            let engage = reason == DecisionReason::Engaged;
            decisions.push(DecisionRecord {
                t,
                robot: agents[i].id,
                decision: CollaborationDecision { engage, predicted_gain: est.gain, sinr_db, reason },
            });
            let ev = e.event;
            if engage {
                events[ev].windows += 1;
                if variant.gated() {
                    agents[i].comm_energy += engagement_energy;
                }
                fresh_plans[i] = est.plan.map(|p| p.controls);
                engaged[i].as_mut().unwrap().ticks_left = window;
            } else {
                events[ev].t_end = Some(t);
                engaged[i] = None;
                agents[i].status = AgentStatus::Local;
                agents[i].reset_history();
            }
        }

        // new engagements among stuck local robots, best predicted gain first
        let mut eligible: Vec<(usize, CollaborationDecision, Vec<ControlInput>)> = Vec::new();
        for i in 0..n {
            if agents[i].status != AgentStatus::Local || !agents[i].is_stuck() {
                continue;
            }
            let mut gate_cfg;
            let dcfg = if variant.gated() {
                cfg
            } else {
                gate_cfg = cfg.clone();
                gate_cfg.sinr_gate_db = f64::NEG_INFINITY;
                &gate_cfg
            };
            let (d, est) = decide(&agents[i], world, t, dcfg, grid, &view, &collaborators(&agents, &engaged, i, cfg.uplink_power), plan_seed(i))?;
            if d.engage {
                let plan = est.and_then(|e| e.plan).map(|p| p.controls).unwrap_or_default();
                eligible.push((i, d, plan));
            } else {
                decisions.push(DecisionRecord { t, robot: agents[i].id, decision: d });
            }
        }
        eligible.sort_by(|a, b| b.1.predicted_gain.total_cmp(&a.1.predicted_gain).then(agents[a.0].id.cmp(&agents[b.0].id)));
        let mut newly = 0;
        for (i, d, plan) in eligible {
            let busy = engaged.iter().filter(|e| e.is_some()).count();
            let admit = !variant.gated() || (newly == 0 && busy < cfg.edge_slots);
            if admit {
                newly += 1;
                events.push(EngagementEvent {
                    robot: agents[i].id,
                    t_start: t,
                    t_end: None,
                    windows: 1,
                    predicted_gain: d.predicted_gain,
                    sinr_db: d.sinr_db,
                });
                engaged[i] = Some(Engagement { event: events.len() - 1, ticks_left: window, warm: None });
                agents[i].status = AgentStatus::Collaborating;
                if variant.gated() {
                    agents[i].comm_energy += engagement_energy;
                }
                fresh_plans[i] = Some(plan);
                decisions.push(DecisionRecord { t, robot: agents[i].id, decision: d });
            } else {
                let decision = CollaborationDecision { engage: false, reason: DecisionReason::SlotLimited, ..d };
                decisions.push(DecisionRecord { t, robot: agents[i].id, decision });
            }
        }

        for d in decisions.iter().rev().take_while(|d| d.t == t) {
            if let Some(i) = ids.iter().position(|id| *id == d.robot) {
                last_gain[i] = d.decision.predicted_gain;
            }
        }

        // always-on variants pay for a message and the power that meets the
        // SINR target every tick
        if !variant.gated() {
            let active: Vec<usize> = (0..n).filter(|&i| agents[i].status != AgentStatus::Done).collect();
            let mut power = vec![0.0; n];
            for &i in &active {
                let others: Vec<usize> = active.iter().copied().filter(|&j| j != i).collect();
                let pos: Vec<Vec2> = others.iter().map(|&j| agents[j].state.position).collect();
                let (g, leak) = view.gains(agents[i].state.position, &pos)?;
                let interference: f64 = leak.iter().zip(&others).map(|(l, &j)| l * last_power[j]).sum();
                // capped at the robot's transmit limit when the target is unreachable
                power[i] = (gamma * (view.noise_power + interference) / g).min(cfg.uplink_power);
                agents[i].comm_energy += cfg.message_energy + power[i] * dt;
            }
            last_power = power;
        }

        // SINR each robot would see right now, against whoever is transmitting
        let mut sinr = vec![0.0; n];
        for i in 0..n {
            let (own, others): (f64, Vec<(Vec2, f64)>) = if variant.gated() {
                (cfg.uplink_power, collaborators(&agents, &engaged, i, cfg.uplink_power))
            } else {
                let others = (0..n).filter(|&j| j != i && last_power[j] > 0.0).map(|j| (agents[j].state.position, last_power[j]));
                (if last_power[i] > 0.0 { last_power[i] } else { cfg.uplink_power }, others.collect())
            };
            sinr[i] = uplink_sinr_db(&view, agents[i].state.position, own, &others)?;
        }

        // controls from the tick-start snapshot, then advance
        for i in 0..n {
            let a = &agents[i];
            let u = match a.status {
                AgentStatus::Done => ControlInput::STOP,
                AgentStatus::Local => {
                    safe_tracker_control(&a.path, &a.state, world, t, &cfg.tracker, dt, cfg.tracker_margin)
                }
                AgentStatus::Collaborating => {
                    let e = engaged[i].as_mut().unwrap();
                    let controls = match fresh_plans[i].take().filter(|c| !c.is_empty()) {
                        Some(c) => Some(c),
                        None => edge_plan(a, world, t, cfg, grid, plan_seed(i), e.warm.as_deref())?.map(|p| p.controls),
                    };
                    e.ticks_left = e.ticks_left.saturating_sub(1);
                    match controls {
                        Some(c) => {
                            e.warm = Some(shifted(&c));
                            c[0]
                        }
                        None => {
                            e.warm = None;
                            ControlInput::STOP
                        }
                    }
                }
            };
            rows.push(FleetRow {
                t,
                robot: a.id,
                x: a.state.position.x,
                y: a.state.position.y,
                theta: a.state.heading,
                v: u.v,
                omega: u.omega,
                status: a.status,
                engaged: engaged[i].is_some(),
                sinr_db: sinr[i],
                gain_m: last_gain[i],
                comm_energy: a.comm_energy,
                clearance_m: clearance(&a.state, world, t),
            });
            let next = step_dynamics(&a.state, u, dt, &cfg.planner.limits)?;
            let a = &mut agents[i];
            a.state = next;
            if a.status != AgentStatus::Done {
                a.observe();
            }
        }
    }

    let end_t = max_ticks as f64 * dt;
    for (i, a) in agents.iter_mut().enumerate() {
        if a.status != AgentStatus::Done && a.at_goal(cfg.tracker.goal_tolerance) {
            a.status = AgentStatus::Done;
        }
        if let Some(e) = engaged[i].take() {
            events[e.event].t_end.get_or_insert(end_t);
        }
    }
    Ok(FleetTrace {
        variant,
        seed,
        robot_ids: agents.iter().map(|a| a.id).collect(),
        rows,
        events,
        decisions,
        energy: agents.iter().map(|a| a.comm_energy).collect(),
        done: agents.iter().map(|a| a.status == AgentStatus::Done).collect(),
    })
}
