use super::agent::{safe_tracker_control, RobotAgent};
use super::route::{point_along, RouteGrid};
use super::{CollaborationDecision, DecisionReason, OcnConfig, OcnError};
use crate::geometry::{point_segment_distance, Vec2};
use crate::geomworld::{integrate_pose, path_waypoint_tracker, ControlInput, ConvexPolygon, Integrator, World};
use crate::nfchan::{beam_gain, linear_to_db, los_channel_near, mrt_beam, planar_beam, ArrayGeometry, BeamVector, NfError, PathlossModel};
use crate::rep::{plan_with_warm_start, BeamModel, NoReward, RepError};

/// Edge receiver as seen by the robots.
#[derive(Debug, Clone, Copy)]
pub struct UplinkView<'a> {
    pub geom: &'a ArrayGeometry,
    pub pl: &'a PathlossModel,
    pub beam: BeamModel,
    pub noise_power: f64,
}

impl UplinkView<'_> {
    fn combiner(&self, position: Vec2) -> Result<BeamVector, NfError> {
        match self.beam {
            BeamModel::NearField => mrt_beam(&los_channel_near(self.geom, position, self.pl)?),
            BeamModel::Planar => planar_beam(self.geom, position, self.pl),
        }
    }

    /// Desired gain for `position` and the leakage gain of each interferer
    /// through the same combiner.
    pub fn gains(&self, position: Vec2, interferers: &[Vec2]) -> Result<(f64, Vec<f64>), NfError> {
        let w = self.combiner(position)?;
        let g = beam_gain(&los_channel_near(self.geom, position, self.pl)?, &w)?;
        let leak = interferers
            .iter()
            .map(|p| beam_gain(&los_channel_near(self.geom, *p, self.pl)?, &w))
            .collect::<Result<_, _>>()?;
        Ok((g, leak))
    }
}

/// Uplink SINR (dB) of a robot transmitting `power` at `position` while the
/// `interferers` (position, power) transmit concurrently.
pub fn uplink_sinr_db(view: &UplinkView, position: Vec2, power: f64, interferers: &[(Vec2, f64)]) -> Result<f64, NfError> {
    let pos: Vec<Vec2> = interferers.iter().map(|(p, _)| *p).collect();
    let (g, leak) = view.gains(position, &pos)?;
    let i: f64 = leak.iter().zip(interferers).map(|(l, (_, p))| l * p).sum();
    Ok(linear_to_db(power * g / (view.noise_power + i)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgePlan {
    pub controls: Vec<ControlInput>,
    pub final_position: Vec2,
    /// Arc-length advance along the robot's path over the horizon.
    pub progress: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainEstimate {
    /// Drop in remaining route length under the edge plan compared with the
    /// local tracker over one horizon (m); 0 when blocked.
    pub gain: f64,
    /// No route to the path end, or no collision-free edge plan.
    pub blocked: bool,
    pub local_progress: f64,
    /// The local tracker ran two horizons without its safety filter
    /// stepping in.
    pub local_clear: bool,
    pub plan: Option<EdgePlan>,
}

fn inscribed_radius(fp: &ConvexPolygon) -> f64 {
    let v = fp.vertices();
    (0..v.len()).map(|i| point_segment_distance(Vec2::ZERO, v[i], v[(i + 1) % v.len()])).fold(f64::INFINITY, f64::min)
}

/// Final position of a local-tracker rollout over one horizon and whether
/// the safety filter ever had to override the tracker.
/// Tracker rollout: position after one horizon, and whether the safety
/// filter stepped in at any point over two horizons. The longer look keeps a
/// robot from being handed back just before it closes in on the obstacle
/// again.
fn local_rollout(agent: &RobotAgent, world: &World, t: f64, cfg: &OcnConfig) -> (Vec2, bool) {
    let dt = cfg.planner.dt;
    let mut state = agent.state.clone();
    let mut end = state.position;
    let mut filtered = false;
    for k in 0..2 * cfg.planner.horizon {
        let tk = t + k as f64 * dt;
        let u = safe_tracker_control(&agent.path, &state, world, tk, &cfg.tracker, dt, cfg.tracker_margin);
        filtered |= u != path_waypoint_tracker(&agent.path, state.pose(), &cfg.tracker);
        state = state.with_pose(integrate_pose(state.pose(), u, dt, Integrator::ExactArc), u);
        if k + 1 == cfg.planner.horizon {
            end = state.position;
        }
    }
    (end, filtered)
}

fn route_length(route: &[Vec2]) -> f64 {
    route.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Collision-avoiding edge plan toward a subgoal on a coarse route to the
/// path end. `None` when the environment offers no way through.
pub fn edge_plan(
    agent: &RobotAgent,
    world: &World,
    t: f64,
    cfg: &OcnConfig,
    grid: &RouteGrid,
    seed: u64,
    warm: Option<&[ControlInput]>,
) -> Result<Option<EdgePlan>, OcnError> {
    let inflate = cfg.planner.safety_distance + inscribed_radius(&agent.state.footprint);
    let Some(route) = grid.route(world, t, agent.state.position, agent.path.end(), inflate) else {
        return Ok(None);
    };
    let mut pcfg = cfg.planner.clone();
    pcfg.radio_weight = 0.0;
    pcfg.goal = point_along(&route, cfg.subgoal_distance);
    pcfg.rng_seed = seed;
    match plan_with_warm_start(&agent.state, world, &pcfg, &NoReward, t, warm) {
        Ok(plan) => {
            let final_position = plan.states.last().unwrap().position;
            Ok(Some(EdgePlan {
                progress: agent.path.project(final_position) - agent.progress(),
                controls: plan.controls,
                final_position,
            }))
        }
        Err(RepError::NoFeasiblePlan) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Predicted benefit of following the edge plan instead of the local
/// tracker for one horizon.
pub fn collaboration_gain(
    agent: &RobotAgent,
    world: &World,
    t: f64,
    cfg: &OcnConfig,
    grid: &RouteGrid,
    seed: u64,
    warm: Option<&[ControlInput]>,
) -> Result<GainEstimate, OcnError> {
    let (local_end, filtered) = local_rollout(agent, world, t, cfg);
    let local_clear = !filtered;
    let local_progress = agent.path.project(local_end) - agent.progress();
    let Some(plan) = edge_plan(agent, world, t, cfg, grid, seed, warm)? else {
        return Ok(GainEstimate { gain: 0.0, blocked: true, local_progress, local_clear, plan: None });
    };
    // compare remaining route length so a sidestep around an obstacle counts
    // as progress even when it barely moves along the nominal path
    let inflate = cfg.planner.safety_distance + inscribed_radius(&agent.state.footprint);
    let to_go = |p: Vec2| grid.route(world, t, p, agent.path.end(), inflate).map(|r| route_length(&r));
    let gain = match (to_go(local_end), to_go(plan.final_position)) {
        (Some(a), Some(b)) => a - b,
        _ => plan.progress - local_progress,
    };
    Ok(GainEstimate { gain, blocked: false, local_progress, local_clear, plan: Some(plan) })
}

/// Gate an engagement: only stuck robots are considered; they engage when
/// the predicted gain and the uplink SINR both clear their thresholds.
#[allow(clippy::too_many_arguments)]
pub fn decide(
    agent: &RobotAgent,
    world: &World,
    t: f64,
    cfg: &OcnConfig,
    grid: &RouteGrid,
    view: &UplinkView,
    interferers: &[(Vec2, f64)],
    seed: u64,
) -> Result<(CollaborationDecision, Option<GainEstimate>), OcnError> {
    let sinr_db = uplink_sinr_db(view, agent.state.position, cfg.uplink_power, interferers)?;
    if !agent.is_stuck() {
        let d = CollaborationDecision { engage: false, predicted_gain: 0.0, sinr_db, reason: DecisionReason::NoGain };
        return Ok((d, None));
    }
    let est = collaboration_gain(agent, world, t, cfg, grid, seed, None)?;
    let reason = if est.blocked {
        DecisionReason::BlockedEnvironment
    } else if est.gain < cfg.gain_threshold {
        DecisionReason::NoGain
    } else if sinr_db < cfg.sinr_gate_db {
        DecisionReason::SinrBlocked
    } else {
        DecisionReason::Engaged
    };
    let d = CollaborationDecision {
        engage: reason == DecisionReason::Engaged,
        predicted_gain: est.gain,
        sinr_db,
        reason,
    };
    Ok((d, Some(est)))
}
