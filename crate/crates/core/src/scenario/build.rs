use std::path::Path;
use std::sync::Arc;

use super::{
    ArraySpec, BudgetMode, OcnTask, PlannerSpec, PoseTrackSpec, RepTask, Scenario, ScenarioError, ShapeSpec, TaskSpec,
    VbfTask,
};
use crate::geometry::{Rect, Vec2};
use crate::geomworld::{
    default_footprint, ControlLimits, ConvexPolygon, DynamicObstacle, Pose, RobotState, TrackerConfig, World,
};
use crate::nfchan::{
    db_to_linear, gain_heatmap, los_channel_near, mrt_beam, planar_beam, ArrayGeometry, Heatmap, LinkBudget,
    NlosParams, PathlossModel,
};
use crate::ocn::{AgentSpec, OcnConfig, OcnSetup, OcnVariant};
use crate::rep::{ChannelEnv, RepConfig, RepSetup, RepVariant};
use crate::vbf::{frame_score_proxy, read_frames_csv, Frame, PowerBudget, VbfBaseline, VbfParams};

fn v2(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

fn rect(r: [[f64; 2]; 2], what: &str) -> Result<Rect, ScenarioError> {
    let out = Rect::new(v2(r[0]), v2(r[1]));
    if out.is_degenerate() || !(out.width().is_finite() && out.height().is_finite()) {
        return Err(ScenarioError::Validation(format!("{what} must have min < max in both axes")));
    }
    Ok(out)
}

fn array(a: &ArraySpec, which: &str) -> Result<ArrayGeometry, ScenarioError> {
    ArrayGeometry::new(a.elements, a.carrier_hz, a.spacing_m, v2(a.center_m), v2(a.axis))
        .map_err(|e| ScenarioError::Validation(format!("radio.{which}: {e}")))
}

pub(crate) struct Radio {
    pub nfc: ArrayGeometry,
    pub ffc: ArrayGeometry,
    pub pl: PathlossModel,
    pub budget: LinkBudget,
    pub nlos: NlosParams,
}

pub(crate) fn radio(s: &Scenario) -> Result<Radio, ScenarioError> {
    let r = &s.radio;
    let pl = PathlossModel::new(db_to_linear(r.pathloss_ref_db), r.pathloss_exponent)?;
    let budget = LinkBudget::from_dbm(r.tx_power_dbm, r.noise_dbm, r.bandwidth_hz)?;
    let nlos = NlosParams { rician_k: r.rician_k, nlos_std: r.nlos_std, ..NlosParams::default() };
    nlos.validate()?;
    Ok(Radio { nfc: array(&r.nfc, "nfc")?, ffc: array(&r.ffc, "ffc")?, pl, budget, nlos })
}

fn shape(sh: &ShapeSpec, what: &str) -> Result<ConvexPolygon, ScenarioError> {
    let bad = |m: String| ScenarioError::Validation(format!("{what}: {m}"));
    match (sh.center_m, sh.size_m, &sh.vertices_m) {
        (Some(c), Some(sz), None) => ConvexPolygon::rectangle(v2(c), sz[0], sz[1]).map_err(|e| bad(e.to_string())),
        (None, None, Some(v)) => ConvexPolygon::new(v.iter().copied().map(v2).collect()).map_err(|e| bad(e.to_string())),
        _ => Err(bad("give either center_m and size_m, or vertices_m".into())),
    }
}

pub(crate) fn world(s: &Scenario) -> Result<World, ScenarioError> {
    let w = &s.world;
    let obstacles =
        w.obstacles.iter().enumerate().map(|(k, o)| shape(o, &format!("world.obstacles[{k}]"))).collect::<Result<_, _>>()?;
    let mut out = World::with_obstacles(obstacles);
    for (k, d) in w.dynamic.iter().enumerate() {
        let what = format!("world.dynamic[{k}]");
        let velocity = v2(d.velocity_mps);
        if !velocity.is_finite() || !d.active_from_s.is_finite() {
            return Err(ScenarioError::Validation(format!("{what}: velocity and start time must be finite")));
        }
        if d.active_until_s.is_some_and(|u| !(u >= d.active_from_s)) {
            return Err(ScenarioError::Validation(format!("{what}: active_until_s must not precede active_from_s")));
        }
        out.dynamic.push(DynamicObstacle {
            shape: shape(&d.shape, &what)?,
            velocity,
            active_from: d.active_from_s,
            active_until: d.active_until_s,
        });
    }
    if let Some(b) = w.bounds_m {
        out.bounds = Some(rect(b, "world.bounds_m")?);
    }
    if !(w.staleness_s >= 0.0 && w.staleness_s.is_finite()) {
        return Err(ScenarioError::Validation("world.staleness_s must be >= 0".into()));
    }
    out.staleness = w.staleness_s;
    Ok(out)
}

pub(crate) fn footprint(s: &Scenario) -> Result<Arc<ConvexPolygon>, ScenarioError> {
    Ok(Arc::new(match &s.world.footprint_m {
        Some(v) => ConvexPolygon::new(v.iter().copied().map(v2).collect())
            .map_err(|e| ScenarioError::Validation(format!("world.footprint_m: {e}")))?,
        None => default_footprint(),
    }))
}

fn planner(p: &PlannerSpec) -> Result<RepConfig, ScenarioError> {
    let limits = ControlLimits { v_max: p.v_max_mps, omega_max: p.omega_max_radps };
    if !(limits.v_max > 0.0 && limits.omega_max > 0.0) {
        return Err(ScenarioError::Validation("planner.v_max_mps and omega_max_radps must be > 0".into()));
    }
    let cfg = RepConfig {
        horizon: p.horizon,
        dt: p.dt_s,
        safety_distance: p.safety_distance_m,
        goal: Vec2::ZERO,
        goal_tolerance: p.goal_tolerance_m,
        radio_weight: p.radio_weight,
        progress_weight: p.progress_weight,
        effort_weight: p.effort_weight,
        v_ref: p.v_ref_mps,
        candidate_count: p.candidates,
        elite_frac: p.elite_frac,
        iterations: p.iterations,
        rng_seed: 0,
        limits,
        init_std: (p.init_std_v_mps, p.init_std_omega_radps),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn variants<T: std::str::FromStr<Err = String> + PartialEq>(names: &[String], what: &str) -> Result<Vec<T>, ScenarioError> {
    if names.is_empty() {
        return Err(ScenarioError::Validation(format!("{what}.variants must not be empty")));
    }
    let mut out: Vec<T> = Vec::with_capacity(names.len());
    for n in names {
        let v: T = n.parse().map_err(ScenarioError::Validation)?;
        if out.contains(&v) {
            return Err(ScenarioError::Validation(format!("{what}.variants lists '{n}' twice")));
        }
        out.push(v);
    }
    Ok(out)
}

pub(crate) fn rep_variants(t: &RepTask) -> Result<Vec<RepVariant>, ScenarioError> {
    variants(&t.variants, "task.rep")
}

pub(crate) fn vbf_variants(t: &VbfTask) -> Result<Vec<VbfBaseline>, ScenarioError> {
    variants(&t.variants, "task.vbf")
}

pub(crate) fn ocn_variants(t: &OcnTask) -> Result<Vec<OcnVariant>, ScenarioError> {
    variants(&t.variants, "task.ocn")
}

/// Episode setup for a rep scenario.
pub fn rep_setup(s: &Scenario, t: &RepTask) -> Result<RepSetup, ScenarioError> {
    let r = radio(s)?;
    let world = world(s)?;
    let mut cfg = planner(&t.planner)?;
    cfg.goal = v2(t.goal_m);
    let start = RobotState::new(v2(t.start_m), t.start_heading_rad, footprint(s)?)?;
    if !cfg.goal.is_finite() {
        return Err(ScenarioError::Validation("task.rep.goal_m must be finite".into()));
    }
    let env = |geom: ArrayGeometry| ChannelEnv { geom, pl: r.pl, budget: r.budget, nlos: r.nlos };
    let mut setup = RepSetup::new(start, world, cfg, env(r.nfc.clone()), env(r.ffc.clone()), s.time_limit_s);
    if let Some(region) = t.radio_map_region_m {
        setup = setup.with_radio_map(rect(region, "task.rep.radio_map_region_m")?);
    }
    Ok(setup)
}

/// Fleet setup for an ocn scenario. The edge sits at the centre of the large
/// array and the OCN noise floor is the scenario's.
pub fn ocn_setup(s: &Scenario, t: &OcnTask) -> Result<OcnSetup, ScenarioError> {
    let r = radio(s)?;
    let planner = planner(&t.planner)?;
    let cfg = OcnConfig {
        sinr_gate_db: t.sinr_gate_db,
        gain_threshold: t.gain_threshold_m,
        uplink_power: t.uplink_power_w,
        message_energy: t.message_energy_j,
        edge_center: r.nfc.center(),
        noise_dbm: s.radio.noise_dbm,
        edge_slots: t.edge_slots,
        stuck_window: t.stuck_window_s,
        progress_eps: t.progress_eps_m,
        tracker_margin: t.tracker_margin_m,
        route_resolution: t.route_resolution_m,
        subgoal_distance: t.subgoal_distance_m,
        tracker: TrackerConfig {
            lookahead: t.tracker_lookahead_m,
            v_ref: planner.v_ref,
            omega_max: planner.limits.omega_max,
            goal_tolerance: planner.goal_tolerance,
        },
        planner,
    };
    if !(t.tracker_lookahead_m > 0.0) {
        return Err(ScenarioError::Validation("task.ocn.tracker_lookahead_m must be > 0".into()));
    }
    let agents = t.robots.iter().map(|r| AgentSpec { id: r.id, path: r.path_m.iter().copied().map(v2).collect() }).collect();
    Ok(OcnSetup::new(world(s)?, agents, cfg, r.nfc, r.ffc, r.pl, footprint(s)?, s.time_limit_s)?)
}

/// Evenly spaced poses by arc length, facing along the track.
fn sample_track(t: &PoseTrackSpec, what: &str) -> Result<Vec<Pose>, ScenarioError> {
    let pts: Vec<Vec2> = t.waypoints_m.iter().copied().map(v2).collect();
    if pts.len() < 2 || pts.windows(2).any(|w| !(w[0].distance(w[1]) > 0.0)) {
        return Err(ScenarioError::Validation(format!("{what}: needs at least two distinct consecutive waypoints")));
    }
    if t.count == 0 {
        return Err(ScenarioError::Validation(format!("{what}: count must be >= 1")));
    }
    let seg: Vec<f64> = pts.windows(2).map(|w| w[0].distance(w[1])).collect();
    let total: f64 = seg.iter().sum();
    let mut out = Vec::with_capacity(t.count);
    for k in 0..t.count {
        let mut s = if t.count == 1 { 0.0 } else { total * k as f64 / (t.count - 1) as f64 };
        let mut i = 0;
        while i + 1 < seg.len() && s > seg[i] {
            s -= seg[i];
            i += 1;
        }
        let dir = pts[i + 1] - pts[i];
        let p = pts[i] + dir * (s / seg[i]).min(1.0);
        out.push(Pose::new(p, dir.y.atan2(dir.x) + t.heading_offset_rad));
    }
    Ok(out)
}

/// Candidate frames with their view-contribution scores. Frames read from a
/// file keep the scores written in it.
pub fn frames_for(s: &Scenario, base_dir: Option<&Path>) -> Result<Vec<Frame>, ScenarioError> {
    let TaskSpec::Vbf(t) = &s.task else {
        return Err(ScenarioError::Validation("not a vbf scenario".into()));
    };
    let training = sample_track(&t.training, "task.vbf.training")?;
    let score = |pose: Pose| frame_score_proxy(pose, &training, t.score_length_scale_m, t.score_angle_scale_rad);
    let mut frames = match (&t.frames_file, &t.frames) {
        (Some(file), _) => {
            let path = base_dir.map_or_else(|| Path::new(file).to_path_buf(), |d| d.join(file));
            let f = std::fs::File::open(&path).map_err(|e| ScenarioError::io(&path, e))?;
            read_frames_csv(std::io::BufReader::new(f))
                .map_err(|e| ScenarioError::Validation(format!("{}: {e}", path.display())))?
        }
        (None, Some(track)) => sample_track(track, "task.vbf.frames")?
            .into_iter()
            .enumerate()
            .map(|(k, pose)| {
                let mut f = Frame::new(k as u32, pose, score(pose));
                f.payload_bits = t.payload_bits;
                f.slot_duration = t.slot_s;
                f
            })
            .collect::<Vec<_>>(),
        (None, None) => return Err(ScenarioError::Validation("task.vbf needs frames or frames_file".into())),
    };
    frames.sort_by_key(|f| f.id);
    Ok(frames)
}

/// Selection parameters for one budget of the sweep.
pub fn vbf_params(s: &Scenario, t: &VbfTask, budget_w: f64) -> Result<VbfParams, ScenarioError> {
    let r = radio(s)?;
    let power_budget = match t.budget_mode {
        BudgetMode::Total => PowerBudget::Total(budget_w),
        BudgetMode::PerFrame => PowerBudget::PerFrame(budget_w),
    };
    Ok(VbfParams { nfc: r.nfc, ffc: r.ffc, pl: r.pl, budget: r.budget, power_budget })
}

/// Which beam a heatmap shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamChoice {
    /// Large array, focused on the exact spherical-wave channel.
    NearField,
    /// Small array, steered with the planar model.
    Ffc,
    /// Large array, steered with the planar model.
    NfcPlanar,
}

impl BeamChoice {
    pub const ALL: [BeamChoice; 3] = [Self::NearField, Self::Ffc, Self::NfcPlanar];

    pub fn name(self) -> &'static str {
        match self {
            Self::NearField => "VBF",
            Self::Ffc => "FFC",
            Self::NfcPlanar => "NFC-Planar",
        }
    }
}

impl std::str::FromStr for BeamChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "vbf" | "nfc" | "near-field" => Ok(Self::NearField),
            "ffc" => Ok(Self::Ffc),
            "nfc-planar" => Ok(Self::NfcPlanar),
            other => Err(format!("unknown beam '{other}'")),
        }
    }
}

/// Region used for heatmaps when the scenario gives none: a box around the
/// array centre and the pose with 1.5 m of margin.
fn default_region(center: Vec2, pose: Vec2) -> Rect {
    let m = 1.5;
    Rect::new(
        Vec2::new(center.x.min(pose.x) - m, center.y.min(pose.y) - m),
        Vec2::new(center.x.max(pose.x) + m, center.y.max(pose.y) + m),
    )
}

/// Received-gain map of the chosen beam aimed at `pose`, on the array the
/// beam belongs to. The map shows the shape of the beam, so distance loss is
/// left out (pathloss exponent 0).
pub fn heatmap_for(s: &Scenario, pose: Vec2, beam: BeamChoice) -> Result<Heatmap, ScenarioError> {
    let r = radio(s)?;
    let (region, res) = match &s.task {
        TaskSpec::Vbf(t) => (
            t.heatmap_region_m.map(|b| rect(b, "task.vbf.heatmap_region_m")).transpose()?,
            t.heatmap_resolution_m,
        ),
        _ => (None, 0.05),
    };
    let region = region.unwrap_or_else(|| default_region(r.nfc.center(), pose));
    let flat = PathlossModel::new(r.pl.reference_loss(), 0.0)?;
    let (geom, w) = match beam {
        BeamChoice::NearField => (&r.nfc, mrt_beam(&los_channel_near(&r.nfc, pose, &flat)?)?),
        BeamChoice::Ffc => (&r.ffc, planar_beam(&r.ffc, pose, &flat)?),
        BeamChoice::NfcPlanar => (&r.nfc, planar_beam(&r.nfc, pose, &flat)?),
    };
    Ok(gain_heatmap(geom, &w, region, res, &flat)?)
}

pub(super) fn validate(s: &Scenario) -> Result<(), ScenarioError> {
    radio(s)?;
    world(s)?;
    footprint(s)?;
    match &s.task {
        TaskSpec::Rep(t) => {
            rep_variants(t)?;
            rep_setup(s, t)?;
        }
        TaskSpec::Vbf(t) => {
            vbf_variants(t)?;
            sample_track(&t.training, "task.vbf.training")?;
            if let (None, Some(track)) = (&t.frames_file, &t.frames) {
                sample_track(track, "task.vbf.frames")?;
            }
            if t.frames.is_none() && t.frames_file.is_none() {
                return Err(ScenarioError::Validation("task.vbf needs frames or frames_file".into()));
            }
            if !(t.payload_bits > 0.0 && t.slot_s > 0.0) {
                return Err(ScenarioError::Validation("task.vbf.payload_bits and slot_s must be > 0".into()));
            }
            if !(t.score_length_scale_m > 0.0 && t.score_angle_scale_rad > 0.0) {
                return Err(ScenarioError::Validation("task.vbf score scales must be > 0".into()));
            }
            if t.budget_sweep_w.is_empty() || t.budget_sweep_w.iter().any(|b| !(*b >= 0.0)) {
                return Err(ScenarioError::Validation("task.vbf.budget_sweep_w must list budgets >= 0".into()));
            }
            if let Some(b) = t.heatmap_region_m {
                rect(b, "task.vbf.heatmap_region_m")?;
            }
            if !(t.heatmap_resolution_m > 0.0) {
                return Err(ScenarioError::Validation("task.vbf.heatmap_resolution_m must be > 0".into()));
            }
        }
        TaskSpec::Ocn(t) => {
            ocn_variants(t)?;
            ocn_setup(s, t)?;
        }
    }
    Ok(())
}
