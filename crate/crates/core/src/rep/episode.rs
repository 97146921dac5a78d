use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::sync::OnceLock;

use super::planner::{plan_with_warm_start, PlanResult, RepConfig};
use super::radio::{BeamModel, ChannelEnv, NoReward, RadioMap, RewardModel};
use super::RepError;
use crate::geometry::{Rect, Vec2};
use crate::geomworld::{clearance, step_dynamics, ControlInput, RobotState, World};
use crate::output::fmt_f64;
use crate::seed::mix_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RepVariant {
    /// Radio-aware planning with near-field focusing.
    Rep,
    /// Radio-unaware planning, near-field focusing on the large array.
    NfcBaseline,
    /// Radio-unaware planning, small low-frequency array with planar beams.
    FfcBaseline,
    /// Radio-unaware planning, large array but planar-model beams.
    NfcPlanar,
}

impl RepVariant {
    pub const ALL: [RepVariant; 4] = [Self::Rep, Self::NfcBaseline, Self::FfcBaseline, Self::NfcPlanar];

    pub fn name(self) -> &'static str {
        match self {
            Self::Rep => "REP",
            Self::NfcBaseline => "NFC",
            Self::FfcBaseline => "FFC",
            Self::NfcPlanar => "NFC-Planar",
        }
    }

    pub fn radio_aware(self) -> bool {
        self == Self::Rep
    }

    pub fn beam_model(self) -> BeamModel {
        match self {
            Self::Rep | Self::NfcBaseline => BeamModel::NearField,
            Self::FfcBaseline | Self::NfcPlanar => BeamModel::Planar,
        }
    }

    pub fn uses_small_array(self) -> bool {
        self == Self::FfcBaseline
    }
}

impl fmt::Display for RepVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RepVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "rep" => Ok(Self::Rep),
            "nfc" | "nfc-baseline" => Ok(Self::NfcBaseline),
            "ffc" | "ffc-baseline" => Ok(Self::FfcBaseline),
            "nfc-planar" => Ok(Self::NfcPlanar),
            other => Err(format!("unknown REP variant '{other}'")),
        }
    }
}

/// Everything a REP episode needs besides the variant and seed.
pub struct RepSetup {
    pub start: RobotState,
    pub world: World,
    /// Base planner configuration; the variant decides the radio weight.
    pub cfg: RepConfig,
    /// Large near-field array (also used by the planner's reward).
    pub nfc: ChannelEnv,
    /// Small far-field array.
    pub ffc: ChannelEnv,
    pub time_limit: f64,
    /// Region over which the planner caches its reward map.
    pub radio_map_region: Option<Rect>,
    radio_map: OnceLock<RadioMap>,
}

impl RepSetup {
    pub fn new(start: RobotState, world: World, cfg: RepConfig, nfc: ChannelEnv, ffc: ChannelEnv, time_limit: f64) -> Self {
        Self { start, world, cfg, nfc, ffc, time_limit, radio_map_region: None, radio_map: OnceLock::new() }
    }

    pub fn with_radio_map(mut self, region: Rect) -> Self {
        self.radio_map_region = Some(region);
        self
    }

    fn reward_model(&self) -> &dyn RewardModel {
        match self.radio_map_region {
            Some(region) => self.radio_map.get_or_init(|| RadioMap::build(self.nfc.clone(), region, 0.05)),
            None => &self.nfc,
        }
    }

    pub fn env_for(&self, variant: RepVariant) -> &ChannelEnv {
        if variant.uses_small_array() {
            &self.ffc
        } else {
            &self.nfc
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
    pub rate_bps: f64,
    pub clearance_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub variant: RepVariant,
    pub seed: u64,
    pub rows: Vec<TraceRow>,
    pub reached_goal: bool,
    pub final_state: RobotState,
    /// Rate at the start pose; reported as the mean of an empty trace.
    start_rate: f64,
}

impl EpisodeTrace {
    /// Time-average realized rate over the episode.
    pub fn mean_rate(&self) -> f64 {
        if self.rows.is_empty() {
            return self.start_rate;
        }
        self.rows.iter().map(|r| r.rate_bps).sum::<f64>() / self.rows.len() as f64
    }

    pub fn min_clearance(&self) -> f64 {
        self.rows.iter().map(|r| r.clearance_m).fold(f64::INFINITY, f64::min)
    }

    pub const CSV_HEADER: &'static str = "t,x,y,theta,v,omega,rate_bps,clearance_m,variant,seed";

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                fmt_f64(r.t),
                fmt_f64(r.x),
                fmt_f64(r.y),
                fmt_f64(r.theta),
                fmt_f64(r.v),
                fmt_f64(r.omega),
                fmt_f64(r.rate_bps),
                fmt_f64(r.clearance_m),
                self.variant.name(),
                self.seed
            )?;
        }
        Ok(())
    }
}

struct Drive {
    rows: Vec<TraceRow>,
    reached_goal: bool,
    final_state: RobotState,
}

/// Closed-loop receding-horizon episode: plan, apply the first control,
/// advance, until the goal or the time limit. Realized rates always use the
/// true spherical-wave channel with the variant's beam design.
pub fn run_episode(setup: &RepSetup, variant: RepVariant, seed: u64) -> Result<EpisodeTrace, RepError> {
    let drive = drive(setup, variant.radio_aware(), seed)?;
    finish(setup, variant, seed, &drive)
}

/// Runs several variants for one seed. Radio-unaware variants share one
/// planner, so their trajectory is simulated once and only re-scored.
pub fn run_variants(setup: &RepSetup, variants: &[RepVariant], seed: u64) -> Result<Vec<EpisodeTrace>, RepError> {
    let mut aware = None;
    let mut unaware = None;
    variants
        .iter()
        .map(|&v| {
            let slot = if v.radio_aware() { &mut aware } else { &mut unaware };
            if slot.is_none() {
                *slot = Some(drive(setup, v.radio_aware(), seed)?);
            }
            finish(setup, v, seed, slot.as_ref().unwrap())
        })
        .collect()
}

fn finish(setup: &RepSetup, variant: RepVariant, seed: u64, drive: &Drive) -> Result<EpisodeTrace, RepError> {
    let env = setup.env_for(variant);
    let beam = variant.beam_model();
    let start_rate = env.realized_rate(setup.start.position, beam, mix_seed(seed, 0))?;
    let mut rows = drive.rows.clone();
    for (tick, r) in rows.iter_mut().enumerate() {
        r.rate_bps = env.realized_rate(Vec2::new(r.x, r.y), beam, mix_seed(seed, tick as u64))?;
    }
    Ok(EpisodeTrace {
        variant,
        seed,
        rows,
        reached_goal: drive.reached_goal,
        final_state: drive.final_state.clone(),
        start_rate,
    })
}

fn drive(setup: &RepSetup, radio_aware: bool, seed: u64) -> Result<Drive, RepError> {
    let mut cfg = setup.cfg.clone();
    if !radio_aware {
        cfg.radio_weight = 0.0;
    }
    cfg.validate()?;
    let reward: &dyn RewardModel = if radio_aware { setup.reward_model() } else { &NoReward };

    let mut state = setup.start.clone();
    let mut rows = Vec::new();
    let mut warm: Option<Vec<ControlInput>> = None;
    let mut reached_goal = false;
    let max_ticks = (setup.time_limit / cfg.dt).round() as u64;

    for tick in 0..max_ticks {
        let t = tick as f64 * cfg.dt;
        if state.position.distance(cfg.goal) <= cfg.goal_tolerance {
            reached_goal = true;
            break;
        }
        cfg.rng_seed = mix_seed(seed, tick);
        let control = match plan_with_warm_start(&state, &setup.world, &cfg, reward, t, warm.as_deref()) {
            Ok(PlanResult { controls, .. }) => {
                let first = controls[0];
                let mut shifted = controls[1..].to_vec();
                shifted.push(*controls.last().unwrap());
                warm = Some(shifted);
                first
            }
            Err(RepError::NoFeasiblePlan) => {
                let pose = state.pose();
                if !setup.world.is_clear(&state.footprint, pose, t + cfg.dt, cfg.safety_distance) {
                    return Err(RepError::NoFeasiblePlan);
                }
                warm = None;
                ControlInput::STOP
            }
            Err(e) => return Err(e),
        };
        rows.push(TraceRow {
            t,
            x: state.position.x,
            y: state.position.y,
            theta: state.heading,
            v: control.v,
            omega: control.omega,
            rate_bps: 0.0,
            clearance_m: clearance(&state, &setup.world, t),
        });
        state = step_dynamics(&state, control, cfg.dt, &cfg.limits)?;
    }
    if !reached_goal && state.position.distance(cfg.goal) <= cfg.goal_tolerance {
        reached_goal = true;
    }
    Ok(Drive { rows, reached_goal, final_state: state })
}
