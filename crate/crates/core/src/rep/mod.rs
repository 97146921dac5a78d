//! Radio-aware receding-horizon planning: robot actions are chosen jointly
//! with the data rate the edge can harvest through near-field beam focusing.

mod episode;
mod planner;
mod radio;

pub use episode::{run_episode, run_variants, EpisodeTrace, RepSetup, RepVariant, TraceRow};
pub use planner::{plan, plan_with_warm_start, PlanResult, RepConfig};
pub use radio::{step_reward, BeamModel, ChannelEnv, NoReward, RadioMap, RewardModel};

use thiserror::Error;

use crate::geomworld::GeomError;
use crate::nfchan::NfError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepError {
    #[error("no feasible plan: every candidate violates the safety distance")]
    NoFeasiblePlan,
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Channel(#[from] NfError),
}
