//! Scenario files: a versioned TOML schema covering the radio setup, the
//! world and one task (`rep`, `vbf` or `ocn`), plus the runner that turns a
//! scenario into trace files and a checksummed manifest.
//!
//! Every numeric key carries its unit in the name. Unknown keys are rejected
//! and every default is written back out on serialization, so a parsed
//! scenario round-trips exactly.

mod build;
pub mod oracle;
mod run;

pub use build::{frames_for, heatmap_for, ocn_setup, rep_setup, vbf_params, BeamChoice};
pub use run::{run, run_filtered, FileEntry, RunManifest, MANIFEST_FILE};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geomworld::GeomError;
use crate::nfchan::NfError;
use crate::ocn::OcnError;
use crate::rep::RepError;
use crate::vbf::VbfError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error in {file}: {message}")]
    Parse { file: String, message: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("task is infeasible: {0}")]
    Infeasible(String),
    #[error("task failed: {0}")]
    Task(String),
}

impl ScenarioError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }
}

impl From<RepError> for ScenarioError {
    fn from(e: RepError) -> Self {
        match e {
            RepError::NoFeasiblePlan => Self::Infeasible(e.to_string()),
            RepError::InvalidConfig(m) => Self::Validation(m),
            other => Self::Task(other.to_string()),
        }
    }
}

impl From<VbfError> for ScenarioError {
    fn from(e: VbfError) -> Self {
        match e {
            VbfError::InvalidProblem(m) => Self::Validation(m),
            VbfError::ZeroGain(_) | VbfError::TooManyFramesForExact { .. } => Self::Infeasible(e.to_string()),
            other => Self::Task(other.to_string()),
        }
    }
}

impl From<OcnError> for ScenarioError {
    fn from(e: OcnError) -> Self {
        match e {
            OcnError::InvalidSetup(m) => Self::Validation(m),
            OcnError::Planner(p) => p.into(),
            other => Self::Task(other.to_string()),
        }
    }
}

impl From<NfError> for ScenarioError {
    fn from(e: NfError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<GeomError> for ScenarioError {
    fn from(e: GeomError) -> Self {
        Self::Validation(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub seeds: Vec<u64>,
    pub time_limit_s: f64,
    pub radio: RadioSpec,
    #[serde(default)]
    pub world: WorldSpec,
    pub task: TaskSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioSpec {
    /// Reference pathloss at 1 m, shared by both arrays.
    pub pathloss_ref_db: f64,
    pub pathloss_exponent: f64,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    pub bandwidth_hz: f64,
    /// Rician K factor (linear); `inf` is line-of-sight only.
    #[serde(default = "inf")]
    pub rician_k: f64,
    #[serde(default = "one")]
    pub nlos_std: f64,
    /// Large near-field array.
    pub nfc: ArraySpec,
    /// Small far-field array.
    pub ffc: ArraySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySpec {
    pub elements: usize,
    pub carrier_hz: f64,
    /// Element spacing; half a wavelength when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_m: Option<f64>,
    pub center_m: [f64; 2],
    pub axis: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds_m: Option<[[f64; 2]; 2]>,
    /// Age of the obstacle snapshot the planners see.
    #[serde(default)]
    pub staleness_s: f64,
    /// Robot footprint in the body frame; a 0.3 m square when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub footprint_m: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub obstacles: Vec<ShapeSpec>,
    #[serde(default)]
    pub dynamic: Vec<DynamicSpec>,
}

/// A convex obstacle given either as an axis-aligned box or by its vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_m: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_m: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices_m: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicSpec {
    pub shape: ShapeSpec,
    pub velocity_mps: [f64; 2],
    pub active_from_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_until_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskSpec {
    Rep(RepTask),
    Vbf(VbfTask),
    Ocn(OcnTask),
}

impl TaskSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Rep(_) => "rep",
            Self::Vbf(_) => "vbf",
            Self::Ocn(_) => "ocn",
        }
    }
}

/// Receding-horizon planner settings shared by REP and the OCN edge planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSpec {
    #[serde(default = "d_horizon")]
    pub horizon: usize,
    #[serde(default = "d_dt")]
    pub dt_s: f64,
    #[serde(default = "d_safety")]
    pub safety_distance_m: f64,
    #[serde(default = "d_goal_tol")]
    pub goal_tolerance_m: f64,
    #[serde(default)]
    pub radio_weight: f64,
    #[serde(default = "d_progress_w")]
    pub progress_weight: f64,
    #[serde(default = "d_effort_w")]
    pub effort_weight: f64,
    #[serde(default = "d_v")]
    pub v_ref_mps: f64,
    #[serde(default = "d_v")]
    pub v_max_mps: f64,
    #[serde(default = "d_omega")]
    pub omega_max_radps: f64,
    #[serde(default = "d_candidates")]
    pub candidates: usize,
    #[serde(default = "d_elite")]
    pub elite_frac: f64,
    #[serde(default = "d_iterations")]
    pub iterations: usize,
    #[serde(default = "d_std_v")]
    pub init_std_v_mps: f64,
    #[serde(default = "d_std_omega")]
    pub init_std_omega_radps: f64,
}

impl Default for PlannerSpec {
    fn default() -> Self {
        toml::from_str("").expect("planner defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepTask {
    pub start_m: [f64; 2],
    #[serde(default)]
    pub start_heading_rad: f64,
    pub goal_m: [f64; 2],
    /// Region over which the planner's rate reward is cached.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radio_map_region_m: Option<[[f64; 2]; 2]>,
    #[serde(default = "rep_variants")]
    pub variants: Vec<String>,
    #[serde(default)]
    pub planner: PlannerSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    Total,
    PerFrame,
}

/// Poses sampled evenly by arc length along a polyline, facing along it
/// (plus a fixed heading offset).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseTrackSpec {
    pub waypoints_m: Vec<[f64; 2]>,
    pub count: usize,
    #[serde(default)]
    pub heading_offset_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VbfTask {
    /// Poses the edge's scene model was built from.
    pub training: PoseTrackSpec,
    /// Candidate frames; ignored when `frames_file` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<PoseTrackSpec>,
    /// Frame list CSV, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames_file: Option<String>,
    #[serde(default = "d_payload")]
    pub payload_bits: f64,
    #[serde(default = "one")]
    pub slot_s: f64,
    #[serde(default = "one")]
    pub score_length_scale_m: f64,
    #[serde(default = "d_angle_scale")]
    pub score_angle_scale_rad: f64,
    #[serde(default = "d_budget_mode")]
    pub budget_mode: BudgetMode,
    pub budget_sweep_w: Vec<f64>,
    #[serde(default = "vbf_variants")]
    pub variants: Vec<String>,
    /// Robot position for the beam heatmaps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heatmap_pose_m: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heatmap_region_m: Option<[[f64; 2]; 2]>,
    #[serde(default = "d_heat_res")]
    pub heatmap_resolution_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub id: u32,
    pub path_m: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcnTask {
    pub robots: Vec<RobotSpec>,
    #[serde(default = "d_gate")]
    pub sinr_gate_db: f64,
    #[serde(default = "d_gain_thr")]
    pub gain_threshold_m: f64,
    #[serde(default = "d_point1")]
    pub uplink_power_w: f64,
    #[serde(default = "d_point1")]
    pub message_energy_j: f64,
    #[serde(default = "d_slots")]
    pub edge_slots: usize,
    #[serde(default = "one")]
    pub stuck_window_s: f64,
    #[serde(default = "d_eps")]
    pub progress_eps_m: f64,
    #[serde(default = "d_margin")]
    pub tracker_margin_m: f64,
    #[serde(default = "d_lookahead")]
    pub tracker_lookahead_m: f64,
    #[serde(default = "d_point1")]
    pub route_resolution_m: f64,
    #[serde(default = "d_subgoal")]
    pub subgoal_distance_m: f64,
    #[serde(default = "ocn_variants")]
    pub variants: Vec<String>,
    #[serde(default)]
    pub planner: PlannerSpec,
}

fn inf() -> f64 {
    f64::INFINITY
}
fn one() -> f64 {
    1.0
}
fn d_horizon() -> usize {
    20
}
fn d_dt() -> f64 {
    0.1
}
fn d_safety() -> f64 {
    0.1
}
fn d_goal_tol() -> f64 {
    0.1
}
fn d_progress_w() -> f64 {
    10.0
}
fn d_effort_w() -> f64 {
    0.1
}
fn d_v() -> f64 {
    0.5
}
fn d_omega() -> f64 {
    1.5
}
fn d_candidates() -> usize {
    256
}
fn d_elite() -> f64 {
    0.1
}
fn d_iterations() -> usize {
    4
}
fn d_std_v() -> f64 {
    0.2
}
fn d_std_omega() -> f64 {
    0.8
}
fn d_payload() -> f64 {
    crate::vbf::DEFAULT_PAYLOAD_BITS
}
fn d_angle_scale() -> f64 {
    std::f64::consts::FRAC_PI_2
}
fn d_budget_mode() -> BudgetMode {
    BudgetMode::Total
}
fn d_heat_res() -> f64 {
    0.05
}
fn d_gate() -> f64 {
    20.0
}
fn d_gain_thr() -> f64 {
    0.1
}
fn d_point1() -> f64 {
    0.1
}
fn d_slots() -> usize {
    2
}
fn d_eps() -> f64 {
    0.05
}
fn d_margin() -> f64 {
    0.3
}
fn d_lookahead() -> f64 {
    0.6
}
fn d_subgoal() -> f64 {
    1.5
}
fn rep_variants() -> Vec<String> {
    crate::rep::RepVariant::ALL.iter().map(|v| v.name().to_string()).collect()
}
fn vbf_variants() -> Vec<String> {
    crate::vbf::VbfBaseline::ALL.iter().map(|v| v.name().to_string()).collect()
}
fn ocn_variants() -> Vec<String> {
    crate::ocn::OcnVariant::ALL.iter().map(|v| v.name().to_string()).collect()
}

impl Scenario {
    /// Parse and validate TOML text. `origin` names the source in errors.
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ScenarioError> {
        let s: Scenario =
            toml::from_str(text).map_err(|e| ScenarioError::Parse { file: origin.to_string(), message: e.to_string() })?;
        s.validate()?;
        Ok(s)
    }

    /// Canonical TOML with every default written out.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Checks every invariant that can be checked without running the task,
    /// including building all domain objects.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Validation(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.name.trim().is_empty() {
            return bad("name must not be empty".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must list at least one seed".into());
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return bad("seeds must be distinct".into());
        }
        if !(self.time_limit_s > 0.0 && self.time_limit_s.is_finite()) {
            return bad("time_limit_s must be positive".into());
        }
        build::validate(self)
    }
}

/// Read, parse and validate a scenario file.
pub fn parse_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
    Scenario::from_toml_str(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
name = "tiny"
seeds = [0]
time_limit_s = 5.0

[radio]
pathloss_ref_db = -62.0
pathloss_exponent = 2.0
tx_power_dbm = 20.0
noise_dbm = -80.0
bandwidth_hz = 200e3
nfc = { elements = 64, carrier_hz = 30e9, center_m = [0.0, 0.0], axis = [1.0, 0.0] }
ffc = { elements = 8, carrier_hz = 1.5e9, center_m = [0.0, 0.0], axis = [1.0, 0.0] }

[[world.obstacles]]
center_m = [2.0, 2.0]
size_m = [0.5, 0.5]

[task.rep]
start_m = [0.0, 2.0]
goal_m = [4.0, 2.0]
"#;

    #[test]
    fn minimal_parses_with_defaults() {
        let s = Scenario::from_toml_str(MINIMAL, "tiny").unwrap();
        let TaskSpec::Rep(r) = &s.task else { panic!() };
        assert_eq!(r.planner.horizon, 20);
        assert_eq!(r.variants.len(), 4);
        assert!(s.radio.rician_k.is_infinite());
    }

    #[test]
    fn round_trip_is_identical() {
        let s = Scenario::from_toml_str(MINIMAL, "tiny").unwrap();
        let text = s.to_toml_string();
        let again = Scenario::from_toml_str(&text, "again").unwrap();
        assert_eq!(s, again);
        assert_eq!(text, again.to_toml_string());
    }

    #[test]
    fn empty_file_is_a_parse_error() {
        assert!(matches!(Scenario::from_toml_str("", "empty"), Err(ScenarioError::Parse { .. })));
    }

    #[test]
    fn unknown_key_is_rejected_with_location() {
        let text = MINIMAL.replace("time_limit_s = 5.0", "time_limit_s = 5.0\ntime_limit = 3");
        match Scenario::from_toml_str(&text, "x") {
            Err(ScenarioError::Parse { message, .. }) => assert!(message.contains("time_limit"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_vertex_polygon_is_a_validation_error() {
        let text = MINIMAL.replace("center_m = [2.0, 2.0]\nsize_m = [0.5, 0.5]", "vertices_m = [[0.0, 0.0], [1.0, 0.0]]");
        assert!(matches!(Scenario::from_toml_str(&text, "x"), Err(ScenarioError::Validation(_))));
    }

    #[test]
    fn unknown_variant_is_a_validation_error() {
        let text = MINIMAL.replace("goal_m = [4.0, 2.0]", "goal_m = [4.0, 2.0]\nvariants = [\"REP\", \"bogus\"]");
        assert!(matches!(Scenario::from_toml_str(&text, "x"), Err(ScenarioError::Validation(_))));
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let text = MINIMAL.replace("schema_version = 1", "schema_version = 9");
        assert!(matches!(Scenario::from_toml_str(&text, "x"), Err(ScenarioError::Validation(_))));
    }
}
