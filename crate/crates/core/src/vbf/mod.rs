//! View-guided uplink scheduling: choose which captured frames to upload and
//! with how much power, so that the summed view contribution is maximal under
//! a power budget while every chosen frame is delivered within its slot.

mod episode;
mod frames;
mod solve;

pub use episode::{run_vbf_episode, FrameDecision, VbfBaseline, VbfParams, VbfReport};
pub use frames::{read_frames_csv, write_frames_csv};
pub use solve::{solve, solve_branch_and_bound, solve_exact, solve_greedy, solve_throughput, BnbOutcome, EXACT_MAX_FRAMES};

use thiserror::Error;

use crate::geometry::{wrap_angle, Vec2};
use crate::geomworld::Pose;
use crate::nfchan::{ArrayGeometry, LinkBudget, NfError, PathlossModel};
use crate::rep::BeamModel;

/// 1.73 MB image payload in bits.
pub const DEFAULT_PAYLOAD_BITS: f64 = 13_840_000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VbfError {
    #[error("frame {0} has zero uplink gain")]
    ZeroGain(u32),
    #[error("exact solver supports at most {max} frames, got {got}")]
    TooManyFramesForExact { got: usize, max: usize },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Channel(#[from] NfError),
}

/// A candidate upload.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub id: u32,
    pub pose: Pose,
    pub payload_bits: f64,
    /// View contribution.
    pub score: f64,
    pub slot_duration: f64,
}

impl Frame {
    pub fn new(id: u32, pose: Pose, score: f64) -> Self {
        Self { id, pose, payload_bits: DEFAULT_PAYLOAD_BITS, score, slot_duration: 1.0 }
    }

    /// Spectral efficiency (b/s/Hz) needed to deliver the payload in one slot.
    pub fn required_efficiency(&self, bandwidth: f64) -> f64 {
        self.payload_bits / (bandwidth * self.slot_duration)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerBudget {
    /// Sum of powers over all selected frames.
    Total(f64),
    /// Independent cap on every frame.
    PerFrame(f64),
}

impl PowerBudget {
    pub fn limit(&self) -> f64 {
        match *self {
            Self::Total(p) | Self::PerFrame(p) => p,
        }
    }
}

/// Uplink from robot poses to the edge array.
#[derive(Debug, Clone, PartialEq)]
pub struct UplinkModel {
    pub geom: ArrayGeometry,
    pub pl: PathlossModel,
    /// Combiner design at the edge.
    pub beam: BeamModel,
}

impl UplinkModel {
    pub fn near_field(geom: ArrayGeometry, pl: PathlossModel) -> Self {
        Self { geom, pl, beam: BeamModel::NearField }
    }

    /// Effective combining gain for a robot at `position`.
    pub fn gain(&self, position: Vec2) -> Result<f64, NfError> {
        use crate::nfchan::{beam_gain, focused_gain, los_channel_near, planar_beam};
        match self.beam {
            BeamModel::NearField => {
                // MRC on the exact channel; built explicitly to surface coincident targets
                los_channel_near(&self.geom, position, &self.pl)?;
                Ok(focused_gain(&self.geom, position, &self.pl))
            }
            BeamModel::Planar => {
                let h = los_channel_near(&self.geom, position, &self.pl)?;
                beam_gain(&h, &planar_beam(&self.geom, position, &self.pl)?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VbfProblem {
    pub frames: Vec<Frame>,
    pub uplink: UplinkModel,
    pub budget: LinkBudget,
    pub power_budget: PowerBudget,
}

impl VbfProblem {
    pub fn validate(&self) -> Result<(), VbfError> {
        if self.frames.is_empty() {
            return Err(VbfError::InvalidProblem("no frames".into()));
        }
        for f in &self.frames {
            if !(f.payload_bits > 0.0 && f.slot_duration > 0.0 && f.score.is_finite() && f.score >= 0.0) {
                return Err(VbfError::InvalidProblem(format!("frame {} has invalid payload, slot or score", f.id)));
            }
        }
        let mut ids: Vec<u32> = self.frames.iter().map(|f| f.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(VbfError::InvalidProblem("duplicate frame ids".into()));
        }
        if !(self.power_budget.limit() >= 0.0) {
            return Err(VbfError::InvalidProblem("power budget must be >= 0".into()));
        }
        Ok(())
    }

    /// Minimum delivery power of every frame, in frame order.
    pub fn min_powers(&self) -> Result<Vec<f64>, VbfError> {
        self.frames
            .iter()
            .map(|f| {
                let g = self.uplink.gain(f.pose.position)?;
                min_power_for_gain(f, g, &self.budget)
            })
            .collect()
    }
}

/// Selected frames (ascending id) with their powers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VbfSolution {
    pub selected: Vec<u32>,
    pub powers: Vec<f64>,
    pub total_score: f64,
    pub total_power: f64,
}

impl VbfSolution {
    pub fn is_selected(&self, id: u32) -> bool {
        self.selected.binary_search(&id).is_ok()
    }
}

/// `1 - exp(-min_k(|dp_k| / length_scale + |dtheta_k| / angle_scale))` over the
/// training poses: 0 for an already-seen view, approaching 1 for novel ones.
pub fn frame_score_proxy(pose: Pose, training: &[Pose], length_scale: f64, angle_scale: f64) -> f64 {
    let novelty = training
        .iter()
        .map(|t| {
            pose.position.distance(t.position) / length_scale + wrap_angle(pose.heading - t.heading).abs() / angle_scale
        })
        .fold(f64::INFINITY, f64::min);
    if novelty.is_infinite() {
        return 1.0;
    }
    1.0 - (-novelty).exp()
}

/// `sigma^2 / g * (2^(S / (B T)) - 1)`.
pub fn min_power_for_gain(frame: &Frame, gain: f64, budget: &LinkBudget) -> Result<f64, VbfError> {
    if !(gain > 0.0 && gain.is_finite()) {
        return Err(VbfError::ZeroGain(frame.id));
    }
    let snr_min = frame.required_efficiency(budget.bandwidth).exp2() - 1.0;
    Ok(budget.noise_power / gain * snr_min)
}

/// Minimum uplink power delivering the frame in its slot with near-field MRC.
pub fn min_power(frame: &Frame, geom: &ArrayGeometry, pl: &PathlossModel, budget: &LinkBudget) -> Result<f64, VbfError> {
    let g = UplinkModel::near_field(geom.clone(), *pl).gain(frame.pose.position)?;
    min_power_for_gain(frame, g, budget)
}

/// Whether power `p` delivers the frame within its slot.
pub fn delivers(frame: &Frame, gain: f64, p: f64, budget: &LinkBudget) -> bool {
    let bits = budget.bandwidth * frame.slot_duration * (1.0 + p * gain / budget.noise_power).log2();
    bits >= frame.payload_bits * (1.0 - 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfchan::focused_gain;

    fn geom() -> ArrayGeometry {
        ArrayGeometry::ula(640, 30e9, Vec2::new(5.0, 4.0), Vec2::new(1.0, 0.0)).unwrap()
    }

    #[test]
    fn proxy_values() {
        let train = [Pose::new(Vec2::new(1.0, 1.0), 0.3), Pose::new(Vec2::new(4.0, 0.0), -1.0)];
        assert_eq!(frame_score_proxy(train[1], &train, 1.0, 0.5), 0.0);
        let far = Pose::new(Vec2::new(1e300, 0.0), 0.0);
        assert_eq!(frame_score_proxy(far, &train, 1.0, 0.5), 1.0);
        let one_scale = Pose::new(Vec2::new(1.0, 2.5), 0.3);
        let s = frame_score_proxy(one_scale, &train, 1.5, 0.5);
        assert!((s - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!((s - 0.6321).abs() < 1e-4);
    }

    #[test]
    fn unit_efficiency_needs_noise_over_gain() {
        let f = Frame { payload_bits: 1e6, slot_duration: 1.0, ..Frame::new(0, Pose::new(Vec2::new(5.0, 1.0), 0.0), 1.0) };
        let budget = LinkBudget::from_dbm(20.0, -80.0, 1e6).unwrap();
        let pl = PathlossModel::new(1e-6, 3.0).unwrap();
        let g = focused_gain(&geom(), f.pose.position, &pl);
        let p = min_power(&f, &geom(), &pl, &budget).unwrap();
        assert!((p - budget.noise_power / g).abs() / p < 1e-12);
    }

    #[test]
    fn image_frame_min_power() {
        let f = Frame::new(0, Pose::new(Vec2::new(1.77, -0.3), 0.0), 1.0);
        let budget = LinkBudget::from_dbm(20.0, -80.0, 10e6).unwrap();
        assert!((f.required_efficiency(10e6) - 1.384).abs() < 1e-12);
        let pl = PathlossModel::new(1e-6, 3.0).unwrap();
        let g = focused_gain(&geom(), f.pose.position, &pl);
        let p = min_power(&f, &geom(), &pl, &budget).unwrap();
        let snr_min = 2f64.powf(1.384) - 1.0;
        assert!((snr_min - 1.60991).abs() < 1e-5);
        assert!((p - snr_min * budget.noise_power / g).abs() / p < 1e-12);
        assert!(delivers(&f, g, p, &budget));
        assert!(!delivers(&f, g, p * 0.999, &budget));
    }

    #[test]
    fn doubling_distance_costs_eight_times_power() {
        let pl = PathlossModel::new(1e-6, 3.0).unwrap();
        let budget = LinkBudget::from_dbm(20.0, -80.0, 10e6).unwrap();
        // broadside, far relative to the aperture
        let near = Frame::new(0, Pose::new(Vec2::new(5.0, 4.0 - 40.0), 0.0), 1.0);
        let far = Frame::new(1, Pose::new(Vec2::new(5.0, 4.0 - 80.0), 0.0), 1.0);
        let ratio = min_power(&far, &geom(), &pl, &budget).unwrap() / min_power(&near, &geom(), &pl, &budget).unwrap();
        assert!((ratio - 8.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn zero_gain_rejected() {
        let f = Frame::new(3, Pose::new(Vec2::ZERO, 0.0), 1.0);
        let budget = LinkBudget::from_dbm(20.0, -80.0, 10e6).unwrap();
        assert_eq!(min_power_for_gain(&f, 0.0, &budget), Err(VbfError::ZeroGain(3)));
    }

    #[test]
    fn planar_combiner_needs_more_power_in_near_field() {
        let pl = PathlossModel::new(1e-6, 3.0).unwrap();
        let near = UplinkModel::near_field(geom(), pl);
        let planar = UplinkModel { beam: BeamModel::Planar, ..near.clone() };
        for p in [Vec2::new(1.77, -0.3), Vec2::new(3.0, 2.0), Vec2::new(7.0, 1.0)] {
            assert!(near.gain(p).unwrap() > planar.gain(p).unwrap());
        }
    }
}
