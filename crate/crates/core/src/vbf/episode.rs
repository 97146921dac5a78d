use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use super::solve::{solve, solve_throughput};
use super::{Frame, PowerBudget, UplinkModel, VbfError, VbfProblem};
use crate::nfchan::{ArrayGeometry, LinkBudget, PathlossModel};
use crate::output::fmt_f64;
use crate::rep::BeamModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VbfBaseline {
    /// Score-aware selection, near-field combining.
    Vbf,
    /// Most frames under the budget, near-field combining.
    NfcThroughput,
    /// Score-aware selection through the small planar-combining array.
    Ffc,
    /// Score-aware selection through the large array with planar combining.
    NfcPlanar,
}

impl VbfBaseline {
    pub const ALL: [VbfBaseline; 4] = [Self::Vbf, Self::NfcThroughput, Self::Ffc, Self::NfcPlanar];

    pub fn name(self) -> &'static str {
        match self {
            Self::Vbf => "VBF",
            Self::NfcThroughput => "NFC-throughput",
            Self::Ffc => "FFC",
            Self::NfcPlanar => "NFC-Planar",
        }
    }
}

impl fmt::Display for VbfBaseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VbfBaseline {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "vbf" => Ok(Self::Vbf),
            "nfc-throughput" | "nfc" => Ok(Self::NfcThroughput),
            "ffc" => Ok(Self::Ffc),
            "nfc-planar" => Ok(Self::NfcPlanar),
            other => Err(format!("unknown VBF baseline '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VbfParams {
    pub nfc: ArrayGeometry,
    pub ffc: ArrayGeometry,
    pub pl: PathlossModel,
    pub budget: LinkBudget,
    pub power_budget: PowerBudget,
}

impl VbfParams {
    pub fn problem(&self, frames: &[Frame], baseline: VbfBaseline) -> VbfProblem {
        let (geom, beam) = match baseline {
            VbfBaseline::Vbf | VbfBaseline::NfcThroughput => (&self.nfc, BeamModel::NearField),
            VbfBaseline::Ffc => (&self.ffc, BeamModel::Planar),
            VbfBaseline::NfcPlanar => (&self.nfc, BeamModel::Planar),
        };
        VbfProblem {
            frames: frames.to_vec(),
            uplink: UplinkModel { geom: geom.clone(), pl: self.pl, beam },
            budget: self.budget,
            power_budget: self.power_budget,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameDecision {
    pub frame_id: u32,
    pub selected: bool,
    pub p_min_w: f64,
    /// Allocated power; 0 when not selected.
    pub power_w: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VbfReport {
    pub baseline: VbfBaseline,
    pub total_score: f64,
    pub frames_delivered: usize,
    pub power_used: f64,
    pub decisions: Vec<FrameDecision>,
}

impl VbfReport {
    pub const CSV_HEADER: &'static str = "frame_id,selected,p_min_w,score,power_w,baseline";

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for d in &self.decisions {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                d.frame_id,
                d.selected as u8,
                fmt_f64(d.p_min_w),
                fmt_f64(d.score),
                fmt_f64(d.power_w),
                self.baseline.name()
            )?;
        }
        Ok(())
    }
}

/// Selects frames from a trajectory for one baseline and reports the outcome.
pub fn run_vbf_episode(frames: &[Frame], params: &VbfParams, baseline: VbfBaseline) -> Result<VbfReport, VbfError> {
    let problem = params.problem(frames, baseline);
    let p_min = problem.min_powers()?;
    let sol = match baseline {
        VbfBaseline::NfcThroughput => solve_throughput(&problem)?,
        _ => solve(&problem)?,
    };
    let decisions = frames
        .iter()
        .zip(&p_min)
        .map(|(f, &p)| {
            let selected = sol.is_selected(f.id);
            FrameDecision { frame_id: f.id, selected, p_min_w: p, power_w: if selected { p } else { 0.0 }, score: f.score }
        })
        .collect();
    Ok(VbfReport {
        baseline,
        total_score: sol.total_score,
        frames_delivered: sol.selected.len(),
        power_used: sol.total_power,
        decisions,
    })
}
