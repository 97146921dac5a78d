use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::build::{self, BeamChoice};
use super::{Scenario, ScenarioError, TaskSpec};
use crate::geometry::Vec2;
use crate::output::{fmt_f64, sha256_hex};
use crate::rep::run_variants;
use crate::vbf::{run_vbf_episode, write_frames_csv};

pub const TOOL_NAME: &str = "neei";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// What a run produced. Holds no timestamps or host details, so two runs of
/// the same scenario and seeds give the same manifest byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub scenario_name: String,
    pub task: String,
    /// SHA-256 of the canonical scenario text below.
    pub scenario_sha256: String,
    /// The scenario with every default filled in.
    pub scenario_toml: String,
    pub seeds: Vec<u64>,
    pub variants: Vec<String>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn file(&self, path: &str) -> Option<&FileEntry> {
        self.files.iter().find(|f| f.path == path)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

type Output = (String, Vec<u8>);

fn csv<F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>>(path: String, f: F) -> Output {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    (path, buf)
}

/// Variant names as they appear in file names.
fn slug(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' }).collect()
}

/// Runs every seed and variant of the scenario. Relative paths inside the
/// scenario (a frames file) resolve against `base_dir`.
pub fn run(s: &Scenario, base_dir: Option<&Path>, out_dir: &Path) -> Result<RunManifest, ScenarioError> {
    run_filtered(s, base_dir, out_dir, None, None)
}

/// Like [`run`], restricted to one seed and/or one variant.
pub fn run_filtered(
    s: &Scenario,
    base_dir: Option<&Path>,
    out_dir: &Path,
    seed: Option<u64>,
    variant: Option<&str>,
) -> Result<RunManifest, ScenarioError> {
    s.validate()?;
    let seeds = seed.map_or_else(|| s.seeds.clone(), |k| vec![k]);
    let pick = |all: Vec<String>| -> Result<Vec<String>, ScenarioError> {
        match variant {
            None => Ok(all),
            Some(v) => all
                .into_iter()
                .find(|n| n.eq_ignore_ascii_case(v))
                .map(|n| vec![n])
                .ok_or_else(|| ScenarioError::Validation(format!("variant '{v}' is not part of this scenario"))),
        }
    };
    let (variants, outputs) = match &s.task {
        TaskSpec::Rep(t) => {
            let names = pick(build::rep_variants(t)?.iter().map(|v| v.name().to_string()).collect())?;
            (names.clone(), rep_outputs(s, &seeds, &names)?)
        }
        TaskSpec::Vbf(t) => {
            let names = pick(build::vbf_variants(t)?.iter().map(|v| v.name().to_string()).collect())?;
            (names.clone(), vbf_outputs(s, base_dir, &names)?)
        }
        TaskSpec::Ocn(t) => {
            let names = pick(build::ocn_variants(t)?.iter().map(|v| v.name().to_string()).collect())?;
            (names.clone(), ocn_outputs(s, &seeds, &names)?)
        }
    };

    let scenario_toml = s.to_toml_string();
    let mut files: Vec<FileEntry> = outputs
        .iter()
        .map(|(path, bytes)| FileEntry { path: path.clone(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 })
        .collect();
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = RunManifest {
        tool: TOOL_NAME.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        scenario_name: s.name.clone(),
        task: s.task.kind().into(),
        scenario_sha256: sha256_hex(scenario_toml.as_bytes()),
        scenario_toml,
        seeds,
        variants,
        files,
    };

    let mut written = Vec::new();
    let result = write_all(out_dir, &outputs, &manifest, &mut written);
    if result.is_err() {
        for p in written.iter().rev() {
            let _ = fs::remove_file(p);
        }
    }
    result.map(|()| manifest)
}

fn write_all(out_dir: &Path, outputs: &[Output], manifest: &RunManifest, written: &mut Vec<PathBuf>) -> Result<(), ScenarioError> {
    let put = |rel: &str, bytes: &[u8], written: &mut Vec<PathBuf>| -> Result<(), ScenarioError> {
        let path = out_dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| ScenarioError::io(parent, e))?;
        }
        let mut f = fs::File::create(&path).map_err(|e| ScenarioError::io(&path, e))?;
        written.push(path.clone());
        f.write_all(bytes).map_err(|e| ScenarioError::io(&path, e))
    };
    for (rel, bytes) in outputs {
        put(rel, bytes, written)?;
    }
    put(MANIFEST_FILE, manifest.to_json().as_bytes(), written)
}

fn rep_outputs(s: &Scenario, seeds: &[u64], names: &[String]) -> Result<Vec<Output>, ScenarioError> {
    let TaskSpec::Rep(t) = &s.task else { unreachable!() };
    let setup = build::rep_setup(s, t)?;
    let variants: Vec<_> = names.iter().map(|n| n.parse().expect("validated")).collect();
    let edge = setup.nfc.geom.center();
    let per_seed: Vec<_> =
        seeds.par_iter().map(|&seed| run_variants(&setup, &variants, seed)).collect::<Result<_, _>>()?;

    let mut out = Vec::new();
    let mut summary = String::from("seed,variant,mean_rate_bps,min_clearance_m,min_edge_distance_m,reached_goal,duration_s\n");
    for traces in &per_seed {
        for tr in traces {
            out.push(csv(format!("rep/seed{}_{}.csv", tr.seed, slug(tr.variant.name())), |w| tr.write_csv(w)));
            let min_edge =
                tr.rows.iter().map(|r| Vec2::new(r.x, r.y).distance(edge)).fold(f64::INFINITY, f64::min);
            summary.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                tr.seed,
                tr.variant.name(),
                fmt_f64(tr.mean_rate()),
                fmt_f64(tr.min_clearance()),
                fmt_f64(min_edge),
                tr.reached_goal as u8,
                fmt_f64(tr.rows.last().map_or(0.0, |r| r.t)),
            ));
        }
    }
    out.push(("rep/summary.csv".into(), summary.into_bytes()));
    Ok(out)
}

fn vbf_outputs(s: &Scenario, base_dir: Option<&Path>, names: &[String]) -> Result<Vec<Output>, ScenarioError> {
    let TaskSpec::Vbf(t) = &s.task else { unreachable!() };
    let frames = build::frames_for(s, base_dir)?;
    let baselines: Vec<_> = names.iter().map(|n| n.parse().expect("validated")).collect();
    let jobs: Vec<(usize, _)> =
        (0..t.budget_sweep_w.len()).flat_map(|k| baselines.iter().map(move |&b| (k, b))).collect();
    let reports = jobs
        .par_iter()
        .map(|&(k, b)| {
            let params = build::vbf_params(s, t, t.budget_sweep_w[k])?;
            Ok::<_, ScenarioError>((k, run_vbf_episode(&frames, &params, b)?))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = vec![csv("vbf/frames.csv".into(), |w| write_frames_csv(&frames, w))];
    let mut summary = String::from("budget_index,budget_w,baseline,total_score,frames_delivered,power_used_w\n");
    for (k, r) in &reports {
        out.push(csv(format!("vbf/budget{k:02}_{}.csv", slug(r.baseline.name())), |w| r.write_csv(w)));
        summary.push_str(&format!(
            "{k},{},{},{},{},{}\n",
            fmt_f64(t.budget_sweep_w[*k]),
            r.baseline.name(),
            fmt_f64(r.total_score),
            r.frames_delivered,
            fmt_f64(r.power_used)
        ));
    }
    out.push(("vbf/summary.csv".into(), summary.into_bytes()));

    if let Some(p) = t.heatmap_pose_m {
        let maps = BeamChoice::ALL
            .par_iter()
            .map(|&b| Ok::<_, ScenarioError>((b, build::heatmap_for(s, Vec2::new(p[0], p[1]), b)?)))
            .collect::<Result<Vec<_>, _>>()?;
        for (b, m) in maps {
            out.push(csv(format!("vbf/heatmap_{}.txt", slug(b.name())), |w| m.write_to(w)));
        }
    }
    Ok(out)
}

fn ocn_outputs(s: &Scenario, seeds: &[u64], names: &[String]) -> Result<Vec<Output>, ScenarioError> {
    let TaskSpec::Ocn(t) = &s.task else { unreachable!() };
    let setup = build::ocn_setup(s, t)?;
    let variants: Vec<crate::ocn::OcnVariant> = names.iter().map(|n| n.parse().expect("validated")).collect();
    let jobs: Vec<_> = seeds.iter().flat_map(|&seed| variants.iter().map(move |&v| (seed, v))).collect();
    let traces = jobs
        .par_iter()
        .map(|&(seed, v)| crate::ocn::run_ocn(&setup, v, seed))
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = Vec::new();
    let mut summary = String::from("seed,variant,robot_id,engagements,energy_j,reached_goal\n");
    for tr in &traces {
        let stem = format!("ocn/seed{}_{}", tr.seed, slug(tr.variant.name()));
        out.push(csv(format!("{stem}_trace.csv"), |w| tr.write_csv(w)));
        out.push(csv(format!("{stem}_engagements.csv"), |w| tr.write_events(w)));
        out.push(csv(format!("{stem}_decisions.csv"), |w| tr.write_decisions(w)));
        let counts = tr.engagement_counts();
        for (k, id) in tr.robot_ids.iter().enumerate() {
            summary.push_str(&format!(
                "{},{},{id},{},{},{}\n",
                tr.seed,
                tr.variant.name(),
                counts[k],
                fmt_f64(tr.energy[k]),
                tr.done[k] as u8
            ));
        }
    }
    out.push(("ocn/summary.csv".into(), summary.into_bytes()));
    Ok(out)
}
