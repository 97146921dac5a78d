use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use neei_core::geometry::Vec2;
use neei_core::nfchan::ArrayGeometry;
use neei_core::scenario::{self, oracle, parse_scenario, BeamChoice, ScenarioError};

/// Near-field embodied edge intelligence scenarios.
#[derive(Parser)]
#[command(name = "neei", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every seed and variant of a scenario.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Run only this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Run only this variant.
        #[arg(long)]
        variant: Option<String>,
    },
    /// Write the beam gain map for a robot position.
    Heatmap {
        #[arg(long)]
        scenario: PathBuf,
        /// Robot position as `x,y` in metres.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_pose)]
        pose: Vec2,
        #[arg(long)]
        out: PathBuf,
        /// vbf, ffc or nfc-planar.
        #[arg(long, default_value = "vbf")]
        beam: BeamChoice,
    },
    /// Brute-force cross-checks.
    Oracle {
        #[command(subcommand)]
        sub: OracleCmd,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Greedy selection against full enumeration.
    Vbf {
        #[arg(long, default_value_t = 10)]
        frames: usize,
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Polygon distance against boundary sampling.
    Geom {
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rayleigh distance of the reference arrays.
    Rayleigh,
    /// Planar-model phase error along broadside.
    Farfield {
        #[arg(long, default_value_t = 640)]
        elements: usize,
        #[arg(long, default_value_t = 30e9)]
        carrier_hz: f64,
        #[arg(long, default_value_t = 0.5)]
        d_min: f64,
        #[arg(long, default_value_t = 5000.0)]
        d_max: f64,
        #[arg(long, default_value_t = 25)]
        points: usize,
    },
}

fn parse_pose(s: &str) -> Result<Vec2, String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v}: {e}"));
    Ok(Vec2::new(num(x)?, num(y)?))
}

fn exit_code(e: &ScenarioError) -> u8 {
    match e {
        ScenarioError::Parse { .. } | ScenarioError::Validation(_) => 2,
        ScenarioError::Infeasible(_) => 3,
        _ => 1,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ScenarioError> {
    std::fs::write(path, bytes).map_err(|e| ScenarioError::io(path, e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("NEEI_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn execute(cmd: Cmd) -> Result<(), ScenarioError> {
    match cmd {
        Cmd::Run { scenario: path, out, seed, variant } => {
            let s = parse_scenario(&path)?;
            let manifest = scenario::run_filtered(&s, path.parent(), &out, seed, variant.as_deref())?;
            println!("{}: {} files written to {}", manifest.scenario_name, manifest.files.len() + 1, out.display());
        }
        Cmd::Heatmap { scenario: path, pose, out, beam } => {
            let s = parse_scenario(&path)?;
            let map = scenario::heatmap_for(&s, pose, beam)?;
            let mut buf = Vec::new();
            map.write_to(&mut buf).map_err(|e| ScenarioError::io(&out, e))?;
            write_file(&out, &buf)?;
        }
        Cmd::Oracle { sub } => {
            let table = match sub {
                OracleCmd::Vbf { frames, instances, seed } => oracle::vbf(frames, instances, seed)?.table(),
                OracleCmd::Geom { pairs, samples, seed } => oracle::geom(pairs, samples, seed)?.table(),
                OracleCmd::Rayleigh => oracle::rayleigh_table(&oracle::rayleigh()),
                OracleCmd::Farfield { elements, carrier_hz, d_min, d_max, points } => {
                    let g = ArrayGeometry::ula(elements, carrier_hz, Vec2::ZERO, Vec2::new(1.0, 0.0))?;
                    oracle::farfield_table(&oracle::farfield(&g, d_min, d_max, points)?)
                }
            };
            print!("{table}");
        }
    }
    Ok(())
}
