//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line with
//! the measured values and its runtime; the test fails if any criterion does.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use neei_core::geometry::{Rect, Vec2};
use neei_core::geomworld::Pose;
use neei_core::nfchan::*;
use neei_core::ocn::{run_ocn, FleetTrace, OcnVariant};
use neei_core::rep::{run_variants, EpisodeTrace, RepVariant};
use neei_core::scenario::{self, oracle, parse_scenario, Scenario, TaskSpec};
use neei_core::vbf::{Frame, PowerBudget, UplinkModel, VbfBaseline, VbfProblem};
use rayon::prelude::*;

const RAYLEIGH_REL_TOL: f64 = 0.01;
const FOCUS_MARGIN_DB: f64 = 3.0;
const REP_MIN_ORDERED_SEEDS: usize = 18;
const SAFETY_DISTANCE: f64 = 0.1;
const CLEARANCE_SLACK: f64 = 1e-6;
const GREEDY_MIN_RATIO: f64 = 0.95;
const VBF_MIN_STRICT_POINTS: usize = 8;
const PMIN_REL_TOL: f64 = 1e-9;
const GEOM_MAX_DEVIATION: f64 = 1e-3;
const OCN_COUNTS: [usize; 4] = [1, 1, 2, 0];

struct Outcome {
    pass: bool,
    detail: String,
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn report(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let out = f();
    let took = t0.elapsed();
    let in_time = took <= limit;
    let pass = out.pass && in_time;
    // written to the raw handle so the lines survive output capture
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(
        stdout,
        "{} criterion {id} {name}: {} [{:.1}s, limit {}s{}]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        took.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", too slow" }
    );
    pass
}

fn rayleigh() -> Outcome {
    let rows = oracle::rayleigh();
    let expect = [2041.0, 96.2];
    let errs: Vec<f64> = rows.iter().zip(expect).map(|(r, e)| (r.rayleigh_m - e).abs() / e).collect();
    Outcome {
        pass: errs.iter().all(|e| *e <= RAYLEIGH_REL_TOL),
        detail: format!("{:.1} m and {:.2} m (rel err {:.2e}, {:.2e})", rows[0].rayleigh_m, rows[1].rayleigh_m, errs[0], errs[1]),
    }
}

/// Extent of the cells within 3 dB of the peak, as (min, max) of distance to
/// the array centre and of angle from broadside.
fn half_power_extent(map: &Heatmap, center: Vec2) -> ((f64, f64), (f64, f64)) {
    let peak = map.max_db();
    let (mut r, mut a) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
    for j in 0..map.ny {
        for i in 0..map.nx {
            if map.value(i, j) >= peak - 3.0 {
                let d = map.cell_center(i, j) - center;
                r = (r.0.min(d.norm()), r.1.max(d.norm()));
                let ang = d.x.atan2(d.y);
                a = (a.0.min(ang), a.1.max(ang));
            }
        }
    }
    (r, a)
}

fn focusing() -> Outcome {
    let nfc = ArrayGeometry::ula(640, 30e9, Vec2::ZERO, Vec2::new(1.0, 0.0)).unwrap();
    let ffc = ArrayGeometry::ula(32, 1.5e9, Vec2::ZERO, Vec2::new(1.0, 0.0)).unwrap();
    let pl = PathlossModel::new(db_to_linear(-62.0), 2.0).unwrap();
    let target = Vec2::new(0.0, 5.0);
    let h = los_channel_near(&nfc, target, &pl).unwrap();
    let focus = beam_gain(&h, &mrt_beam(&h).unwrap()).unwrap();
    let steer = beam_gain(&h, &planar_beam(&nfc, target, &pl).unwrap()).unwrap();
    let margin = linear_to_db(focus) - linear_to_db(steer);

    // beam shape only: no distance loss
    let flat = PathlossModel::new(1.0, 0.0).unwrap();
    let region = Rect::new(Vec2::new(-3.0, 1.0), Vec2::new(3.0, 15.0));
    let near_map = gain_heatmap(&nfc, &mrt_beam(&los_channel_near(&nfc, target, &flat).unwrap()).unwrap(), region, 0.05, &flat).unwrap();
    let far_map = gain_heatmap(&ffc, &planar_beam(&ffc, target, &flat).unwrap(), region, 0.05, &flat).unwrap();
    let (nr, na) = half_power_extent(&near_map, nfc.center());
    let (fr, _) = half_power_extent(&far_map, ffc.center());
    // the region spans distances 1 to 15 m along broadside
    let inside = |r: (f64, f64)| r.0 > 1.0 + 0.1 && r.1 < 15.0 - 0.1;
    let near_bounded = inside(nr) && na.1 - na.0 < 0.2;
    let far_unbounded = fr.1 >= 15.0 - 0.1;
    Outcome {
        pass: margin >= FOCUS_MARGIN_DB && near_bounded && far_unbounded,
        detail: format!(
            "focus-steer {margin:.1} dB; near -3 dB region r {:.2}-{:.2} m, angle span {:.3} rad; far region r {:.2}-{:.2} m",
            nr.0, nr.1, na.1 - na.0, fr.0, fr.1
        ),
    }
}

fn min_edge_distance(tr: &EpisodeTrace, edge: Vec2) -> f64 {
    tr.rows.iter().map(|r| Vec2::new(r.x, r.y).distance(edge)).fold(f64::INFINITY, f64::min)
}

struct Fig4 {
    per_seed: Vec<(u64, Vec<EpisodeTrace>, Duration)>,
    edge: Vec2,
}

fn fig4_runs(s: &Scenario) -> Fig4 {
    let TaskSpec::Rep(t) = &s.task else { panic!("fig4 is a rep scenario") };
    let setup = scenario::rep_setup(s, t).unwrap();
    let per_seed = s
        .seeds
        .par_iter()
        .map(|&seed| {
            let t0 = Instant::now();
            let traces = run_variants(&setup, &RepVariant::ALL, seed).unwrap();
            (seed, traces, t0.elapsed())
        })
        .collect();
    Fig4 { per_seed, edge: setup.nfc.geom.center() }
}

fn rep_ordering(runs: &Fig4) -> Outcome {
    let mut ordered = 0;
    let mut worst_clearance = f64::INFINITY;
    for (_, traces, _) in &runs.per_seed {
        let m: Vec<f64> = traces.iter().map(|t| t.mean_rate()).collect();
        ordered += (m[0] > m[1] && m[1] > m[2] && m[2] > m[3]) as usize;
        worst_clearance = traces.iter().map(|t| t.min_clearance()).fold(worst_clearance, f64::min);
    }
    Outcome {
        pass: ordered >= REP_MIN_ORDERED_SEEDS && worst_clearance >= SAFETY_DISTANCE - CLEARANCE_SLACK,
        detail: format!("rates ordered on {ordered}/{} seeds; min clearance {worst_clearance:.4} m", runs.per_seed.len()),
    }
}

fn rep_closer(runs: &Fig4) -> Outcome {
    let mut closer = 0;
    let mut worst_gap = f64::INFINITY;
    for (_, traces, _) in &runs.per_seed {
        let gap = min_edge_distance(&traces[1], runs.edge) - min_edge_distance(&traces[0], runs.edge);
        closer += (gap > 0.0) as usize;
        worst_gap = worst_gap.min(gap);
    }
    Outcome {
        pass: closer == runs.per_seed.len(),
        detail: format!("REP closer to the array on {closer}/{} seeds; smallest margin {worst_gap:.2} m", runs.per_seed.len()),
    }
}

fn vbf_oracle() -> Outcome {
    let table = oracle::vbf(12, 200, 0).unwrap();
    let s = parse_scenario(&shipped("fig5_vbf")).unwrap();
    let TaskSpec::Vbf(t) = &s.task else { panic!("fig5 is a vbf scenario") };
    let frames = scenario::frames_for(&s, None).unwrap();
    let mut strict = 0;
    let mut never_below = true;
    for &b in &t.budget_sweep_w {
        let params = scenario::vbf_params(&s, t, b).unwrap();
        let v = neei_core::vbf::run_vbf_episode(&frames, &params, VbfBaseline::Vbf).unwrap().total_score;
        let th = neei_core::vbf::run_vbf_episode(&frames, &params, VbfBaseline::NfcThroughput).unwrap().total_score;
        strict += (v > th) as usize;
        never_below &= v >= th;
    }
    Outcome {
        pass: table.aggregate_ratio() >= GREEDY_MIN_RATIO && never_below && strict >= VBF_MIN_STRICT_POINTS,
        detail: format!(
            "greedy/exact {:.4} over 200 instances (worst single {:.3}, equal on {:.0}%); VBF > throughput on {strict}/{} budgets",
            table.aggregate_ratio(),
            table.min_ratio(),
            100.0 * table.equal_fraction(),
            t.budget_sweep_w.len()
        ),
    }
}

fn vbf_min_power() -> Outcome {
    let geom = ArrayGeometry::ula(640, 30e9, Vec2::new(5.0, 4.0), Vec2::new(1.0, 0.0)).unwrap();
    let pl = PathlossModel::new(db_to_linear(-62.0), 3.0).unwrap();
    let budget = LinkBudget::from_dbm(20.0, -80.0, 10e6).unwrap();
    let frame = Frame::new(0, Pose::new(Vec2::new(1.77, -0.30), 0.0), 1.0);
    let problem = VbfProblem {
        frames: vec![frame],
        uplink: UplinkModel::near_field(geom.clone(), pl),
        budget,
        power_budget: PowerBudget::Total(1.0),
    };
    let p = problem.min_powers().unwrap()[0];
    let g = los_channel_near(&geom, Vec2::new(1.77, -0.30), &pl).unwrap().norm_sq();
    let want = (2f64.powf(1.384) - 1.0) * budget.noise_power / g;
    let rel = (p - want).abs() / want;
    Outcome { pass: rel <= PMIN_REL_TOL, detail: format!("p_min {p:.6e} W, expected {want:.6e} W (rel err {rel:.1e})") }
}

fn ocn_pattern() -> Outcome {
    let s = parse_scenario(&shipped("fig6_ocn")).unwrap();
    let TaskSpec::Ocn(t) = &s.task else { panic!("fig6 is an ocn scenario") };
    let setup = scenario::ocn_setup(&s, t).unwrap();
    let door = setup.world.dynamic[0].active_from;
    let variants = [OcnVariant::Ocn, OcnVariant::NfcAlways, OcnVariant::FfcAlways];
    let jobs: Vec<(u64, OcnVariant)> = s.seeds.iter().flat_map(|&k| variants.map(|v| (k, v))).collect();
    let traces: Vec<FleetTrace> = jobs.par_iter().map(|&(k, v)| run_ocn(&setup, v, k).unwrap()).collect();
    let mut failures = Vec::new();
    let mut totals = [0.0; 3];
    for (seed_traces, seed) in traces.chunks(3).zip(&s.seeds) {
        let ocn = &seed_traces[0];
        let counts = ocn.engagement_counts();
        if counts != OCN_COUNTS {
            failures.push(format!("seed {seed}: counts {counts:?}"));
        }
        if ocn.energy[3] != 0.0 {
            failures.push(format!("seed {seed}: robot 4 energy {}", ocn.energy[3]));
        }
        if !ocn.events.iter().filter(|e| e.robot == 2).all(|e| e.t_start > door) {
            failures.push(format!("seed {seed}: robot 2 engaged before the door moved"));
        }
        let e: Vec<f64> = seed_traces.iter().map(|t| t.total_energy()).collect();
        if !(e[0] < e[1] && e[1] < e[2]) {
            failures.push(format!("seed {seed}: fleet energy {e:?}"));
        }
        for tr in seed_traces {
            if !tr.done.iter().all(|d| *d) {
                failures.push(format!("seed {seed} {}: not all robots done", tr.variant));
            }
            if tr.min_clearance() < SAFETY_DISTANCE - CLEARANCE_SLACK {
                failures.push(format!("seed {seed} {}: clearance {:.4}", tr.variant, tr.min_clearance()));
            }
        }
        for (k, tr) in seed_traces.iter().enumerate() {
            totals[k] += tr.total_energy() / s.seeds.len() as f64;
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!(
                "counts {OCN_COUNTS:?} on all {} seeds; mean fleet energy OCN {:.2} J < NFC-always {:.2} J < FFC-always {:.2} J",
                s.seeds.len(),
                totals[0],
                totals[1],
                totals[2]
            )
        } else {
            failures.join("; ")
        },
    }
}

fn geometry_oracle() -> Outcome {
    let r = oracle::geom(100, 10_000, 0).unwrap();
    let dev = r.max_deviation();
    Outcome { pass: dev < GEOM_MAX_DEVIATION, detail: format!("max deviation {dev:.2e} m over 100 pairs") }
}

fn determinism(fastest_fig4_seed: u64) -> Outcome {
    let mut mismatched = Vec::new();
    let cases: [(&str, Option<u64>); 3] = [("fig4_rep", Some(fastest_fig4_seed)), ("fig5_vbf", None), ("fig6_ocn", Some(0))];
    for (name, seed) in cases {
        let s = parse_scenario(&shipped(name)).unwrap();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ma = scenario::run_filtered(&s, None, a.path(), seed, None).unwrap();
        let mb = scenario::run_filtered(&s, None, b.path(), seed, None).unwrap();
        let ja = std::fs::read(a.path().join(scenario::MANIFEST_FILE)).unwrap();
        let jb = std::fs::read(b.path().join(scenario::MANIFEST_FILE)).unwrap();
        if ma != mb || ja != jb {
            mismatched.push(name);
        }
    }
    Outcome {
        pass: mismatched.is_empty(),
        detail: if mismatched.is_empty() {
            format!("identical manifests on rerun (fig4 seed {fastest_fig4_seed}, fig5, fig6 seed 0)")
        } else {
            format!("manifests differ for {mismatched:?}")
        },
    }
}

#[test]
fn acceptance() {
    let secs = Duration::from_secs;
    let mut ok = Vec::new();
    ok.push(report(1, "rayleigh distance", secs(1), rayleigh));
    ok.push(report(2, "focusing vs steering", secs(10), focusing));

    let fig4 = parse_scenario(&shipped("fig4_rep")).unwrap();
    let t0 = Instant::now();
    let runs = fig4_runs(&fig4);
    let fig4_time = t0.elapsed();
    ok.push(report(3, "REP rate ordering", secs(120).saturating_sub(fig4_time), || rep_ordering(&runs)));
    ok.push(report(4, "REP passes closer to the array", secs(1), || rep_closer(&runs)));
    let _ = writeln!(std::io::stdout().lock(), "  (fig4 episodes for criteria 3 and 4 took {:.1}s)", fig4_time.as_secs_f64());

    ok.push(report(5, "VBF oracle and sweep", secs(60), vbf_oracle));
    ok.push(report(6, "VBF minimum power", secs(1), vbf_min_power));
    ok.push(report(7, "OCN engagement pattern", secs(180), ocn_pattern));
    ok.push(report(8, "geometry oracle", secs(30), geometry_oracle));

    let fastest = runs.per_seed.iter().min_by_key(|(_, _, d)| *d).map(|(k, _, _)| *k).unwrap();
    ok.push(report(9, "determinism", secs(120), || determinism(fastest)));

    let failed: Vec<usize> = ok.iter().enumerate().filter(|(_, p)| !**p).map(|(k, _)| k + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
