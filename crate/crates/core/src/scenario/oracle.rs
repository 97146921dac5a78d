//! Brute-force cross-checks of the fast solvers, reported as tables.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ScenarioError;
use crate::geometry::{point_segment_distance, Vec2};
use crate::geomworld::{min_distance, ConvexPolygon, Pose};
use crate::nfchan::{
    beam_gain, focused_gain, linear_to_db, los_channel_near, planar_beam, planar_phase_error, rayleigh_distance,
    ArrayGeometry, LinkBudget, PathlossModel,
};
use crate::output::fmt_f64;
use crate::vbf::{solve_exact, solve_greedy, Frame, PowerBudget, UplinkModel, VbfProblem, EXACT_MAX_FRAMES};

fn too_large(what: String) -> ScenarioError {
    ScenarioError::Validation(format!("instance too large: {what}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VbfOracleRow {
    pub instance: usize,
    pub frames: usize,
    pub exact_score: f64,
    pub greedy_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VbfOracleReport {
    pub rows: Vec<VbfOracleRow>,
}

impl VbfOracleReport {
    /// Worst greedy/exact score ratio (1 when exact is 0).
    pub fn min_ratio(&self) -> f64 {
        self.rows.iter().map(Self::ratio).fold(1.0, f64::min)
    }

    /// Summed greedy score over summed exact score.
    pub fn aggregate_ratio(&self) -> f64 {
        let exact: f64 = self.rows.iter().map(|r| r.exact_score).sum();
        let greedy: f64 = self.rows.iter().map(|r| r.greedy_score).sum();
        if exact > 0.0 { greedy / exact } else { 1.0 }
    }

    pub fn equal_fraction(&self) -> f64 {
        let eq = self.rows.iter().filter(|r| (r.exact_score - r.greedy_score).abs() <= 1e-12 * r.exact_score.max(1.0)).count();
        eq as f64 / self.rows.len().max(1) as f64
    }

    fn ratio(r: &VbfOracleRow) -> f64 {
        if r.exact_score > 0.0 { r.greedy_score / r.exact_score } else { 1.0 }
    }

    pub fn table(&self) -> String {
        let mut s = String::from("instance,frames,exact_score,greedy_score,ratio\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{}", r.instance, r.frames, fmt_f64(r.exact_score), fmt_f64(r.greedy_score), fmt_f64(Self::ratio(r)));
        }
        let _ = writeln!(
            s,
            "# aggregate_ratio {} min_ratio {} equal_fraction {}",
            fmt_f64(self.aggregate_ratio()),
            fmt_f64(self.min_ratio()),
            fmt_f64(self.equal_fraction())
        );
        s
    }
}

/// A random selection problem with up to `max_frames` frames scattered in
/// front of a 64-element array, with a budget that covers roughly a third of
/// the total minimum power.
pub fn random_vbf_problem(rng: &mut impl Rng, max_frames: usize) -> VbfProblem {
    let geom = ArrayGeometry::ula(64, 30e9, Vec2::ZERO, Vec2::new(1.0, 0.0)).expect("fixed array");
    let pl = PathlossModel::new(1e-6, 2.0).expect("fixed pathloss");
    let budget = LinkBudget::from_dbm(20.0, -80.0, 10e6).expect("fixed budget");
    let n = rng.random_range(1..=max_frames);
    let frames: Vec<Frame> = (0..n)
        .map(|k| {
            let p = Vec2::new(rng.random_range(-4.0..4.0), rng.random_range(0.5..6.0));
            let mut f = Frame::new(k as u32, Pose::new(p, 0.0), rng.random_range(0.0..1.0));
            f.payload_bits = rng.random_range(2e6..2e7);
            f
        })
        .collect();
    let mut problem = VbfProblem {
        frames,
        uplink: UplinkModel::near_field(geom, pl),
        budget,
        power_budget: PowerBudget::Total(0.0),
    };
    let total: f64 = problem.min_powers().expect("frames away from the array").iter().sum();
    problem.power_budget = PowerBudget::Total(total * rng.random_range(0.1..0.6));
    problem
}

/// Greedy against full enumeration on `instances` random problems of at most
/// `max_frames` frames.
pub fn vbf(max_frames: usize, instances: usize, seed: u64) -> Result<VbfOracleReport, ScenarioError> {
    if max_frames == 0 || max_frames > EXACT_MAX_FRAMES {
        return Err(too_large(format!("{max_frames} frames, enumeration supports 1..={EXACT_MAX_FRAMES}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(instances);
    for instance in 0..instances {
        let p = random_vbf_problem(&mut rng, max_frames);
        rows.push(VbfOracleRow {
            instance,
            frames: p.frames.len(),
            exact_score: solve_exact(&p)?.total_score,
            greedy_score: solve_greedy(&p)?.total_score,
        });
    }
    Ok(VbfOracleReport { rows })
}

/// Random convex polygon: 3 to 8 points on a circle, in angle order.
pub fn random_convex_polygon(rng: &mut impl Rng) -> ConvexPolygon {
    loop {
        let c = Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let r = rng.random_range(0.2..1.5);
        let k = rng.random_range(3..=8);
        let mut angles: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        angles.sort_by(f64::total_cmp);
        if let Ok(p) = ConvexPolygon::new(angles.iter().map(|&a| c + Vec2::from_angle(a) * r).collect()) {
            return p;
        }
    }
}

/// `n` points spread evenly by arc length along the closed boundary.
fn sample_boundary(p: &ConvexPolygon, n: usize) -> Vec<Vec2> {
    let v = p.vertices();
    let edges: Vec<(Vec2, Vec2)> = (0..v.len()).map(|i| (v[i], v[(i + 1) % v.len()])).collect();
    let perimeter: f64 = edges.iter().map(|(a, b)| a.distance(*b)).sum();
    let mut out = Vec::with_capacity(n);
    let (mut e, mut base) = (0, 0.0);
    for k in 0..n {
        let s = perimeter * k as f64 / n as f64;
        while s > base + edges[e].0.distance(edges[e].1) && e + 1 < edges.len() {
            base += edges[e].0.distance(edges[e].1);
            e += 1;
        }
        let (a, b) = edges[e];
        out.push(a + (b - a) * ((s - base) / a.distance(b)).min(1.0));
    }
    out
}

/// Distance estimated from boundary samples: each sample of one polygon is
/// measured against the edges of the other. Nested polygons count as 0.
pub fn sampled_distance(a: &ConvexPolygon, b: &ConvexPolygon, samples: usize) -> f64 {
    if a.contains_point(b.vertices()[0]) || b.contains_point(a.vertices()[0]) {
        return 0.0;
    }
    let one_way = |p: &ConvexPolygon, q: &ConvexPolygon| {
        let qv = q.vertices();
        sample_boundary(p, samples)
            .into_iter()
            .map(|s| (0..qv.len()).map(|i| point_segment_distance(s, qv[i], qv[(i + 1) % qv.len()])).fold(f64::INFINITY, f64::min))
            .fold(f64::INFINITY, f64::min)
    };
    one_way(a, b).min(one_way(b, a))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeomOracleRow {
    pub pair: usize,
    pub exact: f64,
    pub sampled: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeomOracleReport {
    pub samples: usize,
    pub rows: Vec<GeomOracleRow>,
}

impl GeomOracleReport {
    pub fn max_deviation(&self) -> f64 {
        self.rows.iter().map(|r| (r.exact - r.sampled).abs()).fold(0.0, f64::max)
    }

    pub fn table(&self) -> String {
        let mut s = String::from("pair,min_distance,sampled,deviation\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.pair, fmt_f64(r.exact), fmt_f64(r.sampled), fmt_f64((r.exact - r.sampled).abs()));
        }
        let _ = writeln!(s, "# samples {} max_deviation {}", self.samples, fmt_f64(self.max_deviation()));
        s
    }
}

pub fn geom(pairs: usize, samples: usize, seed: u64) -> Result<GeomOracleReport, ScenarioError> {
    if samples == 0 || samples > 1_000_000 || pairs > 100_000 {
        return Err(too_large(format!("{pairs} pairs with {samples} samples")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..pairs)
        .map(|pair| {
            let a = random_convex_polygon(&mut rng);
            let b = random_convex_polygon(&mut rng);
            GeomOracleRow { pair, exact: min_distance(&a, &b), sampled: sampled_distance(&a, &b, samples) }
        })
        .collect();
    Ok(GeomOracleReport { samples, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayleighRow {
    pub elements: usize,
    pub carrier_hz: f64,
    pub aperture_m: f64,
    pub wavelength_m: f64,
    pub rayleigh_m: f64,
}

/// Rayleigh distance of the two reference arrays (half-wavelength spacing).
pub fn rayleigh() -> Vec<RayleighRow> {
    [(640, 30e9), (32, 1.5e9)]
        .into_iter()
        .map(|(n, f)| {
            let g = ArrayGeometry::ula(n, f, Vec2::ZERO, Vec2::new(1.0, 0.0)).expect("fixed array");
            RayleighRow { elements: n, carrier_hz: f, aperture_m: g.aperture(), wavelength_m: g.wavelength(), rayleigh_m: rayleigh_distance(&g) }
        })
        .collect()
}

pub fn rayleigh_table(rows: &[RayleighRow]) -> String {
    let mut s = String::from("elements,carrier_hz,aperture_m,wavelength_m,rayleigh_m\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.elements, fmt_f64(r.carrier_hz), fmt_f64(r.aperture_m), fmt_f64(r.wavelength_m), fmt_f64(r.rayleigh_m));
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldRow {
    pub distance_m: f64,
    pub max_phase_error_rad: f64,
    /// Gain lost by steering with the planar model instead of focusing.
    pub planar_loss_db: f64,
}

/// Planar-model error along broadside of an array, from `d_min` to `d_max`
/// on a log scale.
pub fn farfield(geom: &ArrayGeometry, d_min: f64, d_max: f64, points: usize) -> Result<Vec<FarFieldRow>, ScenarioError> {
    if points < 2 || points > 10_000 {
        return Err(too_large(format!("{points} sweep points")));
    }
    if !(d_min > 0.0 && d_max > d_min) {
        return Err(ScenarioError::Validation("far-field sweep needs 0 < d_min < d_max".into()));
    }
    let pl = PathlossModel::new(1.0, 2.0)?;
    let broadside = geom.axis().perp();
    (0..points)
        .map(|k| {
            let d = d_min * (d_max / d_min).powf(k as f64 / (points - 1) as f64);
            let p = geom.center() + broadside * d;
            let planar = beam_gain(&los_channel_near(geom, p, &pl)?, &planar_beam(geom, p, &pl)?)?;
            Ok(FarFieldRow {
                distance_m: d,
                max_phase_error_rad: planar_phase_error(geom, p).into_iter().fold(0.0, f64::max),
                planar_loss_db: linear_to_db(focused_gain(geom, p, &pl)) - linear_to_db(planar),
            })
        })
        .collect()
}

pub fn farfield_table(rows: &[FarFieldRow]) -> String {
    let mut s = String::from("distance_m,max_phase_error_rad,planar_loss_db\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{}", fmt_f64(r.distance_m), fmt_f64(r.max_phase_error_rad), fmt_f64(r.planar_loss_db));
    }
    s
}
