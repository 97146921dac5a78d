//! Sampling-based receding-horizon planner (cross-entropy method).
//!
//! Each iteration draws control sequences from a per-step Gaussian over
//! `(v, omega)`, rolls them out with the unicycle model, drops any rollout that
//! comes closer than the safety distance to an obstacle, scores the rest and
//! refits the Gaussian on the elite fraction. The best rollout of the previous
//! iteration is re-injected as candidate 0, so the best cost never increases.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::radio::RewardModel;
use super::RepError;
use crate::geometry::Vec2;
use crate::geomworld::{integrate_pose, ControlInput, ControlLimits, Integrator, Pose, RobotState, World};

#[derive(Debug, Clone, PartialEq)]
pub struct RepConfig {
    pub horizon: usize,
    pub dt: f64,
    pub safety_distance: f64,
    pub goal: Vec2,
    pub goal_tolerance: f64,
    pub radio_weight: f64,
    pub progress_weight: f64,
    pub effort_weight: f64,
    pub v_ref: f64,
    pub candidate_count: usize,
    pub elite_frac: f64,
    pub iterations: usize,
    pub rng_seed: u64,
    pub limits: ControlLimits,
    /// Initial sampling standard deviations of `v` and `omega`.
    pub init_std: (f64, f64),
}

impl Default for RepConfig {
    fn default() -> Self {
        Self {
            horizon: 20,
            dt: 0.1,
            safety_distance: 0.1,
            goal: Vec2::ZERO,
            goal_tolerance: 0.1,
            radio_weight: 0.0,
            progress_weight: 10.0,
            effort_weight: 0.1,
            v_ref: 0.5,
            candidate_count: 256,
            elite_frac: 0.1,
            iterations: 4,
            rng_seed: 0,
            limits: ControlLimits::default(),
            init_std: (0.2, 0.8),
        }
    }
}

impl RepConfig {
    pub fn validate(&self) -> Result<(), RepError> {
        let bad = |m: &str| Err(RepError::InvalidConfig(m.to_string()));
        if self.horizon < 1 {
            return bad("horizon must be >= 1");
        }
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.safety_distance >= 0.0) {
            return bad("safety_distance must be >= 0");
        }
        if !(self.radio_weight >= 0.0 && self.progress_weight >= 0.0 && self.effort_weight >= 0.0) {
            return bad("weights must be >= 0");
        }
        if !(self.elite_frac > 0.0 && self.elite_frac <= 1.0) {
            return bad("elite_frac must lie in (0, 1]");
        }
        if self.candidate_count < 1 || self.iterations < 1 {
            return bad("candidate_count and iterations must be >= 1");
        }
        if !(self.v_ref > 0.0 && self.v_ref <= self.limits.v_max + 1e-12) {
            return bad("v_ref must be positive and within v_max");
        }
        if !(self.init_std.0 >= 0.0 && self.init_std.1 >= 0.0) {
            return bad("init_std must be >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub controls: Vec<ControlInput>,
    pub states: Vec<RobotState>,
    /// Predicted harvest rate (bits/s) at states 1..=H.
    pub predicted_rates: Vec<f64>,
    /// Negated objective of the returned rollout.
    pub cost: f64,
    pub feasible: bool,
    /// Best cost seen by the end of each iteration.
    pub iteration_costs: Vec<f64>,
}

struct Rollout {
    feasible: bool,
    score: f64,
}

fn evaluate(
    start: Pose,
    start_u: ControlInput,
    seq: &[ControlInput],
    world: &World,
    footprint: &crate::geomworld::ConvexPolygon,
    cfg: &RepConfig,
    reward: &dyn RewardModel,
    t: f64,
) -> Rollout {
    let mut pose = start;
    let mut prev = start_u;
    let mut radio = 0.0;
    let mut effort = 0.0;
    for (k, u) in seq.iter().enumerate() {
        pose = integrate_pose(pose, *u, cfg.dt, Integrator::ExactArc);
        if !world.is_clear(footprint, pose, t + (k + 1) as f64 * cfg.dt, cfg.safety_distance) {
            return Rollout { feasible: false, score: f64::NEG_INFINITY };
        }
        if cfg.radio_weight > 0.0 {
            radio += reward.reward(pose.position);
        }
        effort += (u.v - prev.v).abs() + (u.omega - prev.omega).abs();
        prev = *u;
    }
    let progress = start.position.distance(cfg.goal) - pose.position.distance(cfg.goal);
    let score = cfg.radio_weight * radio + cfg.progress_weight * progress - cfg.effort_weight * effort;
    Rollout { feasible: true, score }
}

/// Turn-in-place-then-drive sequences plus standing still, tried when no
/// sampled candidate is feasible (a robot parked nose-up against an obstacle).
fn primitives(cfg: &RepConfig) -> Vec<Vec<ControlInput>> {
    let h = cfg.horizon;
    let mut out = vec![vec![ControlInput::STOP; h]];
    for dir in [1.0, -1.0] {
        for k in [2, 4, 7, 10, 15, h] {
            let k = k.min(h);
            out.push(
                (0..h)
                    .map(|i| {
                        if i < k {
                            ControlInput::new(0.0, dir * cfg.limits.omega_max)
                        } else {
                            ControlInput::new(cfg.v_ref.min(cfg.limits.v_max), 0.0)
                        }
                    })
                    .collect(),
            );
        }
    }
    out
}

/// Plan `cfg.horizon` controls from `state` at world time `t`.
pub fn plan(
    state: &RobotState,
    world: &World,
    cfg: &RepConfig,
    reward: &dyn RewardModel,
    t: f64,
) -> Result<PlanResult, RepError> {
    plan_with_warm_start(state, world, cfg, reward, t, None)
}

/// As [`plan`], seeding the sampling mean with a previous control sequence
/// (typically last tick's plan shifted by one step).
pub fn plan_with_warm_start(
    state: &RobotState,
    world: &World,
    cfg: &RepConfig,
    reward: &dyn RewardModel,
    t: f64,
    warm_start: Option<&[ControlInput]>,
) -> Result<PlanResult, RepError> {
    cfg.validate()?;
    let h = cfg.horizon;
    let start = state.pose();
    let start_u = ControlInput::new(state.linear_vel, state.angular_vel);
    let footprint = state.footprint.as_ref();

    let mut mean: Vec<ControlInput> = (0..h)
        .map(|k| {
            warm_start
                .and_then(|w| w.get(k).or(w.last()))
                .copied()
                .unwrap_or(ControlInput::new(cfg.v_ref, 0.0))
        })
        .collect();
    let mut std = vec![cfg.init_std; h];
    let elite_n = ((cfg.elite_frac * cfg.candidate_count as f64).ceil() as usize).clamp(1, cfg.candidate_count);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

    let mut best: Option<(Vec<ControlInput>, f64)> = None;
    let mut iteration_costs = Vec::with_capacity(cfg.iterations);

    for _ in 0..cfg.iterations {
        let mut candidates: Vec<Vec<ControlInput>> = Vec::with_capacity(cfg.candidate_count);
        candidates.push(match &best {
            Some((seq, _)) => seq.clone(),
            None => mean.iter().map(|u| cfg.limits.clamp(*u)).map(|u| ControlInput::new(u.v.max(0.0), u.omega)).collect(),
        });
        while candidates.len() < cfg.candidate_count {
            let seq = (0..h)
                .map(|k| {
                    let v = mean[k].v + std[k].0 * unit.sample(&mut rng);
                    let w = mean[k].omega + std[k].1 * unit.sample(&mut rng);
                    ControlInput::new(v.clamp(0.0, cfg.limits.v_max), w.clamp(-cfg.limits.omega_max, cfg.limits.omega_max))
                })
                .collect();
            candidates.push(seq);
        }

        let mut scored: Vec<Rollout> = candidates
            .par_iter()
            .map(|seq| evaluate(start, start_u, seq, world, footprint, cfg, reward, t))
            .collect();
        if best.is_none() && scored.iter().all(|r| !r.feasible) {
            for seq in primitives(cfg) {
                scored.push(evaluate(start, start_u, &seq, world, footprint, cfg, reward, t));
                candidates.push(seq);
            }
        }

        let mut order: Vec<usize> = (0..scored.len()).filter(|&i| scored[i].feasible).collect();
        // stable sort keeps lower candidate index first on equal scores
        order.sort_by(|&a, &b| scored[b].score.total_cmp(&scored[a].score));

        if let Some(&top) = order.first() {
            let improves = best.as_ref().is_none_or(|(_, s)| scored[top].score > *s);
            if improves {
                best = Some((candidates[top].clone(), scored[top].score));
            }
            let elites = &order[..elite_n.min(order.len())];
            for k in 0..h {
                let n = elites.len() as f64;
                let mv = elites.iter().map(|&i| candidates[i][k].v).sum::<f64>() / n;
                let mw = elites.iter().map(|&i| candidates[i][k].omega).sum::<f64>() / n;
                let sv = (elites.iter().map(|&i| (candidates[i][k].v - mv).powi(2)).sum::<f64>() / n).sqrt();
                let sw = (elites.iter().map(|&i| (candidates[i][k].omega - mw).powi(2)).sum::<f64>() / n).sqrt();
                mean[k] = ControlInput::new(mv, mw);
                std[k] = (sv.max(0.02), sw.max(0.05));
            }
        } else {
            // nothing feasible yet: explore wider around the same mean
            for s in &mut std {
                *s = ((s.0 * 2.0).min(cfg.limits.v_max), (s.1 * 2.0).min(cfg.limits.omega_max));
            }
        }
        iteration_costs.push(best.as_ref().map_or(f64::INFINITY, |(_, s)| -s));
    }

    let (controls, score) = best.ok_or(RepError::NoFeasiblePlan)?;
    let mut states = Vec::with_capacity(h + 1);
    let mut predicted_rates = Vec::with_capacity(h);
    states.push(state.clone());
    let mut pose = start;
    for u in &controls {
        pose = integrate_pose(pose, *u, cfg.dt, Integrator::ExactArc);
        states.push(state.with_pose(pose, *u));
        predicted_rates.push(reward.reward(pose.position));
    }
    Ok(PlanResult { controls, states, predicted_rates, cost: -score, feasible: true, iteration_costs })
}
