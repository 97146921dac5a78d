use crate::geometry::{Rect, Vec2};
use crate::nfchan::{
    apply_nlos, beam_gain, focused_gain, los_channel_near, mrt_beam, planar_beam, rate, snr, ArrayGeometry,
    LinkBudget, NfError, NlosParams, PathlossModel,
};

/// How the edge designs its beam for a robot at a known position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamModel {
    /// Matched to the exact spherical-wave channel (beam focusing).
    NearField,
    /// Matched to the planar-wave approximation (beam steering).
    Planar,
}

/// Array, propagation and link parameters between the edge and one robot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEnv {
    pub geom: ArrayGeometry,
    pub pl: PathlossModel,
    pub budget: LinkBudget,
    pub nlos: NlosParams,
}

impl ChannelEnv {
    pub fn new(geom: ArrayGeometry, pl: PathlossModel, budget: LinkBudget) -> Self {
        Self { geom, pl, budget, nlos: NlosParams::default() }
    }

    /// Effective gain when the edge beams with `model` toward `position` over
    /// the true (LoS, optionally NLoS-perturbed) channel.
    pub fn realized_gain(&self, position: Vec2, model: BeamModel, nlos_seed: u64) -> Result<f64, NfError> {
        let los = los_channel_near(&self.geom, position, &self.pl)?;
        let beam = match model {
            BeamModel::NearField => mrt_beam(&los)?,
            BeamModel::Planar => planar_beam(&self.geom, position, &self.pl)?,
        };
        let truth = apply_nlos(&los, &self.nlos, nlos_seed)?;
        beam_gain(&truth, &beam)
    }

    pub fn realized_rate(&self, position: Vec2, model: BeamModel, nlos_seed: u64) -> Result<f64, NfError> {
        Ok(rate(&self.budget, snr(self.realized_gain(position, model, nlos_seed)?, &self.budget)))
    }
}

/// Rate the edge can harvest from a robot at `position` with perfect near-field
/// focusing on the deterministic LoS channel.
pub fn step_reward(position: Vec2, env: &ChannelEnv) -> f64 {
    let g = focused_gain(&env.geom, position, &env.pl);
    if !g.is_finite() {
        return 0.0;
    }
    rate(&env.budget, snr(g, &env.budget))
}

/// Anything that can score a position in bits/s for planning.
pub trait RewardModel: Sync {
    fn reward(&self, position: Vec2) -> f64;
}

impl RewardModel for ChannelEnv {
    fn reward(&self, position: Vec2) -> f64 {
        step_reward(position, self)
    }
}

/// Planning-time reward that is identically zero (radio-unaware planners).
pub struct NoReward;

impl RewardModel for NoReward {
    fn reward(&self, _: Vec2) -> f64 {
        0.0
    }
}

/// `step_reward` sampled on a regular grid and interpolated bilinearly; exact
/// evaluation outside the grid.
pub struct RadioMap {
    env: ChannelEnv,
    region: Rect,
    resolution: f64,
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl RadioMap {
    pub fn build(env: ChannelEnv, region: Rect, resolution: f64) -> Self {
        let nx = (region.width() / resolution).ceil() as usize + 1;
        let ny = (region.height() / resolution).ceil() as usize + 1;
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let p = region.min + Vec2::new(i as f64 * resolution, j as f64 * resolution);
                values.push(step_reward(p, &env));
            }
        }
        Self { env, region, resolution, nx, ny, values }
    }

    pub fn env(&self) -> &ChannelEnv {
        &self.env
    }
}

impl RewardModel for RadioMap {
    fn reward(&self, p: Vec2) -> f64 {
        let fx = (p.x - self.region.min.x) / self.resolution;
        let fy = (p.y - self.region.min.y) / self.resolution;
        if !(fx >= 0.0 && fy >= 0.0) {
            return step_reward(p, &self.env);
        }
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        if i + 1 >= self.nx || j + 1 >= self.ny {
            return step_reward(p, &self.env);
        }
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let at = |a: usize, b: usize| self.values[b * self.nx + a];
        let lo = at(i, j) * (1.0 - tx) + at(i + 1, j) * tx;
        let hi = at(i, j + 1) * (1.0 - tx) + at(i + 1, j + 1) * tx;
        lo * (1.0 - ty) + hi * ty
    }
}
