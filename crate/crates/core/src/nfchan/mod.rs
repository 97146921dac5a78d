//! Near-field and far-field channel models over a uniform linear array.
//!
//! The array lives in the plane: element `n` sits at
//! `center + (n - (N-1)/2) * spacing * axis`. The near-field channel uses the
//! exact distance from every element to the target (spherical wavefront); the
//! far-field channel linearises those distances around the array center
//! (planar wavefront), which is what a beam-steering design assumes.
//!
//! Beams follow the transmit convention `y = sum_n h_n w_n`, so the matched
//! beam is `w = conj(h) / |h|` and its gain is `|h|^2`.

mod heatmap;

pub use heatmap::{gain_heatmap, Heatmap, HEATMAP_NEG_INF_SENTINEL};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::geometry::Vec2;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Elements closer than this to the target are treated as coincident.
const COINCIDENT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NfError {
    #[error("target coincides with array element {element} (distance {distance:e} m)")]
    TargetOnElement { element: usize, distance: f64 },
    #[error("channel has zero norm")]
    ZeroChannel,
    #[error("dimension mismatch: channel has {channel} elements, beam has {beam}")]
    DimensionMismatch { channel: usize, beam: usize },
    #[error("invalid array geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("heatmap region is degenerate")]
    DegenerateRegion,
}

/// Opaque identifier tying a channel to the geometry that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GeometryId(pub u64);

/// Uniform linear array in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    num_elements: usize,
    carrier_freq: f64,
    element_spacing: f64,
    center: Vec2,
    axis: Vec2,
}

impl ArrayGeometry {
    /// Build an array; `element_spacing = None` selects half-wavelength spacing.
    pub fn new(
        num_elements: usize,
        carrier_freq: f64,
        element_spacing: Option<f64>,
        center: Vec2,
        axis: Vec2,
    ) -> Result<Self, NfError> {
        if num_elements == 0 {
            return Err(NfError::InvalidGeometry("num_elements must be >= 1".into()));
        }
        if !(carrier_freq > 0.0 && carrier_freq.is_finite()) {
            return Err(NfError::InvalidGeometry("carrier_freq must be positive".into()));
        }
        let spacing = element_spacing.unwrap_or(SPEED_OF_LIGHT / carrier_freq / 2.0);
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(NfError::InvalidGeometry("element_spacing must be positive".into()));
        }
        if !center.is_finite() {
            return Err(NfError::InvalidGeometry("center must be finite".into()));
        }
        if (axis.norm() - 1.0).abs() > 1e-12 {
            return Err(NfError::InvalidGeometry(format!(
                "axis must be a unit vector, got norm {}",
                axis.norm()
            )));
        }
        Ok(Self { num_elements, carrier_freq, element_spacing: spacing, center, axis })
    }

    /// Half-wavelength ULA.
    pub fn ula(num_elements: usize, carrier_freq: f64, center: Vec2, axis: Vec2) -> Result<Self, NfError> {
        Self::new(num_elements, carrier_freq, None, center, axis)
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn carrier_freq(&self) -> f64 {
        self.carrier_freq
    }

    pub fn element_spacing(&self) -> f64 {
        self.element_spacing
    }

    pub fn center(&self) -> Vec2 {
        self.center
    }

    pub fn axis(&self) -> Vec2 {
        self.axis
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn aperture(&self) -> f64 {
        (self.num_elements - 1) as f64 * self.element_spacing
    }

    /// Signed offset of element `n` along the axis, measured from the center.
    #[inline]
    pub fn element_offset(&self, n: usize) -> f64 {
        (n as f64 - (self.num_elements - 1) as f64 / 2.0) * self.element_spacing
    }

    pub fn id(&self) -> GeometryId {
        // FNV-1a over the defining fields.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bits: u64| {
            for b in bits.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(self.num_elements as u64);
        eat(self.carrier_freq.to_bits());
        eat(self.element_spacing.to_bits());
        eat(self.center.x.to_bits());
        eat(self.center.y.to_bits());
        eat(self.axis.x.to_bits());
        eat(self.axis.y.to_bits());
        GeometryId(h)
    }
}

/// Element positions ordered by element index.
pub fn element_positions(geom: &ArrayGeometry) -> Vec<Vec2> {
    (0..geom.num_elements).map(|n| geom.center + geom.axis * geom.element_offset(n)).collect()
}

/// Rayleigh distance `2 D^2 / lambda`, the outer edge of the radiative near field.
pub fn rayleigh_distance(geom: &ArrayGeometry) -> f64 {
    2.0 * geom.aperture().powi(2) / geom.wavelength()
}

/// Distance-power law `beta0 * d^(-alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathlossModel {
    reference_loss: f64,
    exponent: f64,
}

impl PathlossModel {
    pub fn new(reference_loss: f64, exponent: f64) -> Result<Self, NfError> {
        if !(reference_loss > 0.0 && reference_loss.is_finite()) {
            return Err(NfError::InvalidParameter("reference_loss must be positive".into()));
        }
        if !(exponent >= 0.0 && exponent.is_finite()) {
            return Err(NfError::InvalidParameter("pathloss exponent must be >= 0".into()));
        }
        Ok(Self { reference_loss, exponent })
    }

    /// Free-space reference loss `(lambda / 4 pi)^2` at 1 m.
    pub fn free_space(wavelength: f64, exponent: f64) -> Result<Self, NfError> {
        Self::new((wavelength / (4.0 * std::f64::consts::PI)).powi(2), exponent)
    }

    pub fn reference_loss(&self) -> f64 {
        self.reference_loss
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Linear power gain at distance `d`.
    #[inline]
    pub fn gain(&self, d: f64) -> f64 {
        self.gain_sq(d * d)
    }

    /// Linear power gain given the squared distance.
    #[inline]
    pub fn gain_sq(&self, d_sq: f64) -> f64 {
        let a = self.exponent;
        if a == 2.0 {
            self.reference_loss / d_sq
        } else if a == 3.0 {
            self.reference_loss / (d_sq * d_sq.sqrt())
        } else if a == 0.0 {
            self.reference_loss
        } else {
            self.reference_loss * d_sq.powf(-0.5 * a)
        }
    }
}

/// How per-element magnitudes are computed in the near-field model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmplitudeMode {
    /// Each element uses its own distance to the target.
    #[default]
    PerElement,
    /// All elements share the center-to-target pathloss (phase stays exact).
    CommonDistance,
}

/// Per-element complex gains between an array and a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub gains: Vec<Complex64>,
    pub geometry: GeometryId,
}

impl ChannelVector {
    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    /// Squared Euclidean norm.
    pub fn norm_sq(&self) -> f64 {
        self.gains.iter().map(|g| g.norm_sqr()).sum()
    }
}

#[inline]
fn phasor(distance: f64, wavelength: f64) -> Complex64 {
    let phase = -2.0 * std::f64::consts::PI * distance / wavelength;
    Complex64::from_polar(1.0, phase)
}

fn check_elements(geom: &ArrayGeometry, target: Vec2) -> Result<(), NfError> {
    for n in 0..geom.num_elements {
        let d = target.distance(geom.center + geom.axis * geom.element_offset(n));
        if d < COINCIDENT_TOL {
            return Err(NfError::TargetOnElement { element: n, distance: d });
        }
    }
    Ok(())
}

/// Spherical-wave line-of-sight channel with exact per-element distances.
pub fn los_channel_near(geom: &ArrayGeometry, target: Vec2, pl: &PathlossModel) -> Result<ChannelVector, NfError> {
    los_channel_near_with(geom, target, pl, AmplitudeMode::PerElement)
}

pub fn los_channel_near_with(
    geom: &ArrayGeometry,
    target: Vec2,
    pl: &PathlossModel,
    mode: AmplitudeMode,
) -> Result<ChannelVector, NfError> {
    let lambda = geom.wavelength();
    let common = pl.gain(target.distance(geom.center)).sqrt();
    let mut gains = Vec::with_capacity(geom.num_elements);
    for n in 0..geom.num_elements {
        let d = target.distance(geom.center + geom.axis * geom.element_offset(n));
        if d < COINCIDENT_TOL {
            return Err(NfError::TargetOnElement { element: n, distance: d });
        }
        let mag = match mode {
            AmplitudeMode::PerElement => pl.gain(d).sqrt(),
            AmplitudeMode::CommonDistance => common,
        };
        gains.push(phasor(d, lambda) * mag);
    }
    Ok(ChannelVector { gains, geometry: geom.id() })
}

/// Planar-wave distances `d - u_n cos(psi)` used by the far-field model.
pub fn planar_distances(geom: &ArrayGeometry, target: Vec2) -> Vec<f64> {
    let rel = target - geom.center;
    let d = rel.norm();
    // axis . rel = d cos(psi)
    let proj = geom.axis.dot(rel);
    (0..geom.num_elements).map(|n| d - geom.element_offset(n) * proj / d).collect()
}

/// Planar-wave (far-field) line-of-sight channel: common magnitude, linear phase.
pub fn los_channel_far(geom: &ArrayGeometry, target: Vec2, pl: &PathlossModel) -> Result<ChannelVector, NfError> {
    check_elements(geom, target)?;
    let d = target.distance(geom.center);
    if d < COINCIDENT_TOL {
        return Err(NfError::TargetOnElement { element: geom.num_elements / 2, distance: d });
    }
    let lambda = geom.wavelength();
    let mag = pl.gain(d).sqrt();
    let gains = planar_distances(geom, target).into_iter().map(|dn| phasor(dn, lambda) * mag).collect();
    Ok(ChannelVector { gains, geometry: geom.id() })
}

/// Unwrapped per-element phase error (radians) of the planar model versus the
/// exact spherical model.
pub fn planar_phase_error(geom: &ArrayGeometry, target: Vec2) -> Vec<f64> {
    let k = 2.0 * std::f64::consts::PI / geom.wavelength();
    planar_distances(geom, target)
        .into_iter()
        .enumerate()
        .map(|(n, approx)| {
            let exact = target.distance(geom.center + geom.axis * geom.element_offset(n));
            k * (exact - approx).abs()
        })
        .collect()
}

/// Statistics of the aggregated non-line-of-sight component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlosParams {
    /// LoS-to-NLoS power ratio; `f64::INFINITY` means LoS only.
    pub rician_k: f64,
    pub nlos_mean: Complex64,
    pub nlos_std: f64,
}

impl Default for NlosParams {
    fn default() -> Self {
        Self { rician_k: f64::INFINITY, nlos_mean: Complex64::new(0.0, 0.0), nlos_std: 1.0 }
    }
}

impl NlosParams {
    pub fn validate(&self) -> Result<(), NfError> {
        if !(self.rician_k >= 0.0) {
            return Err(NfError::InvalidParameter("rician_k must be >= 0".into()));
        }
        if !(self.nlos_std >= 0.0 && self.nlos_std.is_finite()) {
            return Err(NfError::InvalidParameter("nlos_std must be >= 0".into()));
        }
        if !(self.nlos_mean.norm_sqr() + self.nlos_std * self.nlos_std > 0.0) {
            return Err(NfError::InvalidParameter("NLoS component must carry power".into()));
        }
        Ok(())
    }
}

/// Mix a seeded Rician NLoS term into a LoS channel.
///
/// Each scattered term is `|h_n| (m e^{j phi} + s c) / sqrt(|m|^2 + s^2)` with
/// `c ~ CN(0, 1)` and `phi` uniform, so it has zero mean and power `|h_n|^2`.
pub fn apply_nlos(ch: &ChannelVector, params: &NlosParams, rng_seed: u64) -> Result<ChannelVector, NfError> {
    params.validate()?;
    if params.rician_k == f64::INFINITY {
        return Ok(ch.clone());
    }
    let k = params.rician_k;
    let los_w = (k / (k + 1.0)).sqrt();
    let nlos_w = (1.0 / (k + 1.0)).sqrt();
    let norm = (params.nlos_mean.norm_sqr() + params.nlos_std * params.nlos_std).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let gains = ch
        .gains
        .iter()
        .map(|h| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let phi = rand::Rng::random::<f64>(&mut rng) * std::f64::consts::TAU;
            let c = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
            let z = (params.nlos_mean * Complex64::from_polar(1.0, phi) + c * params.nlos_std) / norm;
            h * los_w + z * (h.norm() * nlos_w)
        })
        .collect();
    Ok(ChannelVector { gains, geometry: ch.geometry })
}

/// Complex beamforming weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamVector {
    pub weights: Vec<Complex64>,
}

impl BeamVector {
    /// Normalise arbitrary weights to unit norm.
    pub fn normalized(weights: Vec<Complex64>) -> Result<Self, NfError> {
        let n: f64 = weights.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(NfError::ZeroChannel);
        }
        Ok(Self { weights: weights.into_iter().map(|w| w / n).collect() })
    }

    /// The null beam: radiates nothing. The only beam allowed to violate unit norm.
    pub fn zeros(len: usize) -> Self {
        Self { weights: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Matched (maximum-ratio) beam `conj(h) / |h|`.
pub fn mrt_beam(ch: &ChannelVector) -> Result<BeamVector, NfError> {
    let norm = ch.norm_sq().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(NfError::ZeroChannel);
    }
    Ok(BeamVector { weights: ch.gains.iter().map(|h| h.conj() / norm).collect() })
}

/// Effective power gain `|sum_n h_n w_n|^2`.
pub fn beam_gain(ch: &ChannelVector, beam: &BeamVector) -> Result<f64, NfError> {
    if ch.len() != beam.len() {
        return Err(NfError::DimensionMismatch { channel: ch.len(), beam: beam.len() });
    }
    let y: Complex64 = ch.gains.iter().zip(&beam.weights).map(|(h, w)| h * w).sum();
    Ok(y.norm_sqr())
}

/// Gain of the matched beam at `target`, i.e. `|h_near|^2`, without building the vector.
pub fn focused_gain(geom: &ArrayGeometry, target: Vec2, pl: &PathlossModel) -> f64 {
    (0..geom.num_elements)
        .map(|n| {
            let p = geom.center + geom.axis * geom.element_offset(n);
            pl.gain_sq((target - p).norm_sq())
        })
        .sum()
}

/// Beam designed from the planar-wave model of `target`.
pub fn planar_beam(geom: &ArrayGeometry, target: Vec2, pl: &PathlossModel) -> Result<BeamVector, NfError> {
    mrt_beam(&los_channel_far(geom, target, pl)?)
}

/// Transmit power, receiver noise and bandwidth of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx_power: f64,
    pub noise_power: f64,
    pub bandwidth: f64,
}

impl LinkBudget {
    pub fn new(tx_power: f64, noise_power: f64, bandwidth: f64) -> Result<Self, NfError> {
        for (name, v) in [("tx_power", tx_power), ("noise_power", noise_power), ("bandwidth", bandwidth)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(NfError::InvalidParameter(format!("{name} must be positive")));
            }
        }
        Ok(Self { tx_power, noise_power, bandwidth })
    }

    pub fn from_dbm(tx_power_dbm: f64, noise_dbm: f64, bandwidth: f64) -> Result<Self, NfError> {
        Self::new(dbm_to_watts(tx_power_dbm), dbm_to_watts(noise_dbm), bandwidth)
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Linear SNR `P g / sigma^2`.
pub fn snr(gain: f64, budget: &LinkBudget) -> f64 {
    budget.tx_power * gain / budget.noise_power
}

/// Shannon rate `B log2(1 + snr)` in bits/s.
pub fn rate(budget: &LinkBudget, snr: f64) -> f64 {
    budget.bandwidth * (1.0 + snr).log2()
}

/// `P g / (sigma^2 + sum p_i g_i)`.
pub fn sinr(desired_gain: f64, desired_power: f64, interferers: &[(f64, f64)], noise: f64) -> f64 {
    let interference: f64 = interferers.iter().map(|(g, p)| g * p).sum();
    desired_power * desired_gain / (noise + interference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn toy(n: usize, spacing: f64) -> ArrayGeometry {
        ArrayGeometry::new(n, 30e9, Some(spacing), Vec2::ZERO, Vec2::new(0.0, 1.0)).unwrap()
    }

    fn unit_pl() -> PathlossModel {
        PathlossModel::new(1.0, 2.0).unwrap()
    }

    #[test]
    fn positions_single_and_symmetric() {
        let g = toy(1, 0.5);
        assert_eq!(element_positions(&g), vec![Vec2::ZERO]);
        let g = toy(3, 0.5);
        assert_eq!(
            element_positions(&g),
            vec![Vec2::new(0.0, -0.5), Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.5)]
        );
    }

    #[test]
    fn aperture_of_640_element_array() {
        let g = ArrayGeometry::ula(640, 30e9, Vec2::ZERO, Vec2::new(1.0, 0.0)).unwrap();
        let lambda = SPEED_OF_LIGHT / 30e9;
        assert!((g.element_spacing() - 0.004_996_540_966_666_667).abs() < 1e-15);
        assert!((g.aperture() - 639.0 * lambda / 2.0).abs() < 1e-12);
        assert!((g.aperture() - 3.193).abs() < 1e-3);
    }

    #[test]
    fn geometry_validation() {
        assert!(ArrayGeometry::ula(0, 1e9, Vec2::ZERO, Vec2::new(1.0, 0.0)).is_err());
        assert!(ArrayGeometry::ula(4, 1e9, Vec2::ZERO, Vec2::new(1.0, 1.0)).is_err());
        assert!(ArrayGeometry::new(4, 1e9, Some(0.0), Vec2::ZERO, Vec2::new(1.0, 0.0)).is_err());
        assert!(ArrayGeometry::ula(4, -1.0, Vec2::ZERO, Vec2::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn single_element_near_channel() {
        let g = ArrayGeometry::ula(1, 30e9, Vec2::ZERO, Vec2::new(0.0, 1.0)).unwrap();
        let h = los_channel_near(&g, Vec2::new(1.0, 0.0), &unit_pl()).unwrap();
        assert!((h.gains[0].norm() - 1.0).abs() < 1e-15);
        let expected = (-2.0 * PI / g.wavelength()).rem_euclid(2.0 * PI);
        assert!((h.gains[0].arg().rem_euclid(2.0 * PI) - expected).abs() < 1e-6);
    }

    #[test]
    fn near_channel_broadside_distances() {
        let delta = 0.3;
        let g = toy(3, delta);
        let pl = unit_pl();
        let h = los_channel_near(&g, Vec2::new(2.0, 0.0), &pl).unwrap();
        // |h_n|^2 = d_n^-2 with d = 2 (middle) and sqrt(4 + delta^2) (edges)
        assert!((h.gains[1].norm_sqr() - 0.25).abs() < 1e-15);
        let edge = 1.0 / (4.0 + delta * delta);
        assert!((h.gains[0].norm_sqr() - edge).abs() < 1e-15);
        assert!((h.gains[2].norm_sqr() - edge).abs() < 1e-15);
    }

    #[test]
    fn near_channel_target_on_element() {
        let g = toy(3, 0.5);
        let err = los_channel_near(&g, Vec2::new(0.0, 0.5), &unit_pl()).unwrap_err();
        assert!(matches!(err, NfError::TargetOnElement { element: 2, .. }));
        assert!(los_channel_far(&g, Vec2::new(0.0, 0.5), &unit_pl()).is_err());
    }

    #[test]
    fn common_distance_mode_keeps_phase() {
        let g = toy(8, 0.05);
        let pl = unit_pl();
        let target = Vec2::new(0.7, 0.3);
        let a = los_channel_near(&g, target, &pl).unwrap();
        let b = los_channel_near_with(&g, target, &pl, AmplitudeMode::CommonDistance).unwrap();
        let common = pl.gain(target.norm());
        for (x, y) in a.gains.iter().zip(&b.gains) {
            assert!((x.arg() - y.arg()).abs() < 1e-12);
            assert!((y.norm_sqr() - common).abs() < 1e-12);
        }
    }

    #[test]
    fn far_channel_single_element_matches_near() {
        let g = ArrayGeometry::ula(1, 30e9, Vec2::new(1.0, 2.0), Vec2::new(0.0, 1.0)).unwrap();
        let pl = unit_pl();
        let t = Vec2::new(4.0, -1.0);
        let a = los_channel_near(&g, t, &pl).unwrap();
        let b = los_channel_far(&g, t, &pl).unwrap();
        assert!((a.gains[0] - b.gains[0]).norm() < 1e-12);
    }

    #[test]
    fn far_channel_broadside_has_equal_phases() {
        let g = toy(16, 0.05);
        let h = los_channel_far(&g, Vec2::new(3.0, 0.0), &unit_pl()).unwrap();
        for x in &h.gains {
            assert!((x - h.gains[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn planar_phase_error_large_inside_near_field() {
        let g = ArrayGeometry::ula(640, 30e9, Vec2::ZERO, Vec2::new(0.0, 1.0)).unwrap();
        let err = planar_phase_error(&g, Vec2::new(2.0, 0.0));
        assert!(err[0] > PI && err[639] > PI);
        assert!(err[320] < 1.0);
    }

    #[test]
    fn mrt_on_axis_channel() {
        let mut gains = vec![Complex64::new(0.0, 0.0); 4];
        gains[0] = Complex64::new(1.0, 0.0);
        let ch = ChannelVector { gains, geometry: GeometryId(0) };
        let w = mrt_beam(&ch).unwrap();
        assert_eq!(w.weights[0], Complex64::new(1.0, 0.0));
        assert!(w.weights[1..].iter().all(|w| w.norm() == 0.0));
    }

    #[test]
    fn mrt_gain_equal_magnitudes() {
        let a = 0.37;
        let gains: Vec<_> = (0..9).map(|n| Complex64::from_polar(a, 0.4 * n as f64)).collect();
        let ch = ChannelVector { gains, geometry: GeometryId(0) };
        let w = mrt_beam(&ch).unwrap();
        assert!((w.norm() - 1.0).abs() < 1e-12);
        let g = beam_gain(&ch, &w).unwrap();
        assert!((g - 9.0 * a * a).abs() < 1e-12);
    }

    #[test]
    fn beam_gain_errors_and_orthogonality() {
        let ch = ChannelVector {
            gains: vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
            geometry: GeometryId(0),
        };
        let w = BeamVector::normalized(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]).unwrap();
        assert!(beam_gain(&ch, &w).unwrap() < 1e-30);
        let short = BeamVector::zeros(3);
        assert_eq!(
            beam_gain(&ch, &short),
            Err(NfError::DimensionMismatch { channel: 2, beam: 3 })
        );
        let zero = ChannelVector { gains: vec![Complex64::new(0.0, 0.0); 2], geometry: GeometryId(0) };
        assert_eq!(mrt_beam(&zero), Err(NfError::ZeroChannel));
    }

    #[test]
    fn focused_gain_matches_channel_norm() {
        let g = ArrayGeometry::ula(64, 30e9, Vec2::ZERO, Vec2::new(1.0, 0.0)).unwrap();
        let pl = PathlossModel::free_space(g.wavelength(), 2.0).unwrap();
        let t = Vec2::new(0.4, 2.5);
        let h = los_channel_near(&g, t, &pl).unwrap();
        let rel = (focused_gain(&g, t, &pl) - h.norm_sq()).abs() / h.norm_sq();
        assert!(rel < 1e-12);
    }

    #[test]
    fn link_budget_conversions() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(-80.0) - 1e-11).abs() < 1e-26);
        assert!((watts_to_dbm(1e-3)).abs() < 1e-12);
        assert!(LinkBudget::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn rates() {
        let b = LinkBudget::new(1.0, 1.0, 200e3).unwrap();
        assert_eq!(rate(&b, snr(0.0, &b)), 0.0);
        let r = rate(&b, 100.0);
        assert!((r - 200e3 * 101f64.log2()).abs() < 1e-6);
        assert!((r - 1.3316e6).abs() < 1e2);
        let b = LinkBudget::new(1.0, 1.0, 10e6).unwrap();
        assert!((rate(&b, 1.610) - 1.384e7).abs() / 1.384e7 < 1e-3);
    }

    #[test]
    fn sinr_cases() {
        assert_eq!(sinr(2.0, 3.0, &[], 0.5), 12.0);
        assert!(sinr(1.0, 1.0, &[(1.0, 1.0)], 1e-3) < 1.0);
    }

    #[test]
    fn rayleigh_values() {
        let g = ArrayGeometry::ula(640, 30e9, Vec2::ZERO, Vec2::new(1.0, 0.0)).unwrap();
        assert!((rayleigh_distance(&g) - 2041.0).abs() / 2041.0 < 1e-2);
        let g = ArrayGeometry::ula(32, 1.5e9, Vec2::ZERO, Vec2::new(1.0, 0.0)).unwrap();
        assert!((rayleigh_distance(&g) - 96.2).abs() / 96.2 < 1e-2);
        let g = ArrayGeometry::ula(1, 1.5e9, Vec2::ZERO, Vec2::new(1.0, 0.0)).unwrap();
        assert_eq!(rayleigh_distance(&g), 0.0);
    }

    #[test]
    fn nlos_limits() {
        let g = toy(8, 0.05);
        let h = los_channel_near(&g, Vec2::new(1.0, 0.2), &unit_pl()).unwrap();
        let los_only = apply_nlos(&h, &NlosParams::default(), 7).unwrap();
        assert_eq!(los_only, h);
        let p = NlosParams { rician_k: 0.0, ..NlosParams::default() };
        let a = apply_nlos(&h, &p, 11).unwrap();
        let b = apply_nlos(&h, &p, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, h);
        let bad = NlosParams { rician_k: -1.0, ..NlosParams::default() };
        assert!(apply_nlos(&h, &bad, 0).is_err());
    }

    #[test]
    fn nlos_power_preserved_in_expectation() {
        let g = toy(4, 0.05);
        let h = los_channel_near(&g, Vec2::new(1.0, 0.2), &unit_pl()).unwrap();
        for params in [
            NlosParams { rician_k: 3.0, ..NlosParams::default() },
            NlosParams { rician_k: 0.0, nlos_mean: Complex64::new(0.6, -0.3), nlos_std: 0.5 },
        ] {
            let trials = 100_000u64;
            let mut acc = vec![0.0; h.len()];
            for seed in 0..trials {
                let x = apply_nlos(&h, &params, seed).unwrap();
                for (a, g) in acc.iter_mut().zip(&x.gains) {
                    *a += g.norm_sqr();
                }
            }
            for (a, g) in acc.iter().zip(&h.gains) {
                let mean = a / trials as f64;
                assert!((mean - g.norm_sqr()).abs() / g.norm_sqr() < 0.02, "{mean} vs {}", g.norm_sqr());
            }
        }
    }
}
