//! Uniform linear array geometry, steering vectors and beam gain.
//!
//! Locations are described by a directional cosine `theta` and a distance `r`
//! from the array centre. Internally the distance enters through the curvature
//! `kappa = (1 - theta^2) / r`, which is zero in the far field. Two array
//! response models are provided:
//!
//! * [`GainModel::Exact`] uses the true element-to-point distances.
//! * [`GainModel::Quadratic`] keeps the second-order expansion of those
//!   distances, which is accurate beyond the Fresnel distance and turns beam
//!   patterns into functions of `(theta, kappa)` only.
//!
//! Phases follow `exp(-j 2pi/lambda (r_i - r))` throughout the crate.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Geometry and carrier of a uniform linear array.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArrayConfig {
    n_elements: usize,
    carrier_hz: f64,
    wavelength: f64,
    spacing: f64,
}

impl ArrayConfig {
    /// Half-wavelength array.
    pub fn new(n_elements: usize, carrier_hz: f64) -> Result<Self> {
        if !(carrier_hz.is_finite() && carrier_hz > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "carrier frequency must be positive, got {carrier_hz}"
            )));
        }
        let wavelength = SPEED_OF_LIGHT / carrier_hz;
        Self::with_spacing(n_elements, carrier_hz, wavelength / 2.0)
    }

    pub fn with_spacing(n_elements: usize, carrier_hz: f64, spacing: f64) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::InvalidConfig("array needs at least one element".into()));
        }
        if !(carrier_hz.is_finite() && carrier_hz > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "carrier frequency must be positive, got {carrier_hz}"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "element spacing must be positive, got {spacing}"
            )));
        }
        Ok(Self {
            n_elements,
            carrier_hz,
            wavelength: SPEED_OF_LIGHT / carrier_hz,
            spacing,
        })
    }

    /// 256 elements at 40 GHz with half-wavelength spacing.
    pub fn reference() -> Self {
        Self::new(256, 40e9).expect("reference array is valid")
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Aperture `D = n_w * d` in metres.
    pub fn aperture(&self) -> f64 {
        self.n_elements as f64 * self.spacing
    }

    /// Fresnel distance `0.5 * sqrt(D^3 / lambda)`.
    pub fn fresnel_distance(&self) -> f64 {
        0.5 * (self.aperture().powi(3) / self.wavelength).sqrt()
    }

    /// Largest curvature of a point beyond the Fresnel distance (reached at broadside).
    pub fn max_curvature(&self) -> f64 {
        1.0 / self.fresnel_distance()
    }

    /// `2d / lambda`; 1 for half-wavelength arrays.
    pub(crate) fn spacing_ratio(&self) -> f64 {
        2.0 * self.spacing / self.wavelength
    }

    /// `d^2 / lambda`, the coefficient tying curvature to the quadratic phase.
    pub(crate) fn curvature_coefficient(&self) -> f64 {
        self.spacing * self.spacing / self.wavelength
    }
}

/// Plain `(theta, kappa)` coordinate without validation.
///
/// Used for coverage bookkeeping, where cell corners and mapped points may sit
/// outside the physical domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coord {
    pub theta: f64,
    pub kappa: f64,
}

impl Coord {
    pub const fn new(theta: f64, kappa: f64) -> Self {
        Self { theta, kappa }
    }
}

/// A physical location or steering target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarPoint {
    theta: f64,
    kappa: f64,
    range: Option<f64>,
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && (-1.0..=1.0).contains(&theta) {
        Ok(())
    } else {
        Err(Error::InvalidPoint(format!(
            "directional cosine must lie in [-1, 1], got {theta}"
        )))
    }
}

impl PolarPoint {
    /// `r = f64::INFINITY` is accepted and yields a far-field point.
    pub fn from_range(theta: f64, r: f64) -> Result<Self> {
        check_theta(theta)?;
        if r.is_nan() || r <= 0.0 {
            return Err(Error::InvalidPoint(format!("range must be positive, got {r}")));
        }
        if r.is_infinite() {
            return Self::far_field(theta);
        }
        Ok(Self {
            theta,
            kappa: (1.0 - theta * theta) / r,
            range: Some(r),
        })
    }

    pub fn from_curvature(theta: f64, kappa: f64) -> Result<Self> {
        check_theta(theta)?;
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::InvalidPoint(format!(
                "curvature must be finite and non-negative, got {kappa}"
            )));
        }
        if kappa == 0.0 {
            return Self::far_field(theta);
        }
        let aperture = 1.0 - theta * theta;
        if aperture <= 0.0 {
            return Err(Error::InvalidPoint(format!(
                "theta = {theta} with curvature {kappa} has zero range"
            )));
        }
        Ok(Self {
            theta,
            kappa,
            range: Some(aperture / kappa),
        })
    }

    pub fn far_field(theta: f64) -> Result<Self> {
        check_theta(theta)?;
        Ok(Self {
            theta,
            kappa: 0.0,
            range: None,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `None` in the far field.
    pub fn range(&self) -> Option<f64> {
        self.range
    }

    pub fn is_far_field(&self) -> bool {
        self.range.is_none()
    }

    pub fn coord(&self) -> Coord {
        Coord::new(self.theta, self.kappa)
    }
}

impl From<PolarPoint> for Coord {
    fn from(p: PolarPoint) -> Self {
        p.coord()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GainModel {
    Exact,
    Quadratic,
}

/// Per-element amplitude rule for beams that switch elements off.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `1/sqrt(M)` over the `M` active elements: unit transmit power.
    #[default]
    ActiveElements,
    /// `1/sqrt(n_w)` regardless of how many elements are active.
    FullArray,
}

impl Normalization {
    pub fn amplitude(self, n_elements: usize, n_active: usize) -> f64 {
        match self {
            Normalization::ActiveElements => 1.0 / (n_active as f64).sqrt(),
            Normalization::FullArray => 1.0 / (n_elements as f64).sqrt(),
        }
    }
}

/// Analog beamforming weights with an explicit activity mask.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamVector {
    weights: Vec<Complex64>,
    active: Vec<bool>,
}

impl BeamVector {
    pub fn new(weights: Vec<Complex64>, active: Vec<bool>) -> Result<Self> {
        if weights.len() != active.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                got: active.len(),
            });
        }
        if weights.is_empty() {
            return Err(Error::InvalidParameter("empty beam vector".into()));
        }
        if let Some(i) = (0..weights.len()).find(|&i| !active[i] && weights[i] != Complex64::new(0.0, 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "element {i} is inactive but carries a nonzero weight"
            )));
        }
        Ok(Self { weights, active })
    }

    /// All elements active.
    pub fn from_weights(weights: Vec<Complex64>) -> Self {
        let active = vec![true; weights.len()];
        Self { weights, active }
    }

    /// Unit-modulus phases scaled by `normalization`; inactive elements get zero.
    pub fn from_phases(phases: &[f64], active: Vec<bool>, normalization: Normalization) -> Result<Self> {
        if phases.len() != active.len() {
            return Err(Error::DimensionMismatch {
                expected: phases.len(),
                got: active.len(),
            });
        }
        let n_active = active.iter().filter(|&&a| a).count();
        if n_active == 0 {
            return Err(Error::InvalidParameter("beam has no active element".into()));
        }
        let amp = normalization.amplitude(phases.len(), n_active);
        let weights = phases
            .iter()
            .zip(&active)
            .map(|(&ph, &on)| {
                if on {
                    Complex64::from_polar(amp, ph)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Ok(Self { weights, active })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt()
    }

    /// True when every active element has modulus `amplitude` within `tol`.
    pub fn has_constant_amplitude(&self, amplitude: f64, tol: f64) -> bool {
        self.weights.iter().zip(&self.active).all(|(w, &on)| {
            if on {
                (w.norm() - amplitude).abs() <= tol
            } else {
                w.norm() == 0.0
            }
        })
    }

    /// `w^H h`.
    pub fn inner(&self, h: &[Complex64]) -> Complex64 {
        self.weights.iter().zip(h).map(|(w, x)| w.conj() * x).sum()
    }

    /// Elementwise product with a unit-modulus ramp given by its phases.
    pub(crate) fn apply_phase_ramp(&self, phase: impl Fn(usize) -> f64) -> Self {
        let weights = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * Complex64::from_polar(1.0, phase(i)))
            .collect();
        Self {
            weights,
            active: self.active.clone(),
        }
    }
}

/// Half-index offsets `(2i - n_w - 1) / 2` for `i = 1..=n_w`.
pub fn element_offsets(cfg: &ArrayConfig) -> Vec<f64> {
    let n = cfg.n_elements() as f64;
    (1..=cfg.n_elements())
        .map(|i| (2.0 * i as f64 - n - 1.0) / 2.0)
        .collect()
}

pub(crate) fn quadratic_phase(cfg: &ArrayConfig, at: Coord, offset: f64) -> f64 {
    PI * cfg.spacing_ratio() * at.theta * offset - PI * cfg.curvature_coefficient() * at.kappa * offset * offset
}

fn exact_phase(cfg: &ArrayConfig, theta: f64, r: f64, offset: f64) -> f64 {
    let x = offset * cfg.spacing();
    let ri = (r * r + x * x - 2.0 * r * theta * x).sqrt();
    // r_i - r without cancellation
    let excess = (x * x - 2.0 * r * theta * x) / (ri + r);
    -2.0 * PI / cfg.wavelength() * excess
}

/// Quadratic-model array response at an arbitrary `(theta, kappa)`.
pub fn quadratic_steering(cfg: &ArrayConfig, at: Coord) -> BeamVector {
    let amp = 1.0 / (cfg.n_elements() as f64).sqrt();
    let weights = element_offsets(cfg)
        .into_iter()
        .map(|off| Complex64::from_polar(amp, quadratic_phase(cfg, at, off)))
        .collect();
    BeamVector::from_weights(weights)
}

pub fn steering_vector(cfg: &ArrayConfig, p: &PolarPoint, model: GainModel) -> Result<BeamVector> {
    match model {
        GainModel::Quadratic => Ok(quadratic_steering(cfg, p.coord())),
        GainModel::Exact => {
            let r = p.range().ok_or(Error::FarFieldExact)?;
            if !(r > 0.0) {
                return Err(Error::InvalidPoint(format!("range must be positive, got {r}")));
            }
            let amp = 1.0 / (cfg.n_elements() as f64).sqrt();
            let weights = element_offsets(cfg)
                .into_iter()
                .map(|off| Complex64::from_polar(amp, exact_phase(cfg, p.theta(), r, off)))
                .collect();
            Ok(BeamVector::from_weights(weights))
        }
    }
}

/// One propagation path: complex gain and scatterer / receiver location.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Path {
    pub gain: Complex64,
    pub location: PolarPoint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    paths: Vec<Path>,
}

impl ChannelRealization {
    pub fn new(paths: Vec<Path>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidParameter("a channel needs at least one path".into()));
        }
        Ok(Self { paths })
    }

    /// Single path with unit gain.
    pub fn line_of_sight(location: PolarPoint) -> Self {
        Self {
            paths: vec![Path {
                gain: Complex64::new(1.0, 0.0),
                location,
            }],
        }
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// `h = sum_l alpha_l a(theta_l, r_l)` with exact-model responses.
pub fn synthesize_channel(cfg: &ArrayConfig, channel: &ChannelRealization) -> Result<Vec<Complex64>> {
    let mut h = vec![Complex64::new(0.0, 0.0); cfg.n_elements()];
    for path in channel.paths() {
        let a = steering_vector(cfg, &path.location, GainModel::Exact)?;
        for (acc, x) in h.iter_mut().zip(a.weights()) {
            *acc += path.gain * x;
        }
    }
    Ok(h)
}

/// `|w^H a(p)|` under the chosen response model.
pub fn beam_gain(cfg: &ArrayConfig, w: &BeamVector, p: &PolarPoint, model: GainModel) -> Result<f64> {
    if w.len() != cfg.n_elements() {
        return Err(Error::DimensionMismatch {
            expected: cfg.n_elements(),
            got: w.len(),
        });
    }
    let a = steering_vector(cfg, p, model)?;
    Ok(w.inner(a.weights()).norm())
}

/// Quadratic-model gain at a raw coordinate; `w` must match the array size.
pub fn quadratic_gain(cfg: &ArrayConfig, w: &BeamVector, at: Coord) -> f64 {
    debug_assert_eq!(w.len(), cfg.n_elements());
    let amp = 1.0 / (cfg.n_elements() as f64).sqrt();
    let n = cfg.n_elements() as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, (wi, &on)) in w.weights().iter().zip(w.active_mask()).enumerate() {
        if !on {
            continue;
        }
        let off = (2.0 * (i + 1) as f64 - n - 1.0) / 2.0;
        acc += wi.conj() * Complex64::from_polar(amp, quadratic_phase(cfg, at, off));
    }
    acc.norm()
}
