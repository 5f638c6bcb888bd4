//! Beam rotation and relocation.
//!
//! Multiplying a beam by a unit-modulus linear phase ramp translates its
//! quadratic-model gain pattern along `theta`; a quadratic ramp translates it
//! along `kappa`. Both maps are exact translations in `(theta, kappa)`:
//!
//! ```text
//! rotate(w, dt)    : g'(theta, kappa) = g(theta - dt, kappa)
//! relocate(w, dr)  : g'(theta, kappa) = g(theta, kappa - 1/dr)
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::array::{element_offsets, ArrayConfig, BeamVector, Coord, PolarPoint};
use crate::coverage::CoverageRegion;
use crate::error::{Error, Result};

/// `w` times the far-field ramp towards `delta_theta`.
pub fn rotate(cfg: &ArrayConfig, w: &BeamVector, delta_theta: f64) -> Result<BeamVector> {
    check_len(cfg, w)?;
    let offsets = element_offsets(cfg);
    let k = PI * cfg.spacing_ratio() * delta_theta;
    Ok(w.apply_phase_ramp(|i| k * offsets[i]))
}

/// `w` times the quadratic ramp focused at broadside distance `delta_r`.
///
/// `delta_r = inf` is the identity; negative distances defocus.
pub fn relocate(cfg: &ArrayConfig, w: &BeamVector, delta_r: f64) -> Result<BeamVector> {
    relocate_curvature(cfg, w, curvature_shift(delta_r)?)
}

/// Relocation expressed directly as a curvature shift `1/delta_r`.
pub fn relocate_curvature(cfg: &ArrayConfig, w: &BeamVector, shift: f64) -> Result<BeamVector> {
    check_len(cfg, w)?;
    if !shift.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "curvature shift must be finite, got {shift}"
        )));
    }
    let offsets = element_offsets(cfg);
    let k = -PI * cfg.curvature_coefficient() * shift;
    Ok(w.apply_phase_ramp(|i| k * offsets[i] * offsets[i]))
}

fn curvature_shift(delta_r: f64) -> Result<f64> {
    if delta_r.is_nan() || delta_r == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "relocation distance must be nonzero, got {delta_r}"
        )));
    }
    Ok(if delta_r.is_infinite() { 0.0 } else { 1.0 / delta_r })
}

fn check_len(cfg: &ArrayConfig, w: &BeamVector) -> Result<()> {
    if w.len() != cfg.n_elements() {
        return Err(Error::DimensionMismatch {
            expected: cfg.n_elements(),
            got: w.len(),
        });
    }
    Ok(())
}

/// Rotation followed by relocation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub rotation: f64,
    /// Relocation distance in metres; infinite for none.
    pub relocation: f64,
}

impl Default for TransformSpec {
    fn default() -> Self {
        Self {
            rotation: 0.0,
            relocation: f64::INFINITY,
        }
    }
}

impl TransformSpec {
    pub fn apply(&self, cfg: &ArrayConfig, w: &BeamVector) -> Result<BeamVector> {
        relocate(cfg, &rotate(cfg, w, self.rotation)?, self.relocation)
    }

    /// Where a point of the transformed pattern reads the original pattern.
    pub fn map(&self, c: Coord) -> Result<Coord> {
        Ok(Coord::new(
            c.theta - self.rotation,
            c.kappa - curvature_shift(self.relocation)?,
        ))
    }
}

/// Mapped location, possibly outside the physical domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MappedPoint {
    pub coord: Coord,
    /// Negative curvature, or a direction outside `[-1, 1]`.
    pub is_virtual: bool,
}

impl MappedPoint {
    fn new(coord: Coord) -> Self {
        let edge_with_curvature = coord.theta.abs() == 1.0 && coord.kappa > 0.0;
        let is_virtual = coord.kappa < 0.0 || coord.theta.abs() > 1.0 || edge_with_curvature || coord.theta.is_nan();
        Self { coord, is_virtual }
    }

    pub fn to_point(&self) -> Option<PolarPoint> {
        if self.is_virtual {
            return None;
        }
        PolarPoint::from_curvature(self.coord.theta, self.coord.kappa).ok()
    }
}

/// `(theta, kappa) -> (theta - delta_theta, kappa)`.
pub fn map_point_rotation(p: &PolarPoint, delta_theta: f64) -> MappedPoint {
    MappedPoint::new(Coord::new(p.theta() - delta_theta, p.kappa()))
}

/// `(theta, kappa) -> (theta, kappa - 1/delta_r)`.
pub fn map_point_relocation(p: &PolarPoint, delta_r: f64) -> Result<MappedPoint> {
    Ok(MappedPoint::new(Coord::new(
        p.theta(),
        p.kappa() - curvature_shift(delta_r)?,
    )))
}

/// Coverage of a rotated beam, given the coverage of the original.
pub fn rotate_region(region: &CoverageRegion, delta_theta: f64) -> CoverageRegion {
    CoverageRegion {
        theta_lo: region.theta_lo + delta_theta,
        theta_hi: region.theta_hi + delta_theta,
        ..*region
    }
}

/// Coverage of a beam relocated by the curvature shift `shift`.
pub fn relocate_region(region: &CoverageRegion, shift: f64) -> CoverageRegion {
    CoverageRegion {
        kappa_lo: region.kappa_lo + shift,
        kappa_hi: region.kappa_hi + shift,
        ..*region
    }
}
