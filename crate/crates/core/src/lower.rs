//! Lower codebook of steering beams on equally spaced curvature rings.
//!
//! Ring 0 is the far-field ring (`kappa = 0`); ring `m` sits at
//! `kappa = m / delta`, so in distance every column follows
//! `r = delta * (1 - theta^2) / m`. Directions use the uniform grid
//! `theta_l = -1 + (2l - 1)/n_theta`.

use serde::{Deserialize, Serialize};

use crate::array::{quadratic_gain, quadratic_steering, ArrayConfig, BeamVector, Coord, PolarPoint};
use crate::coverage::{angular_grid, CoverageRegion, SteeringGrid};
use crate::error::{Error, Result};
use crate::steering_gain::{dirichlet, fresnel_steering_gain};

const PRECONDITION_TOL: f64 = 1e-9;
const MAX_RINGS: usize = 64;
const MAX_ANGLE_FACTOR: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerCodebookParams {
    /// Coverage gain threshold.
    pub rho: f64,
    /// Ring spacing `delta` in metres; neighbouring rings differ by `1/delta` in curvature.
    pub ring_spacing: f64,
    pub n_angles: usize,
    /// Ring count including the far-field ring.
    pub n_rings: usize,
}

/// How [`LowerCodebook::min_gain`] evaluates corner gains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CornerModel {
    /// Closed form through Fresnel integrals.
    Fresnel,
    /// Direct summation of the quadratic-model array factor.
    DirectSum,
}

/// One grid of codewords, stored ring-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Level {
    grid: SteeringGrid,
    codewords: Vec<BeamVector>,
}

impl Level {
    pub fn new(grid: SteeringGrid, codewords: Vec<BeamVector>) -> Result<Self> {
        if codewords.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: codewords.len(),
            });
        }
        let n = codewords[0].len();
        if let Some(bad) = codewords.iter().find(|w| w.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        Ok(Self { grid, codewords })
    }

    pub fn grid(&self) -> &SteeringGrid {
        &self.grid
    }

    pub fn codewords(&self) -> &[BeamVector] {
        &self.codewords
    }

    pub fn codeword(&self, ring: usize, angle: usize) -> &BeamVector {
        &self.codewords[self.grid.flat(ring, angle)]
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn n_rings(&self) -> usize {
        self.grid.n_rings()
    }

    pub fn n_angles(&self) -> usize {
        self.grid.n_angles()
    }
}

/// Steering grid for `n_angles` directions and ring spacing `delta`.
///
/// Rings are kept while their curvature stays below the array's maximum
/// curvature; the far-field ring is always present.
pub fn sample_steering_points(cfg: &ArrayConfig, n_angles: usize, delta: f64) -> Result<SteeringGrid> {
    if n_angles == 0 {
        return Err(Error::InvalidParameter("need at least one direction".into()));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ring spacing must be positive, got {delta}"
        )));
    }
    let kappa_max = cfg.max_curvature();
    let mut kappas = vec![0.0];
    for m in 1.. {
        let k = m as f64 / delta;
        if k >= kappa_max {
            break;
        }
        kappas.push(k);
    }
    SteeringGrid::new(angular_grid(n_angles), kappas, kappa_max)
}

/// Boundary between two points on the same ring.
pub fn boundary_theta(p1: &PolarPoint, p2: &PolarPoint) -> Result<f64> {
    if (p1.kappa() - p2.kappa()).abs() > PRECONDITION_TOL {
        return Err(Error::Precondition(format!(
            "points lie on different rings ({} vs {})",
            p1.kappa(),
            p2.kappa()
        )));
    }
    Ok((p1.theta() + p2.theta()) / 2.0)
}

/// Curvature boundary between two points in the same direction.
pub fn boundary_kappa(p1: &PolarPoint, p2: &PolarPoint) -> Result<f64> {
    if (p1.theta() - p2.theta()).abs() > PRECONDITION_TOL {
        return Err(Error::Precondition(format!(
            "points lie in different directions ({} vs {})",
            p1.theta(),
            p2.theta()
        )));
    }
    Ok((p1.kappa() + p2.kappa()) / 2.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowerCodebook {
    cfg: ArrayConfig,
    params: LowerCodebookParams,
    level: Level,
}

impl LowerCodebook {
    /// Codebook on a fixed `n_angles x n_rings` grid with equal-width curvature cells.
    pub fn with_grid(cfg: &ArrayConfig, rho: f64, n_angles: usize, n_rings: usize) -> Result<Self> {
        check_rho(rho)?;
        if n_rings == 0 {
            return Err(Error::InvalidParameter("need at least one ring".into()));
        }
        let delta = (n_rings as f64 - 0.5) / cfg.max_curvature();
        let grid = sample_steering_points(cfg, n_angles, delta)?;
        if grid.n_rings() != n_rings {
            return Err(Error::InvalidParameter(format!(
                "ring spacing {delta} yields {} rings instead of {n_rings}",
                grid.n_rings()
            )));
        }
        Self::from_grid(cfg, rho, delta, grid)
    }

    fn from_grid(cfg: &ArrayConfig, rho: f64, delta: f64, grid: SteeringGrid) -> Result<Self> {
        let codewords = (0..grid.len())
            .map(|i| {
                let (r, a) = grid.unflat(i);
                quadratic_steering(cfg, grid.coord(r, a))
            })
            .collect();
        let params = LowerCodebookParams {
            rho,
            ring_spacing: delta,
            n_angles: grid.n_angles(),
            n_rings: grid.n_rings(),
        };
        Ok(Self {
            cfg: *cfg,
            params,
            level: Level::new(grid, codewords)?,
        })
    }

    /// Reassemble from stored parts; codewords are taken as given.
    pub fn from_parts(cfg: ArrayConfig, params: LowerCodebookParams, level: Level) -> Result<Self> {
        if level.n_angles() != params.n_angles || level.n_rings() != params.n_rings {
            return Err(Error::Format("grid shape disagrees with parameters".into()));
        }
        if level.codewords()[0].len() != cfg.n_elements() {
            return Err(Error::DimensionMismatch {
                expected: cfg.n_elements(),
                got: level.codewords()[0].len(),
            });
        }
        Ok(Self { cfg, params, level })
    }

    pub fn cfg(&self) -> &ArrayConfig {
        &self.cfg
    }

    pub fn params(&self) -> &LowerCodebookParams {
        &self.params
    }

    pub fn level(&self) -> &Level {
        &self.level
    }

    pub fn grid(&self) -> &SteeringGrid {
        self.level.grid()
    }

    pub fn codewords(&self) -> &[BeamVector] {
        self.level.codewords()
    }

    pub fn codeword(&self, ring: usize, angle: usize) -> &BeamVector {
        self.level.codeword(ring, angle)
    }

    pub fn len(&self) -> usize {
        self.level.len()
    }

    pub fn is_empty(&self) -> bool {
        self.level.is_empty()
    }

    pub fn n_angles(&self) -> usize {
        self.params.n_angles
    }

    pub fn n_rings(&self) -> usize {
        self.params.n_rings
    }

    pub fn steering_point(&self, ring: usize, angle: usize) -> PolarPoint {
        let c = self.grid().coord(ring, angle);
        PolarPoint::from_curvature(c.theta, c.kappa).expect("grid directions lie strictly inside (-1, 1)")
    }

    pub fn coverage_region(&self, ring: usize, angle: usize) -> Result<CoverageRegion> {
        self.grid().region(ring, angle)
    }

    /// Smallest gain of a codeword over the corners of its coverage region.
    pub fn min_gain(&self, ring: usize, angle: usize, model: CornerModel) -> Result<f64> {
        let region = self.coverage_region(ring, angle)?;
        let steer = self.grid().coord(ring, angle);
        let w = self.codeword(ring, angle);
        Ok(region
            .corners()
            .into_iter()
            .map(|c| corner_gain(&self.cfg, steer, w, c, model))
            .fold(f64::INFINITY, f64::min))
    }

    /// Minimum of [`Self::min_gain`] over all cells.
    pub fn worst_corner_gain(&self, model: CornerModel) -> f64 {
        (0..self.len())
            .map(|i| {
                let (r, a) = self.grid().unflat(i);
                self.min_gain(r, a, model).expect("in range")
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn corner_gain(cfg: &ArrayConfig, steer: Coord, w: &BeamVector, at: Coord, model: CornerModel) -> f64 {
    match model {
        CornerModel::Fresnel => fresnel_steering_gain(cfg, steer, at),
        CornerModel::DirectSum => quadratic_gain(cfg, w, at),
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "coverage threshold must lie in (0, 1), got {rho}"
        )));
    }
    Ok(())
}

/// Worst closed-form corner gain of a grid, without building codewords.
fn grid_corner_gain(cfg: &ArrayConfig, grid: &SteeringGrid) -> f64 {
    let mut worst = f64::INFINITY;
    for r in 0..grid.n_rings() {
        for a in 0..grid.n_angles() {
            let region = grid.region(r, a).expect("in range");
            let steer = grid.coord(r, a);
            for c in region.corners() {
                worst = worst.min(fresnel_steering_gain(cfg, steer, c));
            }
        }
    }
    worst
}

/// Smallest codebook meeting the coverage threshold `rho`.
///
/// Direction counts run over powers of two from `n_w` up to `16 n_w`; for
/// each, ring counts grow from one until every cell corner reaches `rho`.
/// Candidates are ordered lexicographically by `(n_angles, n_rings)`.
pub fn build_lower_codebook(cfg: &ArrayConfig, rho: f64) -> Result<LowerCodebook> {
    check_rho(rho)?;
    let first = cfg.n_elements().next_power_of_two();
    let mut n_angles = first;
    while n_angles <= MAX_ANGLE_FACTOR * first {
        // the far-field ring's lower corners sit half a cell off in direction
        let edge = dirichlet(cfg.spacing_ratio() / n_angles as f64, cfg.n_elements());
        if edge >= rho {
            for n_rings in 1..=MAX_RINGS {
                let delta = (n_rings as f64 - 0.5) / cfg.max_curvature();
                let grid = sample_steering_points(cfg, n_angles, delta)?;
                if grid.n_rings() != n_rings {
                    continue;
                }
                if grid_corner_gain(cfg, &grid) >= rho {
                    return LowerCodebook::from_grid(cfg, rho, delta, grid);
                }
            }
        }
        n_angles *= 2;
    }
    Err(Error::ScheduleExhausted(format!(
        "no grid up to {} directions and {MAX_RINGS} rings reaches gain {rho}",
        MAX_ANGLE_FACTOR * first
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::check_partition;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rings_in_distance_ratio() {
        let cfg = ArrayConfig::reference();
        let grid = sample_steering_points(&cfg, 512, 4.5 / cfg.max_curvature()).unwrap();
        assert_eq!(grid.n_rings(), 5);
        let k = grid.kappas();
        assert_eq!(k[0], 0.0);
        // r at broadside is 1/kappa
        assert_abs_diff_eq!((1.0 / k[1]) / (1.0 / k[2]), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn sampling_rejects_bad_input() {
        let cfg = ArrayConfig::reference();
        assert!(sample_steering_points(&cfg, 0, 1.0).is_err());
        assert!(sample_steering_points(&cfg, 4, 0.0).is_err());
        assert!(sample_steering_points(&cfg, 4, -1.0).is_err());
    }

    #[test]
    fn boundaries() {
        let k = 0.1;
        let p1 = PolarPoint::from_curvature(0.2, k).unwrap();
        let p2 = PolarPoint::from_curvature(0.4, k).unwrap();
        assert_abs_diff_eq!(boundary_theta(&p1, &p2).unwrap(), 0.3, epsilon = 1e-15);
        assert!(boundary_kappa(&p1, &p2).is_err());

        let q1 = PolarPoint::from_range(0.0, 10.0).unwrap();
        let q2 = PolarPoint::from_range(0.0, 30.0).unwrap();
        assert_abs_diff_eq!(boundary_kappa(&q1, &q2).unwrap(), 1.0 / 15.0, epsilon = 1e-15);
        assert!(boundary_theta(&q1, &q2).is_err());
        assert_eq!(boundary_kappa(&q1, &q1).unwrap(), q1.kappa());
    }

    #[test]
    fn corner_cell_touches_domain_edge() {
        let cfg = ArrayConfig::reference();
        let cb = LowerCodebook::with_grid(&cfg, 0.64, 512, 5).unwrap();
        let r = cb.coverage_region(0, 0).unwrap();
        assert_eq!(r.theta_lo, -1.0);
        assert_eq!(r.kappa_lo, 0.0);
        let top = cb.coverage_region(4, 511).unwrap();
        assert_eq!(top.theta_hi, 1.0);
        assert_eq!(top.kappa_hi, cfg.max_curvature());
        assert!(check_partition(&cb.grid().regions(), &cb.grid().domain()).is_exact());
    }

    #[test]
    fn shared_boundary_gains_match() {
        let cfg = ArrayConfig::reference();
        let cb = LowerCodebook::with_grid(&cfg, 0.64, 512, 5).unwrap();
        let left = cb.grid().coord(2, 100);
        let right = cb.grid().coord(2, 101);
        let edge = Coord::new(cb.coverage_region(2, 100).unwrap().theta_hi, left.kappa);
        let gl = fresnel_steering_gain(&cfg, left, edge);
        let gr = fresnel_steering_gain(&cfg, right, edge);
        assert_abs_diff_eq!(gl, gr, epsilon = 1e-6);
    }

    #[test]
    fn corner_models_agree() {
        let cfg = ArrayConfig::new(64, 40e9).unwrap();
        let cb = LowerCodebook::with_grid(&cfg, 0.64, 128, 3).unwrap();
        for &(r, a) in &[(0, 0), (1, 40), (2, 127)] {
            let f = cb.min_gain(r, a, CornerModel::Fresnel).unwrap();
            let d = cb.min_gain(r, a, CornerModel::DirectSum).unwrap();
            assert!((f - d).abs() < 0.03, "cell ({r}, {a}): {f} vs {d}");
        }
    }

    #[test]
    fn tiny_threshold_needs_one_ring() {
        let cfg = ArrayConfig::reference();
        let cb = build_lower_codebook(&cfg, 1e-3).unwrap();
        assert_eq!(cb.n_angles(), 256);
        assert_eq!(cb.n_rings(), 1);
    }

    #[test]
    fn unreachable_threshold_is_reported() {
        let cfg = ArrayConfig::new(16, 40e9).unwrap();
        assert!(matches!(
            build_lower_codebook(&cfg, 0.999_999),
            Err(Error::ScheduleExhausted(_))
        ));
        assert!(build_lower_codebook(&cfg, 1.0).is_err());
    }
}
