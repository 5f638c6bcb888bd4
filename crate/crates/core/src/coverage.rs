//! Coverage cells in the `(theta, kappa)` plane.
//!
//! Every codebook level is a product grid: a set of steering directions and a
//! set of ring curvatures. Each codeword owns the rectangle bounded by the
//! midpoints to its neighbours, with the outermost cells stretched to the
//! domain edges. Cells are half-open, `[lo, hi)` in both coordinates.

use serde::{Deserialize, Serialize};

use crate::array::Coord;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageRegion {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub kappa_lo: f64,
    pub kappa_hi: f64,
}

impl CoverageRegion {
    pub fn contains(&self, c: Coord) -> bool {
        self.theta_lo <= c.theta && c.theta < self.theta_hi && self.kappa_lo <= c.kappa && c.kappa < self.kappa_hi
    }

    /// Overlap of positive area.
    pub fn overlaps(&self, other: &CoverageRegion) -> bool {
        self.theta_lo.max(other.theta_lo) < self.theta_hi.min(other.theta_hi)
            && self.kappa_lo.max(other.kappa_lo) < self.kappa_hi.min(other.kappa_hi)
    }

    pub fn corners(&self) -> [Coord; 4] {
        [
            Coord::new(self.theta_lo, self.kappa_lo),
            Coord::new(self.theta_lo, self.kappa_hi),
            Coord::new(self.theta_hi, self.kappa_lo),
            Coord::new(self.theta_hi, self.kappa_hi),
        ]
    }

    pub fn area(&self) -> f64 {
        (self.theta_hi - self.theta_lo) * (self.kappa_hi - self.kappa_lo)
    }
}

/// `theta_l = -1 + (2l - 1)/n` for `l = 1..=n`.
pub fn angular_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|l| -1.0 + (2 * l - 1) as f64 / n as f64).collect()
}

/// Midpoint between two neighbouring grid values. Both cells sharing the
/// boundary call this with the same argument order, so the boundary is
/// bit-identical on either side.
fn midpoint(left: f64, right: f64) -> f64 {
    (left + right) / 2.0
}

/// Directions times ring curvatures, both strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct SteeringGrid {
    thetas: Vec<f64>,
    kappas: Vec<f64>,
    kappa_max: f64,
}

impl SteeringGrid {
    pub fn new(thetas: Vec<f64>, kappas: Vec<f64>, kappa_max: f64) -> Result<Self> {
        if thetas.is_empty() || kappas.is_empty() {
            return Err(Error::InvalidParameter(
                "grid needs at least one direction and one ring".into(),
            ));
        }
        if thetas.windows(2).any(|w| w[0] >= w[1]) || kappas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "grid coordinates must be strictly increasing".into(),
            ));
        }
        if thetas[0] < -1.0 || *thetas.last().unwrap() > 1.0 {
            return Err(Error::InvalidParameter("directions must lie in [-1, 1]".into()));
        }
        if kappas[0] != 0.0 {
            return Err(Error::InvalidParameter(
                "the first ring must be the far-field ring".into(),
            ));
        }
        if !(kappa_max > *kappas.last().unwrap()) {
            return Err(Error::InvalidParameter(format!(
                "innermost ring {} must lie below the curvature limit {kappa_max}",
                kappas.last().unwrap()
            )));
        }
        Ok(Self {
            thetas,
            kappas,
            kappa_max,
        })
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn kappas(&self) -> &[f64] {
        &self.kappas
    }

    pub fn kappa_max(&self) -> f64 {
        self.kappa_max
    }

    pub fn n_angles(&self) -> usize {
        self.thetas.len()
    }

    pub fn n_rings(&self) -> usize {
        self.kappas.len()
    }

    pub fn len(&self) -> usize {
        self.n_angles() * self.n_rings()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Ring-major flat index, so flat order is lexicographic in `(ring, angle)`.
    pub fn flat(&self, ring: usize, angle: usize) -> usize {
        ring * self.n_angles() + angle
    }

    pub fn unflat(&self, index: usize) -> (usize, usize) {
        (index / self.n_angles(), index % self.n_angles())
    }

    pub fn coord(&self, ring: usize, angle: usize) -> Coord {
        Coord::new(self.thetas[angle], self.kappas[ring])
    }

    fn check(&self, ring: usize, angle: usize) -> Result<()> {
        if ring >= self.n_rings() || angle >= self.n_angles() {
            return Err(Error::InvalidParameter(format!(
                "cell ({ring}, {angle}) outside a {}x{} grid",
                self.n_rings(),
                self.n_angles()
            )));
        }
        Ok(())
    }

    pub fn theta_bounds(&self, angle: usize) -> (f64, f64) {
        let t = &self.thetas;
        let lo = if angle == 0 {
            -1.0
        } else {
            midpoint(t[angle - 1], t[angle])
        };
        let hi = if angle + 1 == t.len() {
            1.0
        } else {
            midpoint(t[angle], t[angle + 1])
        };
        (lo, hi)
    }

    pub fn kappa_bounds(&self, ring: usize) -> (f64, f64) {
        let k = &self.kappas;
        let lo = if ring == 0 { 0.0 } else { midpoint(k[ring - 1], k[ring]) };
        let hi = if ring + 1 == k.len() {
            self.kappa_max
        } else {
            midpoint(k[ring], k[ring + 1])
        };
        (lo, hi)
    }

    pub fn region(&self, ring: usize, angle: usize) -> Result<CoverageRegion> {
        self.check(ring, angle)?;
        let (theta_lo, theta_hi) = self.theta_bounds(angle);
        let (kappa_lo, kappa_hi) = self.kappa_bounds(ring);
        Ok(CoverageRegion {
            theta_lo,
            theta_hi,
            kappa_lo,
            kappa_hi,
        })
    }

    pub fn regions(&self) -> Vec<CoverageRegion> {
        (0..self.n_rings())
            .flat_map(|r| (0..self.n_angles()).map(move |a| (r, a)))
            .map(|(r, a)| self.region(r, a).expect("in range"))
            .collect()
    }

    pub fn domain(&self) -> CoverageRegion {
        CoverageRegion {
            theta_lo: -1.0,
            theta_hi: 1.0,
            kappa_lo: 0.0,
            kappa_hi: self.kappa_max,
        }
    }

    /// Cell containing `c`, if any.
    pub fn locate(&self, c: Coord) -> Option<(usize, usize)> {
        let angle = (0..self.n_angles()).find(|&a| {
            let (lo, hi) = self.theta_bounds(a);
            lo <= c.theta && (c.theta < hi || (hi == 1.0 && c.theta == 1.0))
        })?;
        let ring = (0..self.n_rings()).find(|&r| {
            let (lo, hi) = self.kappa_bounds(r);
            lo <= c.kappa && c.kappa < hi
        })?;
        Some((ring, angle))
    }

    /// Flat indices of cells in `other` overlapping cell `(ring, angle)` of `self`.
    pub fn overlapping(&self, ring: usize, angle: usize, other: &SteeringGrid) -> Vec<usize> {
        let (t_lo, t_hi) = self.theta_bounds(angle);
        let (k_lo, k_hi) = self.kappa_bounds(ring);
        let angles: Vec<usize> = (0..other.n_angles())
            .filter(|&a| {
                let (lo, hi) = other.theta_bounds(a);
                t_lo.max(lo) < t_hi.min(hi)
            })
            .collect();
        let mut out = Vec::new();
        for r in 0..other.n_rings() {
            let (lo, hi) = other.kappa_bounds(r);
            if k_lo.max(lo) < k_hi.min(hi) {
                out.extend(angles.iter().map(|&a| other.flat(r, a)));
            }
        }
        out
    }
}

/// Outcome of a partition check. Measures are exact sums of rectangle areas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub gap_area: f64,
    pub overlap_area: f64,
    pub outside_area: f64,
    pub covered_area: f64,
}

impl PartitionReport {
    pub fn is_exact(&self) -> bool {
        self.gap_area == 0.0 && self.overlap_area == 0.0 && self.outside_area == 0.0
    }
}

/// Sweep over `theta` slabs and chain the `kappa` intervals in each slab.
///
/// Slabs are delimited by every `theta` endpoint, so each region either spans
/// a slab completely or misses it. Within a slab the intervals are sorted and
/// walked from `domain.kappa_lo`; any skipped stretch is a gap, any re-covered
/// stretch an overlap. All comparisons are exact.
pub fn check_partition(regions: &[CoverageRegion], domain: &CoverageRegion) -> PartitionReport {
    let mut report = PartitionReport {
        gap_area: 0.0,
        overlap_area: 0.0,
        outside_area: 0.0,
        covered_area: 0.0,
    };

    let mut cuts: Vec<f64> = vec![domain.theta_lo, domain.theta_hi];
    for r in regions {
        cuts.push(r.theta_lo.clamp(domain.theta_lo, domain.theta_hi));
        cuts.push(r.theta_hi.clamp(domain.theta_lo, domain.theta_hi));

        let inside = CoverageRegion {
            theta_lo: r.theta_lo.max(domain.theta_lo),
            theta_hi: r.theta_hi.min(domain.theta_hi),
            kappa_lo: r.kappa_lo.max(domain.kappa_lo),
            kappa_hi: r.kappa_hi.min(domain.kappa_hi),
        };
        let inside_area = if inside.theta_lo < inside.theta_hi && inside.kappa_lo < inside.kappa_hi {
            inside.area()
        } else {
            0.0
        };
        report.outside_area += (r.area() - inside_area).max(0.0);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    for slab in cuts.windows(2) {
        let (a, b) = (slab[0], slab[1]);
        let width = b - a;
        let mut spans: Vec<(f64, f64)> = regions
            .iter()
            .filter(|r| r.theta_lo <= a && b <= r.theta_hi)
            .map(|r| (r.kappa_lo.max(domain.kappa_lo), r.kappa_hi.min(domain.kappa_hi)))
            .filter(|(lo, hi)| lo < hi)
            .collect();
        spans.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut cursor = domain.kappa_lo;
        for (lo, hi) in spans {
            if lo > cursor {
                report.gap_area += (lo - cursor) * width;
            } else if lo < cursor {
                report.overlap_area += (hi.min(cursor) - lo) * width;
            }
            if hi > cursor {
                report.covered_area += (hi - lo.max(cursor)) * width;
                cursor = hi;
            }
        }
        if cursor < domain.kappa_hi {
            report.gap_area += (domain.kappa_hi - cursor) * width;
        }
    }
    report
}
