//! Wide-beam upper levels and the parent/child structure of a hierarchy.
//!
//! Level `l` (1-based) starts from one initial pattern covering a sector of
//! width `2 / 2^l` around broadside in the far field. Copies of it are
//! relocated onto a ring schedule derived from the pattern's own curvature
//! profile and rotated to the `2^l` sector centres. The last level is the
//! lower codebook.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::array::{element_offsets, quadratic_gain, ArrayConfig, BeamVector, Coord, Normalization};
use crate::coverage::{angular_grid, SteeringGrid};
use crate::error::{Error, Result};
use crate::lower::{Level, LowerCodebook};
use crate::transform::{relocate_curvature, rotate};

const PROFILE_SCAN_POINTS: usize = 400;
const BISECTION_STEPS: usize = 80;
const PHASE_STEPS: usize = 32;
const SECTOR_PROBES: usize = 65;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    Deact,
    #[serde(rename = "bmwss", alias = "bmw-ss")]
    BmwSs,
    Quadric,
}

impl PatternKind {
    pub const ALL: [PatternKind; 3] = [PatternKind::Deact, PatternKind::BmwSs, PatternKind::Quadric];

    pub fn as_str(self) -> &'static str {
        match self {
            PatternKind::Deact => "deact",
            PatternKind::BmwSs => "bmwss",
            PatternKind::Quadric => "quadric",
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "deact" => Ok(PatternKind::Deact),
            "bmwss" | "bmw-ss" | "bmw_ss" => Ok(PatternKind::BmwSs),
            "quadric" => Ok(PatternKind::Quadric),
            other => Err(Error::InvalidParameter(format!(
                "unknown pattern '{other}', expected deact, bmwss or quadric"
            ))),
        }
    }
}

fn sector_count(cfg: &ArrayConfig, level: u32) -> Result<usize> {
    let m = 1usize
        .checked_shl(level)
        .filter(|&m| m <= cfg.n_elements())
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "level {level} needs 2^{level} <= {} elements",
                cfg.n_elements()
            ))
        })?;
    Ok(m)
}

/// Broadside beam of the `2^level` centre elements.
pub fn deact_pattern(cfg: &ArrayConfig, level: u32, normalization: Normalization) -> Result<BeamVector> {
    let m = sector_count(cfg, level)?;
    let n = cfg.n_elements();
    let start = (n - m) / 2;
    let active: Vec<bool> = (0..n).map(|i| i >= start && i < start + m).collect();
    BeamVector::from_phases(&vec![0.0; n], active, normalization)
}

/// Sub-array layout `(n_sub, n_active_sub, sub_size)` for a level.
fn bmwss_layout(cfg: &ArrayConfig, level: u32) -> Result<(usize, usize, usize)> {
    sector_count(cfg, level)?;
    let n = cfg.n_elements();
    if !n.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "sub-array split needs a power-of-two array, got {n} elements"
        )));
    }
    let k = n.trailing_zeros();
    let rest = k - level;
    let (n_sub, n_active) = if rest.is_multiple_of(2) {
        let s = 1usize << (rest / 2);
        (s, s)
    } else {
        let s = 1usize << rest.div_ceil(2);
        (s, s / 2)
    };
    Ok((n_sub, n_active, n / n_sub))
}

/// Sub-arrays steered side by side across the sector, phase-stitched.
///
/// The array is split into `N_S` sub-arrays of `M` elements; a centred block
/// of `N_A` of them is switched on, each steered to its own slice of the
/// sector. Sub-array offsets first keep the phase continuous across each
/// junction, then an extra `phi * i + psi * (i - mid)^2` is tuned by a
/// coordinate search over a fixed phase grid, maximising the smallest
/// far-field gain in the sector.
pub fn bmwss_pattern(cfg: &ArrayConfig, level: u32, normalization: Normalization) -> Result<BeamVector> {
    let (n_sub, n_active, size) = bmwss_layout(cfg, level)?;
    let n = cfg.n_elements();
    let s = cfg.spacing_ratio();
    let width = 2.0 / (1usize << level) as f64;
    let offsets = element_offsets(cfg);
    let first = (n_sub - n_active) / 2;
    let mid = (n_active as f64 - 1.0) / 2.0;
    let pi = std::f64::consts::PI;

    let centres: Vec<f64> = (0..n_active)
        .map(|i| -width / 2.0 + (2 * i + 1) as f64 / size as f64)
        .collect();
    let mut stitch = vec![0.0; n_active];
    for i in 1..n_active {
        let last = (first + i) * size - 1;
        let junction = 0.5 * (offsets[last] + offsets[last + 1]);
        stitch[i] = stitch[i - 1] - pi * (centres[i] - centres[i - 1]) * junction;
    }

    let build = |phi: f64, psi: f64| -> Result<BeamVector> {
        let mut phases = vec![0.0; n];
        let mut active = vec![false; n];
        for i in 0..n_active {
            let base = (first + i) * size;
            let extra = stitch[i] + phi * i as f64 + psi * (i as f64 - mid).powi(2);
            for e in base..base + size {
                active[e] = true;
                phases[e] = pi * centres[i] * offsets[e] + extra;
            }
        }
        BeamVector::from_phases(&phases, active, normalization)
    };

    // a few probes per resolution cell of the active aperture
    let cells = (n_active * size) as f64 * width / 2.0;
    let n_probes = SECTOR_PROBES.max(8 * cells.ceil() as usize + 1);
    let probes: Vec<Coord> = (0..n_probes)
        .map(|j| {
            let b = -width / 2.0 + width * j as f64 / (n_probes - 1) as f64;
            Coord::new(b / s, 0.0)
        })
        .collect();
    let score = |w: &BeamVector| {
        probes
            .iter()
            .map(|&c| quadratic_gain(cfg, w, c))
            .fold(f64::INFINITY, f64::min)
    };
    let step = |q: usize| pi * q as f64 / (PHASE_STEPS / 2) as f64 - pi;

    // coordinate search: phi, then psi, then phi again
    let (mut phi, mut psi) = (0.0, 0.0);
    let mut best = (score(&build(phi, psi)?), build(phi, psi)?);
    for pass in 0..3 {
        // psi is idle with two sub-arrays and phi with one
        let tunes_phi = pass != 1;
        if (tunes_phi && n_active < 2) || (!tunes_phi && n_active < 3) {
            continue;
        }
        let (mut bp, mut bq) = (phi, psi);
        for q in 0..PHASE_STEPS {
            let (a, b) = if tunes_phi { (step(q), psi) } else { (phi, step(q)) };
            let w = build(a, b)?;
            let g = score(&w);
            if g > best.0 {
                best = (g, w);
                (bp, bq) = (a, b);
            }
        }
        (phi, psi) = (bp, bq);
    }
    Ok(best.1)
}

/// Full-array chirp `exp(j pi a_q n^2) / sqrt(n_w)` spreading the beam over the sector.
pub fn quadric_pattern(cfg: &ArrayConfig, level: u32) -> Result<BeamVector> {
    let m = sector_count(cfg, level)?;
    let n = cfg.n_elements();
    let width = 2.0 / m as f64;
    let a_q = cfg.spacing_ratio() * width / (2.0 * n as f64);
    let phases: Vec<f64> = element_offsets(cfg)
        .into_iter()
        .map(|o| std::f64::consts::PI * a_q * o * o)
        .collect();
    BeamVector::from_phases(&phases, vec![true; n], Normalization::FullArray)
}

pub fn initial_pattern(
    cfg: &ArrayConfig,
    kind: PatternKind,
    level: u32,
    normalization: Normalization,
) -> Result<BeamVector> {
    match kind {
        PatternKind::Deact => deact_pattern(cfg, level, normalization),
        PatternKind::BmwSs => bmwss_pattern(cfg, level, normalization),
        PatternKind::Quadric => quadric_pattern(cfg, level),
    }
}

/// Equally spaced ring curvatures for relocated copies of `w`.
///
/// The spacing is the smallest curvature offset at which the broadside gain
/// of `w` drops to `fraction` of its far-field value. A pattern that never
/// drops that far within the Fresnel region gets the far-field ring only.
pub fn ring_schedule(cfg: &ArrayConfig, w: &BeamVector, fraction: f64) -> Result<Vec<f64>> {
    if w.len() != cfg.n_elements() {
        return Err(Error::DimensionMismatch {
            expected: cfg.n_elements(),
            got: w.len(),
        });
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gain fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let profile = |k: f64| quadratic_gain(cfg, w, Coord::new(0.0, k));
    let peak = profile(0.0);
    if !(peak > 0.0) {
        return Err(Error::Precondition(
            "pattern has no broadside gain in the far field".into(),
        ));
    }
    let target = fraction * peak;
    let kappa_max = cfg.max_curvature();

    let mut prev = 0.0;
    let mut crossing = None;
    for j in 1..=PROFILE_SCAN_POINTS {
        let k = kappa_max * j as f64 / PROFILE_SCAN_POINTS as f64;
        if profile(k) <= target {
            crossing = Some((prev, k));
            break;
        }
        prev = k;
    }
    let Some((mut lo, mut hi)) = crossing else {
        return Ok(vec![0.0]);
    };
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if profile(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let step = hi;
    Ok((0..).map(|m| m as f64 * step).take_while(|&k| k < kappa_max).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyConfig {
    /// Total level count; the last level is the lower codebook.
    pub n_levels: usize,
    pub pattern: PatternKind,
    #[serde(default = "default_fraction")]
    pub half_gain_fraction: f64,
    #[serde(default)]
    pub normalization: Normalization,
}

fn default_fraction() -> f64 {
    0.5
}

impl HierarchyConfig {
    pub fn new(n_levels: usize, pattern: PatternKind) -> Self {
        Self {
            n_levels,
            pattern,
            half_gain_fraction: default_fraction(),
            normalization: Normalization::default(),
        }
    }

    /// Directions on upper level `l` (1-based).
    pub fn n_angles(&self, level: usize) -> usize {
        1 << level
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HierarchicalCodebook {
    config: HierarchyConfig,
    upper: Vec<Level>,
    lower: LowerCodebook,
    /// `children[l][i]`: flat indices on level `l + 1` below codeword `i` of level `l`.
    children: Vec<Vec<Vec<usize>>>,
}

impl HierarchicalCodebook {
    /// Validate and assemble; used by construction and by deserialisation.
    pub fn from_parts(
        config: HierarchyConfig,
        upper: Vec<Level>,
        lower: LowerCodebook,
        children: Vec<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        if config.n_levels == 0 || upper.len() + 1 != config.n_levels {
            return Err(Error::Hierarchy(format!(
                "{} upper levels do not match a {}-level hierarchy",
                upper.len(),
                config.n_levels
            )));
        }
        if children.len() != upper.len() {
            return Err(Error::Hierarchy(
                "one children table per upper level is required".into(),
            ));
        }
        let cb = Self {
            config,
            upper,
            lower,
            children,
        };
        for l in 0..cb.upper.len() {
            let below = cb.level(l + 1).len();
            let table = &cb.children[l];
            if table.len() != cb.upper[l].len() {
                return Err(Error::Hierarchy(format!(
                    "children table of level {} has wrong length",
                    l + 1
                )));
            }
            let mut has_parent = vec![false; below];
            for (i, kids) in table.iter().enumerate() {
                if kids.is_empty() {
                    return Err(Error::Hierarchy(format!(
                        "codeword {i} on level {} has no child",
                        l + 1
                    )));
                }
                for &k in kids {
                    let slot = has_parent
                        .get_mut(k)
                        .ok_or_else(|| Error::Hierarchy(format!("child index {k} out of range on level {}", l + 2)))?;
                    *slot = true;
                }
            }
            if let Some(orphan) = has_parent.iter().position(|&p| !p) {
                return Err(Error::Hierarchy(format!(
                    "codeword {orphan} on level {} has no parent",
                    l + 2
                )));
            }
        }
        Ok(cb)
    }

    pub fn config(&self) -> &HierarchyConfig {
        &self.config
    }

    pub fn cfg(&self) -> &ArrayConfig {
        self.lower.cfg()
    }

    pub fn n_levels(&self) -> usize {
        self.upper.len() + 1
    }

    /// Level by 0-based index; the last one is the lower codebook.
    pub fn level(&self, index: usize) -> &Level {
        if index < self.upper.len() {
            &self.upper[index]
        } else {
            self.lower.level()
        }
    }

    pub fn upper_levels(&self) -> &[Level] {
        &self.upper
    }

    pub fn lower(&self) -> &LowerCodebook {
        &self.lower
    }

    pub fn children(&self, level: usize, index: usize) -> &[usize] {
        &self.children[level][index]
    }

    pub fn children_table(&self) -> &[Vec<Vec<usize>>] {
        &self.children
    }

    /// Ring counts per level, lower codebook last.
    pub fn ring_counts(&self) -> Vec<usize> {
        (0..self.n_levels()).map(|l| self.level(l).n_rings()).collect()
    }
}

/// Build every upper level from the configured initial pattern and link
/// each codeword to the next-level cells its coverage overlaps.
pub fn build_hierarchy(
    cfg: &ArrayConfig,
    hcfg: &HierarchyConfig,
    lower: LowerCodebook,
) -> Result<HierarchicalCodebook> {
    if lower.cfg() != cfg {
        return Err(Error::Hierarchy(
            "lower codebook was built for a different array".into(),
        ));
    }
    if hcfg.n_levels == 0 {
        return Err(Error::Hierarchy("a hierarchy needs at least the lower level".into()));
    }
    let kappa_max = cfg.max_curvature();
    let mut upper = Vec::with_capacity(hcfg.n_levels - 1);
    for l in 1..hcfg.n_levels {
        let w_ori = initial_pattern(cfg, hcfg.pattern, l as u32, hcfg.normalization)?;
        let rings = ring_schedule(cfg, &w_ori, hcfg.half_gain_fraction)?;
        let grid = SteeringGrid::new(angular_grid(hcfg.n_angles(l)), rings, kappa_max)?;
        let mut codewords = Vec::with_capacity(grid.len());
        for &kappa in grid.kappas() {
            let relocated = relocate_curvature(cfg, &w_ori, kappa)?;
            for &theta in grid.thetas() {
                codewords.push(rotate(cfg, &relocated, theta)?);
            }
        }
        upper.push(Level::new(grid, codewords)?);
    }

    let mut children = Vec::with_capacity(upper.len());
    for l in 0..upper.len() {
        let here = upper[l].grid();
        let below = if l + 1 < upper.len() {
            upper[l + 1].grid()
        } else {
            lower.grid()
        };
        let table: Vec<Vec<usize>> = (0..here.len())
            .map(|i| {
                let (r, a) = here.unflat(i);
                here.overlapping(r, a, below)
            })
            .collect();
        children.push(table);
    }
    HierarchicalCodebook::from_parts(hcfg.clone(), upper, lower, children)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steering_gain::dirichlet;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    #[test]
    fn parses_pattern_names() {
        assert_eq!("deact".parse::<PatternKind>().unwrap(), PatternKind::Deact);
        assert_eq!("BMW-SS".parse::<PatternKind>().unwrap(), PatternKind::BmwSs);
        assert_eq!("quadric".parse::<PatternKind>().unwrap(), PatternKind::Quadric);
        assert!("dft".parse::<PatternKind>().is_err());
        assert_eq!(serde_json::to_string(&PatternKind::BmwSs).unwrap(), "\"bmwss\"");
    }

    #[test]
    fn deact_full_array_is_broadside_beam() {
        let cfg = ArrayConfig::new(64, 40e9).unwrap();
        let w = deact_pattern(&cfg, 6, Normalization::ActiveElements).unwrap();
        assert_abs_diff_eq!(quadratic_gain(&cfg, &w, Coord::new(0.0, 0.0)), 1.0, epsilon = 1e-12);
        assert!(deact_pattern(&cfg, 7, Normalization::ActiveElements).is_err());
    }

    #[test]
    fn deact_two_elements() {
        let cfg = ArrayConfig::new(16, 40e9).unwrap();
        let w = deact_pattern(&cfg, 1, Normalization::ActiveElements).unwrap();
        assert_eq!(w.active_count(), 2);
        // two unit phasors half a wavelength apart: |1 + e^{j pi theta}| / sqrt(2) / sqrt(16)
        let direct = Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, std::f64::consts::PI * 0.5);
        let expected = direct.norm() / (2.0f64.sqrt() * 4.0);
        assert_abs_diff_eq!(
            quadratic_gain(&cfg, &w, Coord::new(0.5, 0.0)),
            expected,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            quadratic_gain(&cfg, &w, Coord::new(-0.5, 0.0)),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn deact_half_width() {
        let cfg = ArrayConfig::reference();
        let w = deact_pattern(&cfg, 4, Normalization::ActiveElements).unwrap();
        let peak = quadratic_gain(&cfg, &w, Coord::new(0.0, 0.0));
        let edge = quadratic_gain(&cfg, &w, Coord::new(1.0 / 16.0, 0.0));
        assert_abs_diff_eq!(edge / peak, dirichlet(1.0 / 16.0, 16), epsilon = 1e-12);
        assert_abs_diff_eq!(edge / peak, 2.0 / std::f64::consts::PI, epsilon = 2e-3);
    }

    #[test]
    fn bmwss_layouts() {
        let cfg = ArrayConfig::reference();
        assert_eq!(bmwss_layout(&cfg, 8).unwrap(), (1, 1, 256));
        assert_eq!(bmwss_layout(&cfg, 1).unwrap(), (16, 8, 16));
        assert_eq!(bmwss_layout(&cfg, 2).unwrap(), (8, 8, 32));
        let odd = ArrayConfig::new(24, 40e9).unwrap();
        assert!(bmwss_pattern(&odd, 2, Normalization::ActiveElements).is_err());
    }

    #[test]
    fn bmwss_full_level_is_steering_beam() {
        let cfg = ArrayConfig::new(64, 40e9).unwrap();
        let w = bmwss_pattern(&cfg, 6, Normalization::ActiveElements).unwrap();
        assert_abs_diff_eq!(quadratic_gain(&cfg, &w, Coord::new(0.0, 0.0)), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn quadric_matches_defocusing_ramp() {
        let cfg = ArrayConfig::reference();
        let level = 3;
        let w = quadric_pattern(&cfg, level).unwrap();
        let a_q = cfg.spacing_ratio() * (2.0 / 8.0) / (2.0 * 256.0);
        let broadside = crate::array::quadratic_steering(&cfg, Coord::new(0.0, 0.0));
        let delta_r = -cfg.curvature_coefficient() / a_q;
        let ramp = crate::transform::relocate(&cfg, &broadside, delta_r).unwrap();
        for (a, b) in w.weights().iter().zip(ramp.weights()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn schedule_starts_in_far_field_and_increases() {
        let cfg = ArrayConfig::reference();
        let w = deact_pattern(&cfg, 8, Normalization::ActiveElements).unwrap();
        let rings = ring_schedule(&cfg, &w, 0.5).unwrap();
        assert_eq!(rings[0], 0.0);
        assert!(rings.len() > 1);
        assert!(rings.windows(2).all(|p| p[0] < p[1]));
        assert!(*rings.last().unwrap() < cfg.max_curvature());
        assert!(rings.last().unwrap() + rings[1] >= cfg.max_curvature());
    }

    #[test]
    fn toy_array_has_single_ring() {
        let cfg = ArrayConfig::new(8, 40e9).unwrap();
        let w = deact_pattern(&cfg, 3, Normalization::ActiveElements).unwrap();
        assert_eq!(ring_schedule(&cfg, &w, 0.5).unwrap(), vec![0.0]);
    }
}
