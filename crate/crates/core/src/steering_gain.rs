//! Closed-form gain of a steering beam.
//!
//! For a codeword steered at `p` and evaluated at `q`, the quadratic-model
//! array factor is `(1/n_w) Σ_n exp(jπ(a n² + b n))` with
//!
//! ```text
//! a = (d²/λ)(κ_p − κ_q)          b = (2d/λ)(θ_q − θ_p)
//! ```
//!
//! Replacing the sum by an integral over `[−n_w/2, n_w/2]` and completing
//! the square gives a difference of Fresnel integrals with
//! `γ₁ = b/√(2|a|)` and `γ₂ = √(2|a|)·n_w/2`. The sign of `a` only conjugates
//! the result, so `|a|` is used throughout. When `a` vanishes the sum is a
//! Dirichlet kernel and is evaluated as such.

use std::f64::consts::PI;

use crate::array::{ArrayConfig, Coord, PolarPoint};
use crate::fresnel::difference_modulus;

/// `√(2|a|)·n_w` below which the Dirichlet branch is used.
pub const DEGENERACY_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteeringGainParams {
    /// Quadratic-phase coefficient `a`.
    pub quadratic: f64,
    /// Linear-phase coefficient `b`.
    pub linear: f64,
    pub n_elements: usize,
}

impl SteeringGainParams {
    pub fn new(cfg: &ArrayConfig, steer: Coord, eval: Coord) -> Self {
        Self {
            quadratic: cfg.curvature_coefficient() * (steer.kappa - eval.kappa),
            linear: cfg.spacing_ratio() * (eval.theta - steer.theta),
            n_elements: cfg.n_elements(),
        }
    }

    fn scale(&self) -> f64 {
        (2.0 * self.quadratic.abs()).sqrt()
    }

    pub fn is_degenerate(&self) -> bool {
        self.scale() * (self.n_elements as f64) < DEGENERACY_THRESHOLD
    }

    /// `(γ₁, γ₂)`, or `None` on the degenerate branch.
    pub fn gammas(&self) -> Option<(f64, f64)> {
        if self.is_degenerate() {
            return None;
        }
        let s = self.scale();
        Some((self.linear / s, s * self.n_elements as f64 / 2.0))
    }

    pub fn gain(&self) -> f64 {
        match self.gammas() {
            None => dirichlet(self.linear, self.n_elements),
            Some((g1, g2)) => {
                // π((g1+g2)² − (g1−g2)²)/2 = 2π g1 g2 = π b n_w
                let gap = PI * self.linear * self.n_elements as f64;
                difference_modulus(g1 - g2, g1 + g2, gap) / (2.0 * g2)
            }
        }
    }
}

/// `|sin(nπb/2) / (n sin(πb/2))|`, the far-field array factor.
pub fn dirichlet(b: f64, n: usize) -> f64 {
    let x = PI * b / 2.0;
    let den = x.sin();
    if den.abs() < 1e-12 {
        return 1.0;
    }
    ((n as f64 * x).sin() / (n as f64 * den)).abs()
}

/// Gain at `eval` of the quadratic steering beam aimed at `steer`.
pub fn fresnel_steering_gain(cfg: &ArrayConfig, steer: Coord, eval: Coord) -> f64 {
    SteeringGainParams::new(cfg, steer, eval).gain()
}

pub fn steering_beam_gain(cfg: &ArrayConfig, steer: &PolarPoint, eval: &PolarPoint) -> f64 {
    fresnel_steering_gain(cfg, steer.coord(), eval.coord())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn direct_sum(cfg: &ArrayConfig, steer: Coord, eval: Coord) -> f64 {
        let p = SteeringGainParams::new(cfg, steer, eval);
        let n = cfg.n_elements() as f64;
        let acc: Complex64 = (0..cfg.n_elements())
            .map(|i| {
                let m = i as f64 - (n - 1.0) / 2.0;
                Complex64::from_polar(1.0, PI * (p.quadratic * m * m + p.linear * m))
            })
            .sum();
        acc.norm() / n
    }

    #[test]
    fn peak_is_one() {
        let cfg = ArrayConfig::reference();
        let p = PolarPoint::from_range(0.2, 9.0).unwrap();
        assert_abs_diff_eq!(steering_beam_gain(&cfg, &p, &p), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn same_ring_null() {
        let cfg = ArrayConfig::reference();
        let kappa = 0.05;
        let steer = Coord::new(0.1, kappa);
        let eval = Coord::new(0.1 + 2.0 / 256.0, kappa);
        assert_abs_diff_eq!(fresnel_steering_gain(&cfg, steer, eval), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn matches_direct_sum_off_focus() {
        let cfg = ArrayConfig::reference();
        let steer = PolarPoint::from_range(0.0, 10.0).unwrap();
        let eval = PolarPoint::from_range(0.05, 25.0).unwrap();
        let closed = steering_beam_gain(&cfg, &steer, &eval);
        let oracle = direct_sum(&cfg, steer.coord(), eval.coord());
        assert!((closed - oracle).abs() <= 0.02, "closed {closed} vs sum {oracle}");
    }

    #[test]
    fn symmetric_in_signs() {
        let cfg = ArrayConfig::reference();
        for &(a, b) in &[(3e-5, 0.004), (1e-4, -0.01), (2.5e-4, 0.0)] {
            let mk = |a: f64, b: f64| SteeringGainParams {
                quadratic: a,
                linear: b,
                n_elements: cfg.n_elements(),
            };
            let g = mk(a, b).gain();
            assert_abs_diff_eq!(g, mk(a, -b).gain(), epsilon = 1e-12);
            assert_abs_diff_eq!(g, mk(-a, b).gain(), epsilon = 1e-12);
        }
    }

    #[test]
    fn branches_meet_at_threshold() {
        let n = 256usize;
        let a = (DEGENERACY_THRESHOLD * 1.01 / n as f64).powi(2) / 2.0;
        for &b in &[0.0, 1e-3, 1.0 / 512.0] {
            let near = SteeringGainParams {
                quadratic: a,
                linear: b,
                n_elements: n,
            };
            assert!(!near.is_degenerate());
            assert_abs_diff_eq!(near.gain(), dirichlet(b, n), epsilon = 1e-5);
        }
    }
}
