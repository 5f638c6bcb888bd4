//! Fresnel integrals
//!
//! ```text
//! C(x) = ∫₀ˣ cos(π t²/2) dt      S(x) = ∫₀ˣ sin(π t²/2) dt
//! ```
//!
//! Power series for |x| ≤ 1.6. Beyond that the auxiliary function
//! `A(x)` in `C + jS = (1+j)/2 − A(x)·exp(jπx²/2)` is evaluated with its
//! continued fraction (modified Lentz), which converges for every x > 0.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

/// Switch between the power series and the continued fraction.
pub const SERIES_LIMIT: f64 = 1.6;

const MAX_TERMS: usize = 500;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// `C(x) + j S(x)`.
pub fn fresnel(x: f64) -> Complex64 {
    if x.is_nan() {
        return Complex64::new(f64::NAN, f64::NAN);
    }
    if x == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let ax = x.abs();
    let value = if ax <= SERIES_LIMIT {
        series(ax)
    } else if ax.is_infinite() {
        Complex64::new(0.5, 0.5)
    } else {
        Complex64::new(0.5, 0.5) - auxiliary(ax) * unit_phase(ax)
    };
    if x < 0.0 {
        -value
    } else {
        value
    }
}

pub fn fresnel_c(x: f64) -> f64 {
    fresnel(x).re
}

pub fn fresnel_s(x: f64) -> f64 {
    fresnel(x).im
}

/// `exp(jπx²/2)`.
fn unit_phase(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, FRAC_PI_2 * x * x)
}

fn series(x: f64) -> Complex64 {
    let t = FRAC_PI_2 * x * x;
    let t2 = t * t;
    // C = x Σ (-1)^n t^{2n} / ((2n)! (4n+1)),  S = x Σ (-1)^n t^{2n+1} / ((2n+1)! (4n+3))
    let mut c_term = 1.0;
    let mut s_term = t;
    let mut c = c_term;
    let mut s = s_term / 3.0;
    for n in 0..MAX_TERMS {
        let k = n as f64;
        c_term *= -t2 / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
        s_term *= -t2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
        let dc = c_term / (4.0 * k + 5.0);
        let ds = s_term / (4.0 * k + 7.0);
        c += dc;
        s += ds;
        if dc.abs() < EPS * c.abs() && ds.abs() < EPS * s.abs() {
            break;
        }
    }
    Complex64::new(x * c, x * s)
}

/// Auxiliary function for x > 0, such that `C + jS = (1+j)/2 − A(x) exp(jπx²/2)`.
pub(crate) fn auxiliary(x: f64) -> Complex64 {
    let pix2 = PI * x * x;
    let one = Complex64::new(1.0, 0.0);
    let mut b = Complex64::new(1.0, -pix2);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = one / b;
    let mut h = d;
    let mut n = -1.0;
    for _ in 2..MAX_TERMS {
        n += 2.0;
        let a = -n * (n + 1.0);
        b += 4.0;
        d = one / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < EPS {
            break;
        }
    }
    Complex64::new(0.5, 0.5) * Complex64::new(x, -x) * h
}

/// `|E(hi) − E(lo)|` with `E = C + jS` and `lo ≤ hi`.
///
/// When both arguments sit on the same side beyond the series range the
/// difference is formed from the auxiliary functions and the phase gap
/// `phase_gap = π (hi² − lo²)/2`, which the caller supplies in a
/// cancellation-free form.
pub(crate) fn difference_modulus(lo: f64, hi: f64, phase_gap: f64) -> f64 {
    let same_side_far = (lo > SERIES_LIMIT && hi > SERIES_LIMIT) || (lo < -SERIES_LIMIT && hi < -SERIES_LIMIT);
    if !same_side_far {
        return (fresnel(hi) - fresnel(lo)).norm();
    }
    // E(-x) = -E(x), so a negative pair maps onto the positive pair (|hi|, |lo|)
    // with the same phase gap up to sign, which does not change the modulus.
    let (near, far) = if lo > 0.0 { (lo, hi) } else { (-hi, -lo) };
    let gap = phase_gap.abs();
    (auxiliary(far) * Complex64::from_polar(1.0, gap) - auxiliary(near)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_and_symmetry() {
        assert_eq!(fresnel_c(0.0), 0.0);
        assert_eq!(fresnel_s(0.0), 0.0);
        for &x in &[0.3, 1.0, 1.6, 1.61, 3.7, 20.0] {
            assert_eq!(fresnel_c(-x), -fresnel_c(x));
            assert_eq!(fresnel_s(-x), -fresnel_s(x));
        }
    }

    #[test]
    fn known_values() {
        assert_abs_diff_eq!(fresnel_c(1.0), 0.779_893_400_376_822_8, epsilon = 1e-14);
        assert_abs_diff_eq!(fresnel_s(1.0), 0.438_259_147_390_354_8, epsilon = 1e-14);
        assert_abs_diff_eq!(fresnel_c(2.0), 0.488_253_406_075_340_8, epsilon = 1e-13);
        assert_abs_diff_eq!(fresnel_s(2.0), 0.343_415_678_363_698_2, epsilon = 1e-13);
    }

    #[test]
    fn branches_agree_at_switch() {
        let below = series(SERIES_LIMIT);
        let above = Complex64::new(0.5, 0.5) - auxiliary(SERIES_LIMIT) * unit_phase(SERIES_LIMIT);
        assert_abs_diff_eq!((below - above).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn limits_at_infinity() {
        assert_eq!(fresnel(f64::INFINITY), Complex64::new(0.5, 0.5));
        assert_eq!(fresnel(f64::NEG_INFINITY), Complex64::new(-0.5, -0.5));
        assert!(fresnel(f64::NAN).re.is_nan());
    }

    #[test]
    fn difference_paths_agree() {
        for &(lo, hi) in &[(2.0, 2.5), (-7.0, -3.0), (4.0, 40.0), (-1.0, 5.0)] {
            let direct = (fresnel(hi) - fresnel(lo)).norm();
            let gap = FRAC_PI_2 * (hi * hi - lo * lo);
            assert_abs_diff_eq!(difference_modulus(lo, hi, gap), direct, epsilon = 1e-12);
        }
    }
}
