//! Scalar special functions: the standard normal density and distribution
//! function, the skew-normal log-normaliser `zeta0` and its derivatives, and
//! a complex-argument `log Phi` used by the exact marginal density.

use errorfunctions::{ComplexErrorFunctions, RealErrorFunctions};
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

/// `sqrt(2 / pi)`, the mean of a standard half-normal variable.
pub const B: f64 = 0.797_884_560_802_865_4;

/// `1 - B^2`.
pub const ONE_MINUS_B2: f64 = 1.0 - 2.0 / PI;

/// `0.5 * ln(2 pi)`.
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument the tail uses the Mills-ratio continued fraction.
const TAIL_SWITCH: f64 = -25.0;

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - HALF_LN_2PI).exp()
}

pub fn norm_log_pdf(x: f64) -> f64 {
    -0.5 * x * x - HALF_LN_2PI
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * RealErrorFunctions::erfc(-x * FRAC_1_SQRT_2)
}

/// Mills ratio `R(t) = (1 - Phi(t)) / phi(t)` for large positive `t`,
/// evaluated by backward recurrence of `t + 1/(t + 2/(t + 3/(t + ...)))`.
pub fn mills_ratio_tail(t: f64) -> f64 {
    let mut acc = t;
    for k in (1..=80).rev() {
        acc = t + k as f64 / acc;
    }
    1.0 / acc
}

/// `ln Phi(x)`, accurate across the whole real line.
pub fn log_norm_cdf(x: f64) -> f64 {
    if x < TAIL_SWITCH {
        norm_log_pdf(x) + mills_ratio_tail(-x).ln()
    } else if x < 0.0 {
        let t = -x * FRAC_1_SQRT_2;
        (0.5 * t.erfcx()).ln() - t * t
    } else {
        (-norm_cdf(-x)).ln_1p()
    }
}

/// `zeta0(x) = ln(2 Phi(x))`.
pub fn zeta0(x: f64) -> f64 {
    LN_2 + log_norm_cdf(x)
}

/// `zeta1(x) = phi(x) / Phi(x)`, the first derivative of `zeta0`.
pub fn zeta1(x: f64) -> f64 {
    if x < TAIL_SWITCH {
        1.0 / mills_ratio_tail(-x)
    } else if x < 0.0 {
        B / (-x * FRAC_1_SQRT_2).erfcx()
    } else {
        norm_pdf(x) / norm_cdf(x)
    }
}

/// `zeta2(x) = -zeta1(x) (x + zeta1(x))`, the second derivative of `zeta0`.
pub fn zeta2(x: f64) -> f64 {
    let z1 = zeta1(x);
    -z1 * (x + z1)
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub fn digamma(x: f64) -> f64 {
    statrs::function::gamma::digamma(x)
}

/// `ln(n choose k)` for real-valued counts.
pub fn ln_binomial(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// Principal-branch `ln Phi(z)` for complex `z`, via the Faddeeva function.
///
/// With `x = -z / sqrt(2)`, `Phi(z) = erfc(x) / 2 = exp(-x^2) w(i x) / 2`.
/// That form is used when `Re x >= 0`; otherwise the reflection
/// `Phi(z) = 1 - Phi(-z)` keeps `w` away from its growing half-plane.
pub fn log_norm_cdf_complex(z: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let x = -z * FRAC_1_SQRT_2;
    if x.re >= 0.0 {
        Complex64::new(-LN_2, 0.0) - x * x + (i * x).w().ln()
    } else {
        let y = -x;
        let tail = 0.5 * (-(y * y)).exp() * (i * y).w();
        complex_ln_1p(-tail)
    }
}

/// `ln(1 + u)` without cancellation for small `|u|`.
fn complex_ln_1p(u: Complex64) -> Complex64 {
    if u.norm() < 1e-4 {
        u - u * u / 2.0 + u * u * u / 3.0 - u * u * u * u / 4.0
    } else {
        (Complex64::new(1.0, 0.0) + u).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    // Reference values from 40-digit arithmetic.
    #[allow(clippy::excessive_precision, clippy::approx_constant)]
    const TABLE: [(f64, f64, f64, f64); 9] = [
        (-40.0, -804.608_442_013_753_8, 40.024_968_847_207_26, -0.999_377_331_621_408_6),
        (-30.0, -454.321_243_956_343_2, 30.033_259_667_433_68, -0.998_896_228_488_109_9),
        (-26.0, -342.178_508_929_927_8, 26.038_348_579_495_47, -0.998_533_680_431_561),
        (-20.0, -203.917_155_371_097_26, 20.049_753_068_527_85, -0.997_536_738_384_947_8),
        (-5.0, -15.064_998_393_988_726, 5.186_503_967_125_842, -0.967_303_565_382_887_8),
        (-1.0, -1.841_021_645_009_263_5, 1.525_135_276_160_981_2, -0.800_902_334_429_651_2),
        (0.0, -0.693_147_180_559_945_3, 0.797_884_560_802_865_4, -0.636_619_772_367_581_3),
        (1.5, -0.069_143_455_612_233_98, 0.138_789_750_458_850_76, -0.227_447_220_520_706_2),
        (8.0, -6.220_960_574_271_786e-16, 5.052_271_083_536_895e-15, -4.041_816_866_829_519e-14),
    ];

    #[test]
    fn log_cdf_and_zetas_match_reference() {
        for &(x, lp, z1, z2) in &TABLE {
            assert!(rel(log_norm_cdf(x), lp) < 1e-13, "logPhi({x})");
            assert!(rel(zeta1(x), z1) < 1e-12, "zeta1({x}) = {}", zeta1(x));
            assert!(rel(zeta2(x), z2) < 1e-9, "zeta2({x}) = {}", zeta2(x));
        }
    }

    #[test]
    fn tail_switch_is_continuous() {
        // Continued fraction against the scaled complementary error function
        // on both sides of the switch.
        for &t in &[20.0, -TAIL_SWITCH, 30.0] {
            let via_erfcx = (std::f64::consts::PI / 2.0).sqrt() * (t * FRAC_1_SQRT_2).erfcx();
            assert!(rel(mills_ratio_tail(t), via_erfcx) < 1e-14, "t = {t}");
        }
    }

    #[test]
    fn zeta_derivatives_agree_with_differences() {
        for &x in &[-8.0, -2.0, -0.3, 0.0, 0.7, 3.0] {
            let h = 1e-5;
            let fd1 = (zeta0(x + h) - zeta0(x - h)) / (2.0 * h);
            let fd2 = (zeta1(x + h) - zeta1(x - h)) / (2.0 * h);
            assert!((fd1 - zeta1(x)).abs() < 1e-8);
            assert!((fd2 - zeta2(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn complex_log_cdf_reduces_to_real() {
        for &x in &[-30.0, -6.0, -1.0, 0.0, 2.0, 7.0] {
            let c = log_norm_cdf_complex(Complex64::new(x, 0.0));
            assert!(rel(c.re, log_norm_cdf(x)) < 1e-12 || (c.re - log_norm_cdf(x)).abs() < 1e-15);
            assert!(c.im.abs() < 1e-14);
        }
    }

    #[test]
    fn complex_log_cdf_is_holomorphic() {
        // Cauchy-Riemann: d/dz ln Phi(z) = phi(z) / Phi(z), checked along both axes.
        let z = Complex64::new(-1.3, 0.8);
        let h = 1e-6;
        let dx = (log_norm_cdf_complex(z + h) - log_norm_cdf_complex(z - h)) / (2.0 * h);
        let ih = Complex64::new(0.0, h);
        let dy = (log_norm_cdf_complex(z + ih) - log_norm_cdf_complex(z - ih)) / (2.0 * ih);
        assert!((dx - dy).norm() < 1e-7);
        let exact = (-(z * z) * 0.5 - HALF_LN_2PI - log_norm_cdf_complex(z)).exp();
        assert!((dx - exact).norm() < 1e-7);
    }
}
