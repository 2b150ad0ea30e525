//! The CSN-subclass distribution.

pub mod canonical;
pub mod density;
pub mod entropy;
pub mod moments;
pub mod params;
pub mod sampling;

pub use canonical::{to_canonical, CanonicalCsn};
pub use density::{grad_theta_log_density, log_density};
pub use entropy::{entropy, entropy_grad_lambda};
pub use moments::{cgf, marginal_log_density, marginal_skewness, mean_cov, tilted_moments, TiltedMoments};
pub use params::{
    alpha_cubed_from_lambda, derive_aux, lambda_from_alpha_cubed, AuxQuantities, FactorForm, FactorKind, Parametrization,
    SkewParam, SkewParams, ALPHA_CUBED_BOUND,
};
pub use sampling::{reparam_draw, sample};

/// `zeta_r` applied elementwise, `r` in `{0, 1, 2}`.
pub fn zeta(r: u8, x: &nalgebra::DVector<f64>) -> nalgebra::DVector<f64> {
    use crate::special::{zeta0, zeta1, zeta2};
    match r {
        0 => x.map(zeta0),
        1 => x.map(zeta1),
        2 => x.map(zeta2),
        _ => panic!("zeta is defined for r in 0..=2"),
    }
}
