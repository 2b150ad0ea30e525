//! Conversion to the canonical closed-skew-normal parametrization
//! `CSN_{d,d}(mu*, Sigma*, D*, 0, I)`.

use super::params::SkewParams;
use crate::special::{log_norm_cdf, B, HALF_LN_2PI};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::LN_2;

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalCsn {
    pub mu_star: DVector<f64>,
    pub sigma_star: DMatrix<f64>,
    pub d_star: DMatrix<f64>,
}

/// `mu* = mu - b C alpha`, `Sigma* = C D_tau^{-2} C^T`, `D* = D_lambda D_tau C^{-1}`.
pub fn to_canonical(params: &SkewParams) -> CanonicalCsn {
    let aux = params.aux();
    let c = params.c();
    let mu_star = params.mu() - c * &aux.alpha * B;
    let c_scaled = c * DMatrix::from_diagonal(&aux.tau.map(|t| 1.0 / t));
    let sigma_star = &c_scaled * c_scaled.transpose();
    let scale = params.lambda().component_mul(&aux.tau);
    let d_star = DMatrix::from_diagonal(&scale) * params.c_inverse();
    CanonicalCsn { mu_star, sigma_star, d_star }
}

impl CanonicalCsn {
    pub fn dim(&self) -> usize {
        self.mu_star.len()
    }

    /// `ln[2^d phi_d(theta | mu*, Sigma*) prod_j Phi((D*(theta - mu*))_j)]`.
    pub fn log_density(&self, theta: &DVector<f64>) -> f64 {
        let d = self.dim();
        let r = theta - &self.mu_star;
        let chol = self.sigma_star.clone().cholesky().expect("Sigma* is positive definite");
        let half_log_det: f64 = chol.l().diagonal().iter().map(|v| v.ln()).sum();
        let quad = r.dot(&chol.solve(&r));
        let skew: f64 = (&self.d_star * &r).iter().map(|&x| log_norm_cdf(x)).sum();
        d as f64 * (LN_2 - HALF_LN_2PI) - half_log_det - 0.5 * quad + skew
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csn::density::log_density;
    use crate::csn::params::Parametrization;
    use crate::rng::stream;
    use rand::RngExt;

    #[test]
    fn gaussian_case() {
        let l = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.5, 1.0]);
        let p = SkewParams::cholesky(DVector::from_vec(vec![1.0, -1.0]), l, DVector::zeros(2), Parametrization::Lambda).unwrap();
        let c = to_canonical(&p);
        assert_eq!(c.mu_star, *p.mu());
        assert!((c.sigma_star.clone() - p.sigma()).abs().max() < 1e-15);
        assert_eq!(c.d_star, DMatrix::zeros(2, 2));
    }

    #[test]
    fn canonical_density_agrees_and_sigma_star_dominates() {
        let mut rng = stream(3, 0);
        for _ in 0..5 {
            let l = DMatrix::from_fn(3, 3, |i, j| match i.cmp(&j) {
                std::cmp::Ordering::Less => 0.0,
                std::cmp::Ordering::Equal => rng.random_range(0.5..2.0),
                std::cmp::Ordering::Greater => rng.random_range(-1.0..1.0),
            });
            let u = DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else if i < j { rng.random_range(-1.0..1.0) } else { 0.0 });
            let lam = DVector::from_fn(3, |_, _| rng.random_range(-3.0..3.0));
            let mu = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
            let p = SkewParams::lu(mu, l, u, lam, Parametrization::AlphaCubed).unwrap();
            let c = to_canonical(&p);
            for _ in 0..100 {
                let th = p.mu() + DVector::from_fn(3, |_, _| rng.random_range(-3.0..3.0));
                let a = log_density(&p, &th);
                let b = c.log_density(&th);
                assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "{a} vs {b}");
            }
            let gap = c.sigma_star.clone() - p.sigma();
            let eig = gap.symmetric_eigen();
            assert!(eig.eigenvalues.min() > -1e-12);
        }
    }
}
