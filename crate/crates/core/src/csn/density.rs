//! Log density of the CSN subclass and its gradient in `theta`.

use super::params::SkewParams;
use crate::special::{log_norm_cdf, zeta1, B, HALF_LN_2PI};
use nalgebra::DVector;
use std::f64::consts::LN_2;

/// `v = D_tau C^{-1} (theta - mu) + b delta`.
pub fn standardized(params: &SkewParams, theta: &DVector<f64>) -> DVector<f64> {
    let aux = params.aux();
    let z = params.solve_c(&(theta - params.mu()));
    z.component_mul(&aux.tau) + &aux.delta * B
}

/// `ln q(theta)`.
pub fn log_density(params: &SkewParams, theta: &DVector<f64>) -> f64 {
    let d = params.dim() as f64;
    let aux = params.aux();
    let v = standardized(params, theta);
    let mut s = d * LN_2 - d * HALF_LN_2PI - 0.5 * v.dot(&v) - params.log_abs_det_c();
    for i in 0..params.dim() {
        s += log_norm_cdf(params.lambda()[i] * v[i]) + aux.tau[i].ln();
    }
    s
}

/// `grad_theta ln q(theta) = C^{-T} D_tau {D_lambda zeta1(D_lambda v) - v}`.
pub fn grad_theta_log_density(params: &SkewParams, theta: &DVector<f64>) -> DVector<f64> {
    let v = standardized(params, theta);
    let lam = params.lambda();
    let tau = &params.aux().tau;
    let inner = DVector::from_fn(params.dim(), |i, _| tau[i] * (lam[i] * zeta1(lam[i] * v[i]) - v[i]));
    params.solve_c_transpose(&inner)
}

/// Log density of the univariate skew normal `SN(xi, omega^2, shape)`,
/// `2 / omega * phi((x - xi) / omega) * Phi(shape * (x - xi))`.
pub fn sn1_log_density(x: f64, xi: f64, omega2: f64, shape: f64) -> f64 {
    let omega = omega2.sqrt();
    let r = (x - xi) / omega;
    LN_2 - omega.ln() - HALF_LN_2PI - 0.5 * r * r + log_norm_cdf(shape * (x - xi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csn::params::Parametrization;
    use nalgebra::DMatrix;

    fn p2() -> SkewParams {
        let l = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 1.2]);
        SkewParams::cholesky(DVector::from_vec(vec![0.3, -0.2]), l, DVector::from_vec(vec![2.0, -1.0]), Parametrization::Lambda).unwrap()
    }

    #[test]
    fn standard_normal_at_zero() {
        let p = SkewParams::standard(1, Default::default(), Parametrization::Lambda);
        let v = log_density(&p, &DVector::zeros(1));
        assert!((v + 0.918_938_533_204_672_7).abs() < 1e-15);
    }

    #[test]
    fn zero_skew_is_gaussian() {
        let p = p2().gaussian_part();
        let theta = DVector::from_vec(vec![1.1, -0.7]);
        let sigma = p.sigma();
        let r = &theta - p.mu();
        let quad = r.dot(&(sigma.clone().cholesky().unwrap().solve(&r)));
        let g = -HALF_LN_2PI * 2.0 - 0.5 * sigma.determinant().ln() - 0.5 * quad;
        assert!((log_density(&p, &theta) - g).abs() < 1e-13);
    }

    #[test]
    fn one_dimensional_case_is_sn1() {
        for &(lam, sigma, mu) in &[(2.0, 1.3, 0.4), (-3.5, 0.6, -1.0), (0.2, 2.0, 0.0)] {
            let p = SkewParams::cholesky(
                DVector::from_element(1, mu),
                DMatrix::from_element(1, 1, sigma),
                DVector::from_element(1, lam),
                Parametrization::AlphaCubed,
            )
            .unwrap();
            let a = p.aux();
            let (alpha, tau) = (a.alpha[0], a.tau[0]);
            for k in 0..41 {
                let x = mu - 6.0 + 0.3 * k as f64;
                let sn = sn1_log_density(x, mu - B * sigma * alpha, sigma * sigma / (tau * tau), lam * tau / sigma);
                let q = log_density(&p, &DVector::from_element(1, x));
                assert!((sn - q).abs() < 1e-12 * q.abs().max(1.0), "x={x}: {sn} vs {q}");
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut p = p2();
        let u = DMatrix::from_row_slice(2, 2, &[1.0, -0.6, 0.0, 1.0]);
        let lu = SkewParams::lu(p.mu().clone(), p.l().clone(), u, p.lambda().clone(), Parametrization::AlphaCubed).unwrap();
        for q in [&mut p, &mut lu.clone()] {
            let theta = DVector::from_vec(vec![0.9, -1.4]);
            let g = grad_theta_log_density(q, &theta);
            for i in 0..2 {
                let h = 1e-5;
                let mut a = theta.clone();
                a[i] += h;
                let mut b = theta.clone();
                b[i] -= h;
                let fd = (log_density(q, &a) - log_density(q, &b)) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-6 * g[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn gradient_vanishes_at_the_mode() {
        let p = p2();
        // Gradient ascent with a fixed step, then Newton polish via finite differences.
        let mut x = p.mu().clone();
        for _ in 0..20_000 {
            x += grad_theta_log_density(&p, &x) * 0.05;
        }
        for _ in 0..20 {
            let g = grad_theta_log_density(&p, &x);
            let mut h = DMatrix::zeros(2, 2);
            for j in 0..2 {
                let mut a = x.clone();
                a[j] += 1e-5;
                let mut b = x.clone();
                b[j] -= 1e-5;
                h.set_column(j, &((grad_theta_log_density(&p, &a) - grad_theta_log_density(&p, &b)) / 2e-5));
            }
            x -= h.lu().solve(&g).unwrap();
        }
        assert!(grad_theta_log_density(&p, &x).norm() < 1e-8);
    }

    #[test]
    fn two_dimensional_density_integrates_to_one() {
        let p = p2();
        let n = 601;
        let (lo, hi) = (-9.0, 9.0);
        let h = (hi - lo) / (n - 1) as f64;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let t = DVector::from_vec(vec![lo + i as f64 * h, lo + j as f64 * h]);
                total += log_density(&p, &t).exp();
            }
        }
        assert!((total * h * h - 1.0).abs() < 1e-4);
    }
}
