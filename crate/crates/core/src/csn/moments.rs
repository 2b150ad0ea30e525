//! Moments, cumulant generating function, tilted moments, marginal
//! densities and marginal skewness.

use super::canonical::to_canonical;
use super::params::SkewParams;
use crate::error::{CsnError, Result};
use crate::quadrature::gl20;
use crate::special::{log_norm_cdf, log_norm_cdf_complex, norm_log_pdf, zeta0, zeta1, zeta2, B, HALF_LN_2PI};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::LN_2;

/// Largest dimension for which [`marginal_log_density`] evaluates the
/// orthant probability exactly.
pub const EXACT_MARGINAL_DIM_CAP: usize = 12;

/// `(mu, C C^T)`: the parametrization is centred, so these are the mean and
/// covariance of `q`.
pub fn mean_cov(params: &SkewParams) -> (DVector<f64>, DMatrix<f64>) {
    (params.mu().clone(), params.sigma())
}

/// `K(t) = t^T mu* + t^T Sigma* t / 2 + sum_j zeta0(alpha_j C[:, j]^T t)`.
pub fn cgf(params: &SkewParams, t: &DVector<f64>) -> f64 {
    let canon = to_canonical(params);
    let ct = params.c().transpose() * t;
    let tail: f64 = ct.iter().zip(params.aux().alpha.iter()).map(|(x, a)| zeta0(a * x)).sum();
    t.dot(&canon.mu_star) + 0.5 * t.dot(&(&canon.sigma_star * t)) + tail
}

/// `exp(s^T theta) q(theta) = M q~(theta)` with `q~` in the same family.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedMoments {
    pub log_m: f64,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

pub fn tilted_moments(params: &SkewParams, s: &DVector<f64>) -> TiltedMoments {
    let canon = to_canonical(params);
    let c = params.c();
    let alpha = &params.aux().alpha;
    let x = (c.transpose() * s).component_mul(alpha);
    let d = params.dim() as f64;
    let log_m = d * LN_2
        + x.iter().map(|&v| log_norm_cdf(v)).sum::<f64>()
        + s.dot(&canon.mu_star)
        + 0.5 * s.dot(&(&canon.sigma_star * s));
    let mean = &canon.mu_star + &canon.sigma_star * s + c * alpha.component_mul(&x.map(zeta1));
    let w = alpha.component_mul(alpha).component_mul(&x.map(zeta2));
    let mut cov = &canon.sigma_star + c * DMatrix::from_diagonal(&w) * c.transpose();
    cov = (&cov + cov.transpose()) * 0.5;
    TiltedMoments { log_m, mean, cov }
}

/// Pearson skewness of coordinate `i`:
/// `b (2 b^2 - 1) sum_j alpha_j^3 C_ij^3 / Sigma_ii^{3/2}`.
pub fn marginal_skewness(params: &SkewParams, i: usize) -> f64 {
    let c = params.c();
    let alpha = &params.aux().alpha;
    let num: f64 = (0..params.dim()).map(|j| (alpha[j] * c[(i, j)]).powi(3)).sum();
    let sii: f64 = c.row(i).iter().map(|v| v * v).sum();
    B * (2.0 * B * B - 1.0) * num / sii.powf(1.5)
}

/// `ln Phi_d(y | 0, diag(s^2) - c c^T)` for `sum (c_j / s_j)^2 < 1`.
///
/// Writes the probability as `E_T prod_j Phi((y_j + i c_j T) / s_j)` with
/// `T ~ N(0, 1)`, the analytic continuation of the one-factor
/// representation to a negative rank-one term, and integrates over `T`
/// with a composite Gauss-Legendre rule in log space.
pub fn log_orthant_rank_one(y: &[f64], s: &[f64], c: &[f64]) -> f64 {
    let g: Vec<f64> = c.iter().zip(s).map(|(c, s)| c / s).collect();
    let a: Vec<f64> = y.iter().zip(s).map(|(y, s)| y / s).collect();
    let r2: f64 = g.iter().map(|v| v * v).sum();
    if r2 == 0.0 {
        return a.iter().map(|&v| log_norm_cdf(v)).sum();
    }
    assert!(r2 < 1.0, "rank-one term must leave the covariance positive definite");
    let t_max = (120.0 / (1.0 - r2)).sqrt();
    // Factors with a_j < 0 oscillate in t at rate about |a_j g_j|; keep
    // roughly one period or less per 20-point panel.
    let rate: f64 = a.iter().zip(&g).filter(|(a, _)| **a < 0.0).map(|(a, g)| (a * g).abs()).sum();
    let panels = ((t_max * (1.0 + rate) / 2.0).ceil() as usize).max(16);
    let rule = gl20();
    let h = t_max / panels as f64;
    let mut terms: Vec<(f64, Complex64)> = Vec::with_capacity(panels * rule.nodes.len());
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = mid + 0.5 * h * x;
            let mut acc = Complex64::new(-0.5 * t * t, 0.0);
            for j in 0..a.len() {
                acc += log_norm_cdf_complex(Complex64::new(a[j], g[j] * t));
            }
            terms.push((0.5 * h * w, acc));
        }
    }
    // The integrand at -t is the conjugate of that at t, so the integral
    // over the line is twice the real part over [0, t_max].
    let peak = terms.iter().map(|(_, l)| l.re).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = terms.iter().map(|(w, l)| w * (l - peak).exp().re).sum();
    if total <= 0.0 {
        return f64::NEG_INFINITY;
    }
    peak + (2.0 * total).ln() - HALF_LN_2PI
}

/// `ln q(theta_i)`, the exact marginal log density of coordinate `i`:
/// `2^d phi(theta_i | mu*_i, Sigma*_ii) Phi_d(D_i (theta_i - mu*_i) | 0, Delta_i)`.
pub fn marginal_log_density(params: &SkewParams, i: usize, theta_i: f64) -> Result<f64> {
    let d = params.dim();
    if d > EXACT_MARGINAL_DIM_CAP {
        return Err(CsnError::UnsupportedDimension { dim: d, cap: EXACT_MARGINAL_DIM_CAP });
    }
    if i >= d {
        return Err(CsnError::InvalidArgument(format!("coordinate {i} out of range for d = {d}")));
    }
    let aux = params.aux();
    let lam = params.lambda();
    let c = params.c();
    let b: Vec<f64> = (0..d).map(|j| c[(i, j)] / aux.tau[j]).collect();
    let sii: f64 = b.iter().map(|v| v * v).sum();
    let mu_star_i = params.mu()[i] - B * (0..d).map(|j| c[(i, j)] * aux.alpha[j]).sum::<f64>();
    let r = theta_i - mu_star_i;
    let y: Vec<f64> = (0..d).map(|j| lam[j] * b[j] * r / sii).collect();
    let s: Vec<f64> = lam.iter().map(|l| (1.0 + l * l).sqrt()).collect();
    let cc: Vec<f64> = (0..d).map(|j| lam[j] * b[j] / sii.sqrt()).collect();
    let sd = sii.sqrt();
    Ok(d as f64 * LN_2 + norm_log_pdf(r / sd) - sd.ln() + log_orthant_rank_one(&y, &s, &cc))
}
