//! Closed-form natural gradients under the Fisher information of the joint
//! density `q(theta, w)`.

use super::param_gradient::ParamGradient;
use crate::csn::SkewParams;
use crate::linalg::{lower, strict_upper, vech, vech_inv, vech_u, vech_u_inv};
use crate::special::ONE_MINUS_B2;
use nalgebra::{DMatrix, DVector};

fn mu_block(params: &SkewParams, d_mu: &DVector<f64>) -> DVector<f64> {
    let c = params.c();
    let ck = c * DMatrix::from_diagonal(&params.aux().kappa.map(|k| k * k));
    &ck * (c.transpose() * d_mu)
}

fn lambda_base(params: &SkewParams, d_lambda: &DVector<f64>) -> DVector<f64> {
    let k = &params.aux().kappa;
    DVector::from_fn(params.dim(), |i, _| {
        let k2 = k[i] * k[i];
        d_lambda[i] / (ONE_MINUS_B2 * (2.0 * k2 - k2 * k2))
    })
}

/// Natural gradient for `C = L` (Cholesky form).
pub fn natural_grad_cholesky(grad: &ParamGradient, params: &SkewParams) -> ParamGradient {
    let d = params.dim();
    let aux = params.aux();
    let lam = params.lambda();
    let c = params.c();
    let k2 = aux.kappa.map(|k| k * k);
    let g = lower(&(c.transpose() * vech_inv(&grad.d_vech_l, d)));
    let mut a1 = DMatrix::zeros(d, d);
    for j in 0..d {
        for i in j..d {
            a1[(i, j)] = if i == j {
                g[(i, i)] * (k2[i] - 0.5 * k2[i] * k2[i]) + 0.5 * aux.alpha[i] * aux.kappa[i] * grad.d_skew[i]
            } else {
                g[(i, j)] * k2[i]
            };
        }
    }
    let d_skew = lambda_base(params, &grad.d_skew)
        + DVector::from_fn(d, |i, _| lam[i] / (2.0 - k2[i]) * a1[(i, i)]);
    ParamGradient {
        d_mu: mu_block(params, &grad.d_mu),
        d_skew,
        d_vech_l: vech(&(c * a1)),
        d_vech_u: None,
    }
}

/// Natural gradient for `C = L U` with unit-diagonal `U`.
///
/// The information matrix is singular when two coordinates both have
/// `lambda = 0` (an off-diagonal entry of `a` vanishes), so this is only
/// meaningful away from that set.
pub fn natural_grad_lu(grad: &ParamGradient, params: &SkewParams) -> ParamGradient {
    let d = params.dim();
    let aux = params.aux();
    let lam = params.lambda();
    let l = params.l();
    let u = params.u().expect("LU form");
    let d_vech_u = grad.d_vech_u.as_ref().expect("LU gradient has a vech_u block");
    let k2 = aux.kappa.map(|k| k * k);

    let u_inv = u.clone().try_inverse().expect("unit triangular U is invertible");
    let u_inv_t = u_inv.transpose();

    let g = lower(&(l.transpose() * vech_inv(&grad.d_vech_l, d)));
    let f = strict_upper(&(u.transpose() * vech_u_inv(d_vech_u, d)));

    // A2 = vech^{-1}(1 / a), a = vech{diag(1/(2 - k^2)) + (1/K)_l - (K_u)^T}.
    let mut a2 = DMatrix::zeros(d, d);
    for j in 0..d {
        for i in j..d {
            let a = if i == j { 1.0 / (2.0 - k2[i]) + 1.0 / k2[i] } else { 1.0 / k2[i] - k2[j] };
            a2[(i, j)] = 1.0 / a;
        }
    }
    // K F with K_ij = kappa_i^2.
    let kf = DMatrix::from_fn(d, d, |i, j| k2[i] * f[(i, j)]);
    let inner = u.transpose() * (&g - lower(&(&u_inv_t * &f * u.transpose()))) * &u_inv_t
        + DMatrix::from_diagonal(&DVector::from_fn(d, |i, _| lam[i] / (2.0 - k2[i]) * grad.d_skew[i]))
        - kf.transpose();
    let h = a2.component_mul(&lower(&inner));
    let gcal = u * &h * &u_inv;

    let d_skew = lambda_base(params, &grad.d_skew) + DVector::from_fn(d, |i, _| lam[i] / (2.0 - k2[i]) * h[(i, i)]);
    let ku = DMatrix::from_fn(d, d, |i, j| if i < j { k2[i] } else { 0.0 });
    let upper = u * ku.component_mul(&(&f - h.transpose())) + strict_upper(&gcal) * u;
    ParamGradient {
        d_mu: mu_block(params, &grad.d_mu),
        d_skew,
        d_vech_l: vech(&(l * lower(&gcal))),
        d_vech_u: Some(vech_u(&upper)),
    }
}

/// Dispatch on the factor form of `params`.
pub fn natural_grad(grad: &ParamGradient, params: &SkewParams) -> ParamGradient {
    match params.u() {
        None => natural_grad_cholesky(grad, params),
        Some(_) => natural_grad_lu(grad, params),
    }
}
