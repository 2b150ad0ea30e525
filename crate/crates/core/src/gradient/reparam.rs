//! Reparametrization-trick gradient estimates of the ELBO.

use super::noise::NoisePair;
use super::param_gradient::ParamGradient;
use crate::csn::density::{grad_theta_log_density, log_density};
use crate::csn::sampling::latent;
use crate::csn::SkewParams;
use crate::linalg::{vech, vech_u};
use crate::models::TargetModel;
use crate::special::ONE_MINUS_B2;
use nalgebra::DVector;

/// One pathwise evaluation: the draw, `h(theta) = ln p - ln q`, and the
/// gradient estimate.
#[derive(Debug, Clone)]
pub struct PathwiseSample {
    pub theta: DVector<f64>,
    pub h: f64,
    pub grad: ParamGradient,
}

/// Chain `grad_theta h` through `theta = C z + mu` for fixed noise.
pub fn pathwise_gradient(params: &SkewParams, noise: &NoisePair, grad_h: &DVector<f64>) -> ParamGradient {
    let aux = params.aux();
    let z = latent(params, noise);
    let ctg = params.c().transpose() * grad_h;
    let wt = noise.w1_tilde();
    let lam = params.lambda();
    let d_skew = DVector::from_fn(params.dim(), |i, _| {
        let w3 = (wt[i] - ONE_MINUS_B2 * lam[i] * noise.w2[i]) * ctg[i];
        aux.kappa[i].powi(3) * w3
    });
    let (d_vech_l, d_vech_u) = match params.u() {
        None => (vech(&(grad_h * z.transpose())), None),
        Some(u) => {
            let uz = u * &z;
            let lu = vech_u(&(params.l().transpose() * grad_h * z.transpose()));
            (vech(&(grad_h * uz.transpose())), Some(lu))
        }
    };
    ParamGradient { d_mu: grad_h.clone(), d_skew, d_vech_l, d_vech_u }
}

pub fn pathwise_sample(params: &SkewParams, model: &dyn TargetModel, noise: &NoisePair) -> PathwiseSample {
    let theta = crate::csn::reparam_draw(params, noise);
    let (lp, glp) = model.log_joint_and_grad(&theta);
    let h = lp - log_density(params, &theta);
    let grad_h = glp - grad_theta_log_density(params, &theta);
    let grad = pathwise_gradient(params, noise, &grad_h);
    PathwiseSample { theta, h, grad }
}

/// Unbiased single-draw estimate of the ELBO gradient, skew block in `lambda`.
pub fn euclidean_grad_estimate(params: &SkewParams, model: &dyn TargetModel, noise: &NoisePair) -> ParamGradient {
    pathwise_sample(params, model, noise).grad
}
