//! Draws via the stochastic representation
//! `theta = C (D_kappa w2 + D_alpha (|w1| - b)) + mu`.

use super::params::SkewParams;
use crate::gradient::noise::NoisePair;
use nalgebra::DVector;
use rand::Rng;

/// `z = D_kappa w2 + D_alpha w1_tilde`, the draw before the affine map.
pub fn latent(params: &SkewParams, noise: &NoisePair) -> DVector<f64> {
    let aux = params.aux();
    noise.w2.component_mul(&aux.kappa) + noise.w1_tilde().component_mul(&aux.alpha)
}

/// Map base noise to a draw from `q`.
pub fn reparam_draw(params: &SkewParams, noise: &NoisePair) -> DVector<f64> {
    params.c() * latent(params, noise) + params.mu()
}

/// `n` independent draws; deterministic given the generator state.
pub fn sample<R: Rng + ?Sized>(params: &SkewParams, rng: &mut R, n: usize) -> Vec<DVector<f64>> {
    (0..n)
        .map(|_| reparam_draw(params, &NoisePair::draw(rng, params.dim())))
        .collect()
}
